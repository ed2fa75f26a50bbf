# SPDX-License-Identifier: BSD-3-Clause

'''
PLY reading and writing for :py:class:`TriMesh <gashadokuro.mesh.TriMesh>`.

Supported layout:

* ``vertex`` element with ``x``, ``y``, ``z`` (written as 64-bit float, read as any numeric type).
* optional ``label`` vertex property (32-bit int), one :py:class:`VertexMask` per distinct value.
  Names come from ``comment label <value> <name>`` header lines; values without such a comment
  are named by their decimal value.
* optional ``quality`` vertex property (32-bit float) carrying a per-vertex scalar field.
* ``face`` element with a ``vertex_indices`` (or ``vertex_index``) list property of triangles.

ASCII and binary little-endian files are accepted, big-endian files are rejected.
'''

import logging         as log
from pathlib           import Path
from typing            import Mapping

import numpy           as np
import numpy.typing    as npt
from plyfile           import PlyData, PlyElement, PlyParseError

from .                 import TriMesh, VertexMask
from ..types.constants import UNLABELED_LABEL
from ..types.errors    import InvalidMeshError, MeshFormatError

__all__ = (
	'load_mesh',
	'save_mesh',
	'read_vertex_property',
)

_FACE_PROPERTIES = ('vertex_indices', 'vertex_index')

def _axis_permutation(axis_order: str) -> list[int]:
	order = axis_order.lower()
	if sorted(order) != ['x', 'y', 'z']:
		raise ValueError(f'Axis order must be a permutation of \'xyz\', got \'{axis_order}\'')
	return ['xyz'.index(c) for c in order]

def _read(path: Path) -> PlyData:
	try:
		ply = PlyData.read(str(path))
	except (PlyParseError, ValueError, EOFError, IndexError) as e:
		raise MeshFormatError(path, str(e) or type(e).__name__) from e

	if ply.byte_order == '>':
		raise MeshFormatError(path, 'big-endian binary PLY is not supported')
	return ply

def _element(ply: PlyData, path: Path, name: str):
	for el in ply.elements:
		if el.name == name:
			return el
	raise MeshFormatError(path, f'missing \'{name}\' element')

def _label_names(comments: list[str]) -> dict[int, str]:
	names: dict[int, str] = {}
	for comment in comments:
		match comment.split():
			case ['label', value, name]:
				try:
					names[int(value)] = name
				except ValueError:
					continue
			case _:
				continue
	return names

def _faces(ply: PlyData, path: Path) -> npt.NDArray[np.int64]:
	face_el = _element(ply, path, 'face')
	fields  = face_el.data.dtype.names or ()
	prop    = next((p for p in _FACE_PROPERTIES if p in fields), None)
	if prop is None:
		raise MeshFormatError(path, 'face element has no vertex_indices list')

	raw = face_el.data[prop]
	if raw.dtype == object:
		lengths = np.fromiter((len(f) for f in raw), dtype = np.int64, count = len(raw))
		if lengths.size and not np.all(lengths == 3):
			bad = int(np.flatnonzero(lengths != 3)[0])
			raise MeshFormatError(path, f'face {bad} has {int(lengths[bad])} vertices, only triangles are supported')
		if raw.size == 0:
			return np.zeros((0, 3), dtype = np.int64)
		return np.vstack(raw).astype(np.int64)

	tris = np.asarray(raw)
	if tris.ndim != 2 or tris.shape[1] != 3:
		raise MeshFormatError(path, 'only triangle faces are supported')
	return tris.astype(np.int64)

def load_mesh(path: Path | str, *, axis_order: str = 'xyz') -> TriMesh:
	'''
	Load a triangle mesh from a PLY file.

	Parameters
	----------
	path : Path | str
		The PLY file.

	axis_order : str
		Which input axes become the output ``x``, ``y`` and ``z``. ``'xzy'`` for instance makes the
		file's ``y`` axis the axial direction.

	Returns
	-------
	TriMesh
		The mesh, with one label per distinct ``label`` property value.

	Raises
	------
	MeshFormatError
		If the file is malformed or uses an unsupported encoding.

	InvalidMeshError
		If the data violates the mesh invariants, e.g. an out of range face index.
	'''

	path = Path(path)
	perm = _axis_permutation(axis_order)
	ply  = _read(path)

	vert_el = _element(ply, path, 'vertex')
	fields  = vert_el.data.dtype.names or ()
	for axis in ('x', 'y', 'z'):
		if axis not in fields:
			raise MeshFormatError(path, f'vertex element has no \'{axis}\' property')

	raw      = np.column_stack([np.asarray(vert_el.data[a], dtype = np.float64) for a in ('x', 'y', 'z')])
	vertices = raw[:, perm]
	faces    = _faces(ply, path)

	labels: dict[str, VertexMask] = {}
	if 'label' in fields:
		values = np.asarray(vert_el.data['label']).astype(np.int64)
		names  = _label_names(list(ply.comments))
		for value in np.unique(values):
			labels[names.get(int(value), str(int(value)))] = VertexMask(values == value)

	mesh = TriMesh(vertices, faces, labels)
	log.debug(f'Loaded {mesh!r} from \'{path}\'')
	return mesh

def _encode_labels(mesh: TriMesh) -> tuple[npt.NDArray[np.int32] | None, list[str]]:
	if not mesh.labels:
		return (None, [])

	values   = np.zeros(mesh.vertex_count, dtype = np.int32)
	assigned = np.zeros(mesh.vertex_count, dtype = np.bool_)
	comments = []
	# Value 0 is reserved for vertices without a label
	for value, name in enumerate(sorted(mesh.labels), start = 1):
		bits = mesh.labels[name].bits
		if np.any(bits & assigned):
			raise InvalidMeshError(f'label \'{name}\' overlaps another label, PLY labels must be disjoint')
		values[bits]    = value
		assigned       |= bits
		comments.append(f'label {value} {name}')

	if not assigned.all():
		comments.insert(0, f'label 0 {UNLABELED_LABEL}')
	return (values, comments)

def save_mesh(
	mesh: TriMesh, path: Path | str, scalars: npt.ArrayLike | None = None, *,
	text: bool = False, comments: Mapping[str, str] | None = None
) -> None:
	'''
	Write a triangle mesh to a PLY file.

	Parameters
	----------
	mesh : TriMesh
		The mesh to write, labels included.

	path : Path | str
		Destination file.

	scalars : array_like | None
		Optional per-vertex field, stored as the ``quality`` property.

	text : bool
		Write ASCII instead of binary little-endian.

	comments : Mapping[str, str] | None
		Extra ``key value`` header comments, e.g. provenance.

	Raises
	------
	ValueError
		If ``scalars`` does not hold one value per vertex.

	OSError
		If the path can not be written.
	'''

	dtype: list[tuple[str, str]] = [('x', 'f8'), ('y', 'f8'), ('z', 'f8')]

	field = None
	if scalars is not None:
		field = np.asarray(scalars, dtype = np.float64).reshape(-1)
		if field.shape[0] != mesh.vertex_count:
			raise ValueError(f'Expected {mesh.vertex_count} scalar values, got {field.shape[0]}')
		dtype.append(('quality', 'f4'))

	label_values, header = _encode_labels(mesh)
	if label_values is not None:
		dtype.append(('label', 'i4'))

	vertex = np.empty(mesh.vertex_count, dtype = dtype)
	vertex['x'] = mesh.vertices[:, 0]
	vertex['y'] = mesh.vertices[:, 1]
	vertex['z'] = mesh.vertices[:, 2]
	if field is not None:
		vertex['quality'] = field
	if label_values is not None:
		vertex['label'] = label_values

	face = np.empty(mesh.face_count, dtype = [('vertex_indices', 'i4', (3,))])
	face['vertex_indices'] = mesh.faces

	header += [f'{k} {v}' for k, v in (comments or {}).items()]

	ply = PlyData(
		[PlyElement.describe(vertex, 'vertex'), PlyElement.describe(face, 'face')],
		text = text, byte_order = '<', comments = header
	)
	ply.write(str(path))
	log.debug(f'Wrote {mesh!r} to \'{path}\'')

def read_vertex_property(path: Path | str, name: str = 'quality') -> npt.NDArray[np.float64]:
	'''
	Read a single scalar vertex property, such as a heat map's ``quality`` field.

	Raises
	------
	MeshFormatError
		If the file has no such property.
	'''

	path    = Path(path)
	vert_el = _element(_read(path), path, 'vertex')
	if name not in (vert_el.data.dtype.names or ()):
		raise MeshFormatError(path, f'vertex element has no \'{name}\' property')
	return np.asarray(vert_el.data[name], dtype = np.float64)
