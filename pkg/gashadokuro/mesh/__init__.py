# SPDX-License-Identifier: BSD-3-Clause

'''
Triangle mesh and vertex region types.

Meshes handled by Gashadokuro are *corresponded*: every mesh of a population shares one template
connectivity, and vertex ``i`` denotes the same anatomical location in each of them. Regions of a
mesh (known anatomy, labelled landmarks, seams) are expressed as :py:class:`VertexMask` values.

Both types are immutable once constructed, their backing arrays are flagged read-only.
'''

import json
from functools       import cached_property
from pathlib         import Path
from typing          import Iterable, Mapping

import numpy         as np
import numpy.typing  as npt

from ..types.errors  import ConfigurationError, InvalidMeshError, TopologyMismatchError

__all__ = (
	'TriMesh',
	'VertexMask',

	'load_mask',
	'save_mask',
)

def _frozen(array: npt.NDArray) -> npt.NDArray:
	array.setflags(write = False)
	return array

class VertexMask:
	'''
	Boolean membership of each vertex of a mesh in some region.

	Parameters
	----------
	bits : array_like of bool
		One entry per mesh vertex.

	Attributes
	----------
	bits : numpy.ndarray
		Read-only boolean array, one entry per vertex.
	'''

	__slots__ = ('bits', )

	bits: npt.NDArray[np.bool_]

	def __init__(self, bits: npt.ArrayLike) -> None:
		arr = np.array(bits, dtype = np.bool_)
		if arr.ndim != 1:
			raise ValueError(f'A vertex mask must be one dimensional, got shape {arr.shape}')
		self.bits = _frozen(arr)

	@staticmethod
	def full(vertex_count: int) -> 'VertexMask':
		''' A mask selecting every vertex '''
		return VertexMask(np.ones(vertex_count, dtype = np.bool_))

	@staticmethod
	def empty(vertex_count: int) -> 'VertexMask':
		''' A mask selecting no vertex '''
		return VertexMask(np.zeros(vertex_count, dtype = np.bool_))

	@staticmethod
	def from_indices(vertex_count: int, indices: Iterable[int]) -> 'VertexMask':
		'''
		Build a mask from the indices of its member vertices.

		Raises
		------
		ValueError
			If any index is outside ``[0, vertex_count)``.
		'''

		idx  = np.fromiter(indices, dtype = np.int64)
		if idx.size and (idx.min() < 0 or idx.max() >= vertex_count):
			raise ValueError(f'Mask index out of range for {vertex_count} vertices')
		bits = np.zeros(vertex_count, dtype = np.bool_)
		bits[idx] = True
		return VertexMask(bits)

	@property
	def mesh_vertex_count(self) -> int:
		''' The vertex count this mask was built against '''
		return int(self.bits.shape[0])

	@property
	def count(self) -> int:
		''' Number of member vertices '''
		return int(np.count_nonzero(self.bits))

	@property
	def indices(self) -> npt.NDArray[np.int64]:
		''' Sorted indices of the member vertices '''
		return np.flatnonzero(self.bits).astype(np.int64)

	def any(self) -> bool:
		return bool(self.bits.any())

	def all(self) -> bool:
		return bool(self.bits.all())

	def issubset(self, other: 'VertexMask') -> bool:
		self._check_length(other)
		return not bool(np.any(self.bits & ~other.bits))

	def check_against(self, vertex_count: int) -> None:
		'''
		Ensure the mask was built for a mesh with ``vertex_count`` vertices.

		Raises
		------
		TopologyMismatchError
			If the lengths differ.
		'''

		if self.mesh_vertex_count != vertex_count:
			raise TopologyMismatchError('mask length', vertex_count, self.mesh_vertex_count)

	def _check_length(self, other: 'VertexMask') -> None:
		other.check_against(self.mesh_vertex_count)

	def __invert__(self) -> 'VertexMask':
		return VertexMask(~self.bits)

	def __and__(self, other: 'VertexMask') -> 'VertexMask':
		self._check_length(other)
		return VertexMask(self.bits & other.bits)

	def __or__(self, other: 'VertexMask') -> 'VertexMask':
		self._check_length(other)
		return VertexMask(self.bits | other.bits)

	def __sub__(self, other: 'VertexMask') -> 'VertexMask':
		self._check_length(other)
		return VertexMask(self.bits & ~other.bits)

	def __eq__(self, other: object) -> bool:
		if not isinstance(other, VertexMask):
			return NotImplemented
		return self.bits.shape == other.bits.shape and bool(np.array_equal(self.bits, other.bits))

	__hash__ = None # type: ignore

	def __len__(self) -> int:
		return self.mesh_vertex_count

	def __repr__(self) -> str:
		return f'<VertexMask count={self.count} vertices={self.mesh_vertex_count}>'

class TriMesh:
	'''
	A triangle mesh with optional named per-vertex labels.

	Coordinates are in millimetres, the axial direction is +z.

	Parameters
	----------
	vertices : array_like
		``(N, 3)`` vertex positions.

	faces : array_like
		``(F, 3)`` vertex indices of each triangle.

	labels : Mapping[str, VertexMask | array_like] | None
		Optional named vertex regions.

	Attributes
	----------
	vertices : numpy.ndarray
		Read-only ``(N, 3)`` float64 positions.

	faces : numpy.ndarray
		Read-only ``(F, 3)`` int64 triangle indices.

	labels : dict[str, VertexMask]
		Named vertex regions.

	Raises
	------
	InvalidMeshError
		If the vertex or face data violate the mesh invariants.
	'''

	def __init__(
		self, vertices: npt.ArrayLike, faces: npt.ArrayLike,
		labels: Mapping[str, 'VertexMask | npt.ArrayLike'] | None = None
	) -> None:
		verts = np.array(vertices, dtype = np.float64)
		tris  = np.array(faces, dtype = np.int64)

		if verts.ndim != 2 or verts.shape[1] != 3:
			raise InvalidMeshError(f'vertices must have shape (N, 3), got {verts.shape}')
		if tris.ndim != 2 or tris.shape[1] != 3:
			raise InvalidMeshError(f'faces must have shape (F, 3), got {tris.shape}')
		if verts.shape[0] < 3:
			raise InvalidMeshError(f'at least 3 vertices are required, got {verts.shape[0]}')
		if tris.shape[0] < 1:
			raise InvalidMeshError('at least 1 face is required')
		if not np.all(np.isfinite(verts)):
			raise InvalidMeshError('vertex coordinates must be finite')

		lo, hi = int(tris.min()), int(tris.max())
		if lo < 0 or hi >= verts.shape[0]:
			bad = lo if lo < 0 else hi
			raise InvalidMeshError(f'face references vertex {bad} but the mesh has {verts.shape[0]} vertices')

		repeats = (tris[:, 0] == tris[:, 1]) | (tris[:, 1] == tris[:, 2]) | (tris[:, 0] == tris[:, 2])
		if repeats.any():
			raise InvalidMeshError(f'face {int(np.flatnonzero(repeats)[0])} repeats a vertex index')

		self.vertices = _frozen(verts)
		self.faces    = _frozen(tris)
		self.labels: dict[str, VertexMask] = {}

		for name, region in (labels or {}).items():
			mask = region if isinstance(region, VertexMask) else VertexMask(region)
			if mask.mesh_vertex_count != self.vertex_count:
				raise InvalidMeshError(
					f'label \'{name}\' has {mask.mesh_vertex_count} entries for {self.vertex_count} vertices'
				)
			self.labels[name] = mask

	@property
	def vertex_count(self) -> int:
		return int(self.vertices.shape[0])

	@property
	def face_count(self) -> int:
		return int(self.faces.shape[0])

	@property
	def flat(self) -> npt.NDArray[np.float64]:
		''' The ``3N`` shape vector ``(x0, y0, z0, x1, ...)`` '''
		return self.vertices.reshape(-1)

	@cached_property
	def edges(self) -> npt.NDArray[np.int64]:
		''' Unique undirected edges as ``(E, 2)`` sorted index pairs '''

		pairs = np.concatenate((self.faces[:, [0, 1]], self.faces[:, [1, 2]], self.faces[:, [2, 0]]))
		pairs.sort(axis = 1)
		return _frozen(np.unique(pairs, axis = 0))

	@property
	def bbox_diagonal(self) -> float:
		''' Length of the axis-aligned bounding box diagonal '''
		return float(np.linalg.norm(self.vertices.max(axis = 0) - self.vertices.min(axis = 0)))

	def with_vertices(self, vertices: npt.ArrayLike) -> 'TriMesh':
		''' A mesh with the same connectivity and labels but new vertex positions '''
		return TriMesh(vertices, self.faces, self.labels)

	def with_labels(self, labels: Mapping[str, VertexMask]) -> 'TriMesh':
		''' A mesh with the same geometry but a new set of labels '''
		return TriMesh(self.vertices, self.faces, labels)

	def same_topology(self, other: 'TriMesh') -> bool:
		return self.vertex_count == other.vertex_count and bool(np.array_equal(self.faces, other.faces))

	def check_topology(self, other: 'TriMesh') -> None:
		'''
		Ensure ``other`` shares this mesh's template connectivity.

		Raises
		------
		TopologyMismatchError
			If vertex counts or faces differ.
		'''

		if self.vertex_count != other.vertex_count:
			raise TopologyMismatchError('vertex count', self.vertex_count, other.vertex_count)
		if not np.array_equal(self.faces, other.faces):
			raise TopologyMismatchError('connectivity', f'{self.face_count} template faces', 'different faces')

	def label(self, name: str) -> VertexMask:
		'''
		Fetch a named label.

		Raises
		------
		ConfigurationError
			If the mesh carries no label of that name.
		'''

		try:
			return self.labels[name]
		except KeyError:
			known = ', '.join(sorted(self.labels)) or 'none'
			raise ConfigurationError(f'Mesh has no vertex label \'{name}\' (available: {known})') from None

	def __repr__(self) -> str:
		return (
			'<TriMesh '
			f'vertices={self.vertex_count} faces={self.face_count} '
			f'labels={sorted(self.labels)}'
			'>'
		)

def save_mask(mask: VertexMask, path: Path | str) -> None:
	'''
	Write a vertex mask as JSON.

	The file holds ``{"vertex_count": N, "indices": [...]}`` with the member indices in ascending order.
	'''

	doc = {'vertex_count': mask.mesh_vertex_count, 'indices': mask.indices.tolist()}
	Path(path).write_text(json.dumps(doc, sort_keys = True) + '\n')

def load_mask(path: Path | str) -> VertexMask:
	'''
	Read a vertex mask written by :py:func:`save_mask`.

	Raises
	------
	ConfigurationError
		If the file is not a valid mask document.
	'''

	try:
		doc = json.loads(Path(path).read_text())
		return VertexMask.from_indices(int(doc['vertex_count']), (int(i) for i in doc['indices']))
	except (json.JSONDecodeError, KeyError, TypeError, ValueError) as e:
		raise ConfigurationError(f'Invalid mask file \'{path}\': {e}') from e
