# SPDX-License-Identifier: BSD-3-Clause

'''
Synthetic, corresponded and labelled populations of hemipelvis-like meshes.

The template is an icosphere deformed into a tall ellipsoid whose upper end flares into a thin blade
(the crest analog) and whose lower front carries a spherical cap depression (the acetabulum analog).
Shapes are drawn from a known linear generative model over smooth trigonometric displacement fields,
so every experiment has an exact ground truth to compare against.

On top of the shared model every shape carries a few bends of its own: soft ramps across randomly
placed planes. Their planes differ from shape to shape, so a model trained on the other shapes can not
represent them, much like the individual anatomy a clinical model never fully explains.
'''

import json
import logging         as log
from itertools         import product
from pathlib           import Path
from typing            import Any, NamedTuple, Sequence

import numpy           as np
import numpy.typing    as npt
import trimesh

from ..mesh            import TriMesh, VertexMask
from ..mesh.ply        import load_mesh, save_mesh
from ..support.hashing import mesh_digest, provenance, set_digest
from ..types.constants import ACETABULUM_LABEL, CREST_LABEL
from ..types.errors    import ConfigurationError, MeshFormatError

__all__ = (
	'SynthSpec',
	'GroundTruth',

	'make_template',
	'mode_fields',
	'bend_field',
	'generate_population',
	'write_dataset',
	'load_dataset',

	'TEMPLATE_RADII',
	'CUP_AXIS',
)

TEMPLATE_RADII = (60.0, 25.0, 100.0)
''' Semi-axes of the template ellipsoid in millimetres '''

CUP_AXIS = np.array([0.0, 1.0, -0.6]) / np.linalg.norm([0.0, 1.0, -0.6])
''' Direction of the acetabulum analog on the unit sphere '''

CUP_DEPTH = 15.0
''' Radial depth of the cup depression at its centre, in millimetres '''

CUP_EXTENT = 0.8
''' Cosine of the angular radius of the cup depression '''

CUP_LABEL_EXTENT = 0.85
''' Cosine of the angular radius of the acetabulum label '''

CREST_LABEL_HEIGHT = 0.8
''' Unit sphere height above which vertices are labelled crest '''

MAX_ATTEMPTS = 16
''' Re-draws allowed per shape before generation gives up '''

# Low frequency wave vectors in {0, 1, 2}^3, lowest total frequency first
FREQUENCIES: tuple[tuple[int, int, int], ...] = tuple(sorted(
	(k for k in product(range(3), repeat = 3) if any(k)), key = lambda k: (sum(k), k[::-1])
))

class SynthSpec(NamedTuple):
	'''
	Parameters of a synthetic population.

	Attributes
	----------
	template_resolution : int
		Icosphere subdivision level of the template.

	generative_modes : int
		Number ``g`` of displacement fields in the generative model.

	coefficient_sigma : tuple[float, ...] | None
		Per-mode coefficient standard deviation in millimetres. Defaults to ``g`` values graded linearly
		from 3.0 down to 0.3.

	noise_sigma : float
		Standard deviation of the iid per-coordinate jitter, in millimetres.

	sample_count : int
		Number ``S`` of shapes.

	seed : int
		Root seed of every random draw.

	bend_count : int
		Number of individual bends per shape.

	bend_sigma : float
		Standard deviation of a bend's slope, in millimetres of displacement per millimetre past its
		plane. Zero keeps every shape inside the generative span.

	bend_width : float
		Width of the soft transition at a bend's plane, in millimetres.
	'''

	template_resolution: int                       = 3
	generative_modes:    int                       = 10
	coefficient_sigma:   tuple[float, ...] | None  = None
	noise_sigma:         float                     = 0.2
	sample_count:        int                       = 42
	seed:                int                       = 0
	bend_count:          int                       = 4
	bend_sigma:          float                     = 0.015
	bend_width:          float                     = 10.0

	@property
	def in_span(self) -> bool:
		''' Whether every shape lies exactly in the generative span, noise and bends both off '''
		return self.noise_sigma == 0.0 and (self.bend_count == 0 or self.bend_sigma == 0.0)

	@property
	def sigmas(self) -> tuple[float, ...]:
		if self.coefficient_sigma is None:
			return tuple(float(s) for s in np.linspace(3.0, 0.3, self.generative_modes))
		return tuple(float(s) for s in self.coefficient_sigma)

	def validate(self) -> None:
		'''
		Raises
		------
		ConfigurationError
			If the settings are inconsistent.
		'''

		if self.template_resolution < 0:
			raise ConfigurationError(f'Template resolution must be non-negative, got {self.template_resolution}')
		if not 1 <= self.generative_modes <= len(FREQUENCIES):
			raise ConfigurationError(
				f'Generative mode count must be within [1, {len(FREQUENCIES)}], got {self.generative_modes}'
			)
		if self.sample_count < self.generative_modes + 2:
			raise ConfigurationError(
				f'At least {self.generative_modes + 2} shapes are needed for {self.generative_modes} modes, '
				f'got {self.sample_count}'
			)
		if len(self.sigmas) != self.generative_modes:
			raise ConfigurationError(
				f'Expected {self.generative_modes} coefficient sigmas, got {len(self.sigmas)}'
			)
		if min(self.sigmas) < 0.0 or self.noise_sigma < 0.0 or self.bend_sigma < 0.0:
			raise ConfigurationError('Standard deviations must be non-negative')
		if self.bend_count < 0:
			raise ConfigurationError(f'Bend count must be non-negative, got {self.bend_count}')
		if self.bend_width <= 0.0:
			raise ConfigurationError(f'Bend width must be positive, got {self.bend_width}')
		if not 0 <= self.seed < 2**64:
			raise ConfigurationError(f'Seed must be a 64-bit unsigned integer, got {self.seed}')

	def to_dict(self) -> dict[str, Any]:
		return {**self._asdict(), 'coefficient_sigma': list(self.sigmas)}

class GroundTruth(NamedTuple):
	'''
	The generative record of a synthetic population.

	Attributes
	----------
	spec : SynthSpec
		The settings the population was drawn from.

	template : TriMesh
		The labelled template.

	modes : numpy.ndarray
		``3N x g`` displacement fields, mutually orthogonal with a per-vertex RMS of 1 mm.

	coefficients : numpy.ndarray
		``S x g`` drawn coefficients, in millimetres.

	attempts : tuple[int, ...]
		The draw that was accepted for each shape, zero unless a flipped triangle forced a re-draw.

	bends : numpy.ndarray
		``S x bend_count x 8`` bend parameters, each row the plane normal, the plane offset (mm), the
		displacement direction and the slope.
	'''

	spec:         SynthSpec
	template:     TriMesh
	modes:        npt.NDArray[np.float64]
	coefficients: npt.NDArray[np.float64]
	attempts:     tuple[int, ...]
	bends:        npt.NDArray[np.float64]

	def to_dict(self) -> dict[str, Any]:
		''' JSON-ready description, mode fields described by their basis rather than stored '''

		return {
			'spec': self.spec.to_dict(),
			'basis': [
				{'axis': 'xyz'[j % 3], 'frequency': list(FREQUENCIES[j])}
				for j in range(self.modes.shape[1])
			],
			'coefficients': self.coefficients.tolist(),
			'attempts':     list(self.attempts),
			'bends': [
				[
					{'normal': b[0:3].tolist(), 'offset': float(b[3]), 'direction': b[4:7].tolist(), 'slope': float(b[7])}
					for b in shape
				]
				for shape in self.bends
			],
			'template_digest': mesh_digest(self.template),
		}

def make_template(resolution: int = 3) -> TriMesh:
	'''
	Build the labelled hemipelvis proxy template.

	Parameters
	----------
	resolution : int
		Icosphere subdivision level. Level 0 has 12 vertices and 20 faces, each level quadruples the
		face count.

	Returns
	-------
	TriMesh
		A closed genus-0 mesh with disjoint ``acetabulum`` and ``crest`` labels.
	'''

	if resolution < 0:
		raise ValueError(f'Resolution must be non-negative, got {resolution}')

	sphere = trimesh.creation.icosphere(subdivisions = resolution, radius = 1.0)
	unit   = np.asarray(sphere.vertices, dtype = np.float64)
	unit   = unit / np.linalg.norm(unit, axis = 1)[:, None]
	faces  = np.asarray(sphere.faces, dtype = np.int64)

	x, y, z = unit.T
	top     = np.maximum(z, 0.0)
	verts   = np.column_stack((
		TEMPLATE_RADII[0] * x * (1.0 + 0.5 * top ** 2),
		TEMPLATE_RADII[1] * y * (1.0 - 0.5 * top),
		TEMPLATE_RADII[2] * z,
	))

	cos_cup = unit @ CUP_AXIS
	weight  = np.clip((cos_cup - CUP_EXTENT) / (1.0 - CUP_EXTENT), 0.0, 1.0)
	radial  = verts / np.linalg.norm(verts, axis = 1)[:, None]
	verts   = verts - (CUP_DEPTH * weight ** 2)[:, None] * radial

	labels = {
		ACETABULUM_LABEL: VertexMask(cos_cup >= CUP_LABEL_EXTENT),
		CREST_LABEL:      VertexMask(z >= CREST_LABEL_HEIGHT),
	}

	mesh = TriMesh(verts, faces, labels)
	log.debug(f'Built template {mesh!r} at resolution {resolution}')
	return mesh

def mode_fields(template: TriMesh, count: int) -> npt.NDArray[np.float64]:
	'''
	Orthogonal smooth displacement fields over the template vertices.

	Field ``j`` displaces along axis ``j mod 3`` by ``cos(pi / 2 * (k_j . u) + pi / 4)``, where ``u`` are
	the vertex positions normalized to the template's bounding box ``[-1, 1]^3`` and ``k_j`` the ``j``-th
	lowest wave vector. The fields are orthonormalized and scaled to a per-vertex RMS of 1 mm.

	Returns
	-------
	numpy.ndarray
		``3N x count`` field matrix.
	'''

	if not 1 <= count <= len(FREQUENCIES):
		raise ValueError(f'Field count must be within [1, {len(FREQUENCIES)}], got {count}')

	verts  = template.vertices
	lo, hi = verts.min(axis = 0), verts.max(axis = 0)
	u      = (2.0 * verts - (lo + hi)) / (hi - lo)

	raw = np.zeros((3 * template.vertex_count, count))
	for j in range(count):
		k = np.asarray(FREQUENCIES[j], dtype = np.float64)
		raw[(j % 3)::3, j] = np.cos(0.5 * np.pi * (u @ k) + 0.25 * np.pi)

	q, r = np.linalg.qr(raw)
	q   *= np.sign(np.where(np.diag(r) == 0.0, 1.0, np.diag(r)))
	return q * np.sqrt(template.vertex_count)

def _face_normals(vertices: npt.NDArray[np.float64], faces: npt.NDArray[np.int64]) -> npt.NDArray[np.float64]:
	tri = vertices[faces]
	return np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0])

def bend_field(
	positions: npt.NDArray[np.float64], bends: npt.NDArray[np.float64], width: float
) -> npt.NDArray[np.float64]:
	'''
	Displacement of ``positions`` by a set of bends.

	Each bend moves points along its direction by ``slope * width * log(1 + exp(d / width))``, where ``d``
	is the signed distance past its plane. Far behind the plane nothing moves, far past it the
	displacement grows linearly.

	Parameters
	----------
	positions : numpy.ndarray
		``(N, 3)`` template positions.

	bends : numpy.ndarray
		``(B, 8)`` bend parameters as stored in :py:attr:`GroundTruth.bends`.

	width : float
		Transition width in millimetres.

	Returns
	-------
	numpy.ndarray
		``(N, 3)`` displacements.
	'''

	dist = (positions @ bends[:, 0:3].T - bends[:, 3]) / width
	ramp = width * np.logaddexp(0.0, dist)
	return (ramp * bends[:, 7]) @ bends[:, 4:7]

def _draw_bends(rng: np.random.Generator, positions: npt.NDArray[np.float64], spec: SynthSpec) -> npt.NDArray[np.float64]:
	normal    = rng.standard_normal((spec.bend_count, 3))
	normal   /= np.linalg.norm(normal, axis = 1)[:, None]
	extent    = positions @ normal.T
	offset    = extent.min(axis = 0) + rng.random(spec.bend_count) * np.ptp(extent, axis = 0)
	direction = rng.standard_normal((spec.bend_count, 3))
	direction /= np.linalg.norm(direction, axis = 1)[:, None]
	slope     = rng.standard_normal(spec.bend_count) * spec.bend_sigma
	return np.column_stack((normal, offset, direction, slope))

def generate_population(spec: SynthSpec = SynthSpec()) -> tuple[list[TriMesh], GroundTruth]:
	'''
	Draw a corresponded population from the generative model.

	Shape ``s`` is ``template + sum_j c_sj mode_j + bends_s + noise`` with ``c_sj ~ N(0, sigma_j^2)``. Each
	shape draws from its own stream derived from ``(seed, s, attempt)``, so a shape never depends on the
	others. A draw that flips any triangle against the template is rejected and re-drawn.

	Raises
	------
	ConfigurationError
		If ``spec`` is inconsistent, or a shape could not be drawn without flipped triangles.
	'''

	spec.validate()

	template = make_template(spec.template_resolution)
	modes    = mode_fields(template, spec.generative_modes)
	sigma    = np.asarray(spec.sigmas)
	normals  = _face_normals(template.vertices, template.faces)
	count    = template.vertex_count

	meshes: list[TriMesh] = []
	coefficients = np.zeros((spec.sample_count, spec.generative_modes))
	bends        = np.zeros((spec.sample_count, spec.bend_count, 8))
	attempts: list[int] = []

	for index in range(spec.sample_count):
		for attempt in range(MAX_ATTEMPTS):
			rng   = np.random.default_rng(np.random.SeedSequence(spec.seed, spawn_key = (index, attempt)))
			coeff = rng.standard_normal(spec.generative_modes) * sigma
			noise = rng.standard_normal((count, 3)) * spec.noise_sigma
			bend  = _draw_bends(rng, template.vertices, spec)
			verts = (
				template.vertices + (modes @ coeff).reshape(count, 3) +
				bend_field(template.vertices, bend, spec.bend_width) + noise
			)

			flipped = np.einsum('ij,ij->i', _face_normals(verts, template.faces), normals) <= 0.0
			if not flipped.any():
				break
			log.debug(f'Shape {index} attempt {attempt} flipped {int(flipped.sum())} triangles, re-drawing')
		else:
			raise ConfigurationError(
				f'Shape {index} still had flipped triangles after {MAX_ATTEMPTS} draws, reduce the sigmas'
			)

		meshes.append(template.with_vertices(verts))
		coefficients[index] = coeff
		bends[index]        = bend
		attempts.append(attempt)

	log.info(f'Generated {spec.sample_count} shapes with {spec.generative_modes} modes from seed {spec.seed}')
	return (meshes, GroundTruth(spec, template, modes, coefficients, tuple(attempts), bends))

def write_dataset(
	directory: Path | str, meshes: Sequence[TriMesh], truth: GroundTruth, *,
	run_config: dict[str, Any] | None = None, text: bool = False
) -> dict[str, Any]:
	'''
	Write a population as a dataset directory.

	The directory receives ``template.ply``, ``shape_000.ply`` onwards, ``ground_truth.json`` and a
	``manifest.json`` listing the shape files in order with their content digests.

	Returns
	-------
	dict
		The manifest.
	'''

	directory = Path(directory)
	directory.mkdir(parents = True, exist_ok = True)

	prov = provenance(seed = truth.spec.seed, run_config = run_config or truth.spec.to_dict())
	comments = {'gashadokuro_version': prov['gashadokuro_version'], 'seed': str(truth.spec.seed)}

	save_mesh(truth.template, directory / 'template.ply', text = text, comments = comments)

	files:   list[str] = []
	digests: list[str] = []
	for index, mesh in enumerate(meshes):
		name = f'shape_{index:03d}.ply'
		save_mesh(mesh, directory / name, text = text, comments = comments)
		files.append(name)
		digests.append(mesh_digest(mesh))

	manifest = {
		'files':        files,
		'digests':      digests,
		'dataset_hash': set_digest(digests),
		'template':     'template.ply',
		'provenance':   prov,
	}

	(directory / 'ground_truth.json').write_text(json.dumps(truth.to_dict(), indent = 2, sort_keys = True) + '\n')
	(directory / 'manifest.json').write_text(json.dumps(manifest, indent = 2, sort_keys = True) + '\n')
	log.info(f'Wrote {len(files)} shapes to \'{directory}\'')
	return manifest

def load_dataset(directory: Path | str, *, axis_order: str = 'xyz') -> list[TriMesh]:
	'''
	Load the shapes of a dataset directory in manifest order.

	Without a manifest every ``*.ply`` file except ``template.ply`` is loaded in name order.

	Raises
	------
	MeshFormatError
		If the manifest is unreadable or lists a missing file.
	'''

	directory = Path(directory)
	manifest  = directory / 'manifest.json'

	if manifest.exists():
		try:
			names = [str(n) for n in json.loads(manifest.read_text())['files']]
		except (json.JSONDecodeError, KeyError, TypeError) as e:
			raise MeshFormatError(manifest, f'invalid dataset manifest: {e}') from e
	else:
		names = sorted(p.name for p in directory.glob('*.ply') if p.name != 'template.ply')

	return [load_mesh(directory / name, axis_order = axis_order) for name in names]
