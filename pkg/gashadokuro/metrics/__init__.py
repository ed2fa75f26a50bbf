# SPDX-License-Identifier: BSD-3-Clause

'''
Surface and vertex error statistics.

Surface errors are one-sided: the distance from each vertex of an estimate to the nearest point on the
ground truth surface. Vertex errors are distances between same-index vertices of two corresponded
meshes, and bound the surface error from above.
'''

import math
from typing            import Any, Iterable, NamedTuple

import numpy           as np
import numpy.typing    as npt

from .distance         import TriangleIndex, surface_distance
from ..mesh            import TriMesh, VertexMask
from ..mesh.regions    import seam_vertices
from ..types.errors    import EmptyRegionError

__all__ = (
	'ErrorStats',
	'AggregateStats',

	'region_errors',
	'region_error_stats',
	'seam_gap',
	'aggregate_rows',
)

class ErrorStats(NamedTuple):
	'''
	Error summary of one estimate against its ground truth over one region, in millimetres.

	``mean_surface <= rms_surface <= max_surface`` always holds.
	'''

	rms_surface:  float
	max_surface:  float
	mean_surface: float
	rms_vertex:   float
	sample_count: int

	@staticmethod
	def zero() -> 'ErrorStats':
		''' The statistics of an empty region '''
		return ErrorStats(0.0, 0.0, 0.0, 0.0, 0)

	@staticmethod
	def from_distances(surface: npt.ArrayLike, vertex: npt.ArrayLike) -> 'ErrorStats':
		'''
		Summarize per-sample surface and vertex distances.

		Raises
		------
		ValueError
			If the two arrays differ in length.
		'''

		s = np.asarray(surface, dtype = np.float64).reshape(-1)
		v = np.asarray(vertex, dtype = np.float64).reshape(-1)
		if s.shape != v.shape:
			raise ValueError(f'Got {s.shape[0]} surface distances but {v.shape[0]} vertex distances')
		if s.size == 0:
			return ErrorStats.zero()

		mean = float(s.mean())
		peak = float(s.max())
		rms  = float(np.sqrt(np.mean(s * s)))
		# Rounding can break the ordering by an ulp
		rms  = min(max(rms, mean), peak)

		return ErrorStats(rms, peak, mean, float(np.sqrt(np.mean(v * v))), int(s.size))

	def to_dict(self) -> dict[str, Any]:
		return self._asdict()

	@staticmethod
	def from_dict(data: dict[str, Any]) -> 'ErrorStats':
		return ErrorStats(
			float(data['rms_surface']), float(data['max_surface']), float(data['mean_surface']),
			float(data['rms_vertex']), int(data['sample_count'])
		)

class AggregateStats(NamedTuple):
	'''
	Population level aggregates over the per-iteration rows of one experiment cell.

	Attributes
	----------
	rms_of_mean_surface : float
		RMS over iterations of each iteration's mean surface error.

	mean_of_max_surface : float
		Average over iterations of each iteration's maximum surface error.

	mean_of_mean_surface : float
		Average over iterations of each iteration's mean surface error.

	rms_vertex : float
		RMS over iterations of each iteration's RMS vertex error.

	iteration_count : int
		Rows contributing to the aggregates, degenerate rows included as zero error.

	degenerate_count : int
		Rows whose evaluation region was empty.

	failed_count : int
		Rows that failed and carry no statistics. They do not contribute.
	'''

	rms_of_mean_surface:  float
	mean_of_max_surface:  float
	mean_of_mean_surface: float
	rms_vertex:           float
	iteration_count:      int
	degenerate_count:     int
	failed_count:         int

	def to_dict(self) -> dict[str, Any]:
		return self._asdict()

	@staticmethod
	def from_dict(data: dict[str, Any]) -> 'AggregateStats':
		def real(key: str) -> float:
			value = data[key]
			return math.nan if value is None else float(value)

		return AggregateStats(
			real('rms_of_mean_surface'), real('mean_of_max_surface'), real('mean_of_mean_surface'),
			real('rms_vertex'), int(data['iteration_count']), int(data['degenerate_count']),
			int(data['failed_count'])
		)

def aggregate_rows(rows: Iterable[ErrorStats | None]) -> AggregateStats:
	'''
	Aggregate per-iteration statistics of one experiment cell.

	``None`` marks a failed iteration. A row with a ``sample_count`` of zero is degenerate and enters the
	aggregates as zero error. When no row contributes every aggregate is ``nan``.
	'''

	valid: list[ErrorStats] = []
	failed = 0
	for row in rows:
		if row is None:
			failed += 1
		else:
			valid.append(row)

	degenerate = sum(1 for r in valid if r.sample_count == 0)
	if not valid:
		return AggregateStats(math.nan, math.nan, math.nan, math.nan, 0, degenerate, failed)

	means = np.array([r.mean_surface for r in valid])
	maxes = np.array([r.max_surface for r in valid])
	verts = np.array([r.rms_vertex for r in valid])

	return AggregateStats(
		rms_of_mean_surface  = float(np.sqrt(np.mean(means * means))),
		mean_of_max_surface  = float(np.mean(maxes)),
		mean_of_mean_surface = float(np.mean(means)),
		rms_vertex           = float(np.sqrt(np.mean(verts * verts))),
		iteration_count      = len(valid),
		degenerate_count     = degenerate,
		failed_count         = failed,
	)

def region_errors(
	estimate: TriMesh, truth: TriMesh, region: VertexMask, *, index: TriangleIndex | None = None
) -> tuple[npt.NDArray[np.float64], npt.NDArray[np.float64]]:
	'''
	Per-vertex surface and vertex distances over ``region``, in ascending vertex index order.

	Takes the same arguments and raises the same errors as :py:func:`region_error_stats`.
	'''

	truth.check_topology(estimate)
	region.check_against(truth.vertex_count)
	if not region.any():
		raise EmptyRegionError('evaluation region')

	points  = estimate.vertices[region.bits]
	surface = surface_distance(points, truth, index = index)
	vertex  = np.linalg.norm(points - truth.vertices[region.bits], axis = 1)
	return (surface, vertex)

def region_error_stats(
	estimate: TriMesh, truth: TriMesh, region: VertexMask, *, index: TriangleIndex | None = None
) -> ErrorStats:
	'''
	Error statistics of ``estimate`` against ``truth`` over the vertices in ``region``.

	Surface errors are measured from the estimate's vertices to the truth surface.

	Parameters
	----------
	estimate : TriMesh
		The estimated shape.

	truth : TriMesh
		The ground truth, corresponded with ``estimate``.

	region : VertexMask
		The vertices of ``estimate`` that are evaluated.

	index : TriangleIndex | None
		A prebuilt index over ``truth``.

	Raises
	------
	TopologyMismatchError
		If the meshes or the region do not match.

	EmptyRegionError
		If ``region`` is empty.
	'''

	return ErrorStats.from_distances(*region_errors(estimate, truth, region, index = index))

def seam_gap(prior: TriMesh, known: VertexMask, donor: TriMesh) -> float:
	'''
	The largest displacement between the prior and the donor surface over the seam vertices.

	Parameters
	----------
	prior : TriMesh
		The kept partial surface.

	known : VertexMask
		The known region of ``prior``.

	donor : TriMesh
		The surface supplying the unknown region.

	Raises
	------
	EmptyRegionError
		If the known region has no seam.
	'''

	prior.check_topology(donor)
	seam = seam_vertices(prior, known)
	if not seam.any():
		raise EmptyRegionError('seam', 'known region shares no edge with an unknown vertex')

	idx = seam.bits
	return float(np.linalg.norm(prior.vertices[idx] - donor.vertices[idx], axis = 1).max())
