# SPDX-License-Identifier: BSD-3-Clause

'''
Completion of partially known shapes from a model estimate.

Both strategies keep the known region of the prior untouched and take the unknown region from the
shape model's estimate. Cut-and-paste copies it verbatim. Smooth completion first warps the estimate
with a thin-plate spline fit on the region the prior and estimate have in common, so the donated
surface meets the prior without a step at the seam.
'''

import logging         as log
from typing            import Any, NamedTuple

import numpy           as np
import numpy.typing    as npt
from scipy.spatial     import distance

from .tps              import TPSWarp, eval_tps, fit_tps
from ..mesh            import TriMesh, VertexMask
from ..mesh.regions    import seam_vertices
from ..metrics         import seam_gap
from ..types.constants import CompletionMethod, DEFAULT_MAX_KNOTS
from ..types.errors    import EmptyRegionError

__all__ = (
	'CompletionResult',
	'TPSWarp',

	'complete',
	'cut_and_paste',
	'smooth_complete',
	'farthest_point_sampling',
	'fit_tps',
	'eval_tps',
)

class CompletionResult(NamedTuple):
	'''
	A completed shape.

	Attributes
	----------
	mesh : TriMesh
		The completed shape. Its known vertices are bit-identical to the prior's.

	known : VertexMask
		The region taken from the prior.

	method : CompletionMethod
		The strategy used.

	knot_count : int
		TPS knots used, zero for cut-and-paste.

	donor : TriMesh
		The surface the unknown region was taken from.

	metadata : dict
		Parameters and diagnostics of the run.
	'''

	mesh:       TriMesh
	known:      VertexMask
	method:     CompletionMethod
	knot_count: int
	donor:      TriMesh
	metadata:   dict[str, Any]

	def to_dict(self) -> dict[str, Any]:
		''' JSON-ready description, the meshes excluded '''
		return {
			'method':       self.method.long_name,
			'knot_count':   self.knot_count,
			'known_count':  self.known.count,
			'vertex_count': self.mesh.vertex_count,
			**self.metadata,
		}

def _check_inputs(prior: TriMesh, known: VertexMask, estimate: TriMesh) -> None:
	prior.check_topology(estimate)
	known.check_against(prior.vertex_count)
	if not known.any():
		raise EmptyRegionError('known region')
	if known.all():
		raise EmptyRegionError('unknown region', 'every vertex is known, nothing to complete')

def _join(prior: TriMesh, known: VertexMask, donor: npt.NDArray[np.float64]) -> TriMesh:
	return prior.with_vertices(np.where(known.bits[:, None], prior.vertices, donor))

def cut_and_paste(prior: TriMesh, known: VertexMask, estimate: TriMesh) -> CompletionResult:
	'''
	Keep the prior on ``known`` and copy every other vertex from ``estimate``.

	Raises
	------
	TopologyMismatchError
		If ``prior`` and ``estimate`` differ in topology.

	EmptyRegionError
		If ``known`` selects no vertex or every vertex.
	'''

	_check_inputs(prior, known, estimate)
	mesh = _join(prior, known, estimate.vertices)

	metadata: dict[str, Any] = {}
	if seam_vertices(prior, known).any():
		metadata['seam_gap'] = seam_gap(prior, known, estimate)

	return CompletionResult(mesh, known, CompletionMethod.CUT_AND_PASTE, 0, estimate, metadata)

def farthest_point_sampling(
	points: npt.ArrayLike, count: int, seeds: npt.ArrayLike | None = None
) -> npt.NDArray[np.int64]:
	'''
	Greedy farthest point subsampling.

	Starting from ``seeds`` (index 0 when none are given), repeatedly add the point farthest from
	everything selected so far. Ties go to the lowest index, so the result is deterministic.

	Parameters
	----------
	points : array_like
		``(P, 3)`` candidate positions.

	count : int
		Number of indices to return. Seeds count towards it, and are all kept even when they exceed it.

	seeds : array_like | None
		Indices that are always selected.

	Returns
	-------
	numpy.ndarray
		Selected indices in ascending order.
	'''

	pts = np.asarray(points, dtype = np.float64).reshape(-1, 3)
	if pts.shape[0] == 0:
		return np.zeros(0, dtype = np.int64)

	chosen = np.zeros(pts.shape[0], dtype = np.bool_)
	start  = np.unique(np.asarray(seeds if seeds is not None else [0], dtype = np.int64))
	if start.size == 0:
		start = np.zeros(1, dtype = np.int64)
	chosen[start] = True

	nearest = distance.cdist(pts, pts[start]).min(axis = 1)
	nearest[chosen] = -1.0

	target = min(count, pts.shape[0])
	for _ in range(int(chosen.sum()), target):
		idx = int(np.argmax(nearest))
		chosen[idx] = True
		step = pts - pts[idx]
		nearest = np.minimum(nearest, np.sqrt(np.einsum('ij,ij->i', step, step)))
		nearest[chosen] = -1.0

	return np.flatnonzero(chosen).astype(np.int64)

def _select_knots(
	estimate: TriMesh, known: VertexMask, seam: VertexMask, max_knots: int
) -> npt.NDArray[np.int64]:
	known_idx = known.indices
	if known_idx.shape[0] <= max_knots:
		return known_idx

	if seam.count >= max_knots:
		log.debug(f'Seam has {seam.count} vertices, at least the knot cap of {max_knots}, using the seam only')
		return seam.indices

	# Positions within `known_idx` of the seam vertices and of the lowest known vertex
	local = np.flatnonzero(seam.bits[known_idx])
	seeds = np.union1d(local, [0])
	picks = farthest_point_sampling(estimate.vertices[known_idx], max_knots, seeds)
	return known_idx[picks]

def smooth_complete(
	prior: TriMesh, known: VertexMask, estimate: TriMesh, max_knots: int = DEFAULT_MAX_KNOTS,
	regularization: float = 0.0
) -> CompletionResult:
	'''
	Warp ``estimate`` onto ``prior`` over the common region, then fill the unknown region from it.

	The TPS knots are the estimate's known vertices (sources) paired with the prior's same-index
	vertices (targets). When there are more than ``max_knots`` known vertices they are subsampled by
	farthest point sampling, but every seam vertex is always a knot.

	Parameters
	----------
	prior : TriMesh
		The partial shape, valid on ``known``.

	known : VertexMask
		The known region.

	estimate : TriMesh
		The model estimate of the complete shape.

	max_knots : int
		Cap on the number of TPS knots.

	regularization : float
		TPS smoothing weight, zero for exact interpolation.

	Raises
	------
	EmptyRegionError
		If ``known`` is empty or full, or has no seam.

	SingularSystemError
		If the TPS knot system can not be solved.
	'''

	_check_inputs(prior, known, estimate)
	if max_knots < 4:
		raise ValueError(f'At least 4 knots are needed, max_knots is {max_knots}')

	seam = seam_vertices(prior, known)
	if not seam.any():
		raise EmptyRegionError('seam', 'known region shares no edge with an unknown vertex')

	knots  = _select_knots(estimate, known, seam, max_knots)
	warp   = fit_tps(estimate.vertices[knots], prior.vertices[knots], regularization)
	warped = eval_tps(warp, estimate.vertices)
	donor  = estimate.with_vertices(warped)
	mesh   = _join(prior, known, warped)

	metadata: dict[str, Any] = {
		'max_knots':      max_knots,
		'regularization': regularization,
		'seam_count':     seam.count,
		'seam_gap':       seam_gap(prior, known, donor),
	}
	log.debug(f'Smooth completion with {warp.knot_count} knots, seam gap {metadata["seam_gap"]:.3e} mm')
	return CompletionResult(mesh, known, CompletionMethod.SMOOTH, warp.knot_count, donor, metadata)

def complete(
	method: CompletionMethod, prior: TriMesh, known: VertexMask, estimate: TriMesh, *,
	max_knots: int = DEFAULT_MAX_KNOTS, regularization: float = 0.0
) -> CompletionResult:
	''' Dispatch to the completion strategy named by ``method`` '''

	match method:
		case CompletionMethod.CUT_AND_PASTE:
			return cut_and_paste(prior, known, estimate)
		case CompletionMethod.SMOOTH:
			return smooth_complete(prior, known, estimate, max_knots, regularization)
		case _:
			raise ValueError(f'Unknown completion method {method!r}')
