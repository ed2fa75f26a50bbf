# SPDX-License-Identifier: BSD-3-Clause

'''
Leave-one-out evaluation of shape models and shape completion.

Two protocols are provided. :py:func:`loo_full` measures how well a model built without one shape
generalizes to it when the whole shape is known. :py:func:`loo_extrapolate` hides everything outside a
prior region of the left-out shape, estimates it from the model, completes it with each completion
method, and measures the error over the hidden region only.

Iterations are independent and may run on a thread pool. Results are always reduced in left-out index
order, so the report does not depend on the number of workers.
'''

import logging             as log
from concurrent.futures    import ThreadPoolExecutor
from typing                import Any, Callable, Iterable, NamedTuple, Sequence, TypeVar

import numpy               as np
import numpy.typing        as npt

from ..completion          import complete
from ..mesh                import TriMesh, VertexMask
from ..mesh.regions        import build_prior_mask
from ..metrics             import AggregateStats, ErrorStats, aggregate_rows, region_error_stats, region_errors
from ..metrics.distance    import TriangleIndex
from ..model               import build_ssm, project_full, project_partial, synthesize
from ..support.hashing     import mesh_digest, provenance, set_digest
from ..types.constants     import (
	ACETABULUM_LABEL, DEFAULT_CREST_FRACTIONS, DEFAULT_MAX_KNOTS, HEATMAP_KNOWN_SENTINEL,
	CompletionMethod, IterationStatus
)
from ..types.errors        import ConfigurationError, GashadokuroError, IterationFailedError, TrainingSetError

__all__ = (
	'PriorConfig',
	'IterationRecord',
	'ExperimentReport',

	'DEFAULT_PRIOR_CONFIGS',

	'loo_full',
	'loo_extrapolate',
	'population_mean',
)

T = TypeVar('T')

Cell = tuple['PriorConfig | None', CompletionMethod | None]

class PriorConfig(NamedTuple):
	'''
	Which anatomy of a left-out shape is treated as known.

	Attributes
	----------
	crest_fraction : float
		Fraction of the shape height kept at the top, within ``[0, 1]``.

	include_acetabulum : bool
		Whether the axial slab spanning the acetabulum label is kept.
	'''

	crest_fraction:     float
	include_acetabulum: bool = True

	def validate(self) -> None:
		if not 0.0 <= self.crest_fraction <= 1.0:
			raise ConfigurationError(f'Crest fraction must be within [0, 1], got {self.crest_fraction}')
		if not self.include_acetabulum and self.crest_fraction == 0.0:
			raise ConfigurationError('A prior without the acetabulum needs a nonzero crest fraction')

	@property
	def label(self) -> str:
		''' Human readable name, e.g. ``acetabulum+5%`` '''
		pct = f'{self.crest_fraction * 100:g}%'
		return f'acetabulum+{pct}' if self.include_acetabulum else f'crest {pct}'

	def to_dict(self) -> dict[str, Any]:
		return self._asdict()

	@staticmethod
	def from_dict(data: dict[str, Any]) -> 'PriorConfig':
		return PriorConfig(float(data['crest_fraction']), bool(data.get('include_acetabulum', True)))

DEFAULT_PRIOR_CONFIGS: tuple[PriorConfig, ...] = tuple(PriorConfig(f) for f in DEFAULT_CREST_FRACTIONS)
''' The acetabulum plus 0, 5, 10 and 15 percent of crest '''

class IterationRecord(NamedTuple):
	'''
	The outcome of one ``(left-out shape, prior config, method)`` cell.

	Attributes
	----------
	left_out : int
		Index of the left-out shape.

	config : PriorConfig | None
		The prior, ``None`` for the complete-anatomy protocol.

	method : CompletionMethod | None
		The completion method, ``None`` for the complete-anatomy protocol.

	status : IterationStatus
		Whether the cell completed, was degenerate or failed.

	stats : ErrorStats | None
		Error statistics over the evaluated region, ``None`` when failed.

	unknown_count : int
		Number of evaluated (hidden) vertices.

	knot_count : int
		TPS knots used.

	seam_gap : float | None
		Largest seam displacement of the donor surface, when there is a seam.

	training_hash : str
		Order independent digest of the shapes the model was built from.

	error : str | None
		The failure message of a failed cell.
	'''

	left_out:      int
	config:        PriorConfig | None
	method:        CompletionMethod | None
	status:        IterationStatus
	stats:         ErrorStats | None
	unknown_count: int
	knot_count:    int
	seam_gap:      float | None
	training_hash: str
	error:         str | None = None

	@property
	def cell(self) -> Cell:
		return (self.config, self.method)

class ExperimentReport:
	'''
	Per-iteration rows, per-cell aggregates and per-vertex error fields of a leave-one-out run.

	Parameters
	----------
	kind : str
		``full`` or ``extrapolate``.

	rows : Sequence[IterationRecord]
		Every iteration row, in left-out, config, method order.

	vertex_count : int
		Template vertex count.

	heatmaps : dict | None
		Per-cell mean surface error of each vertex over the iterations where it was hidden,
		:py:data:`HEATMAP_KNOWN_SENTINEL` where it never was.

	provenance : dict | None
		How the report was produced.
	'''

	def __init__(
		self, kind: str, rows: Sequence[IterationRecord], vertex_count: int,
		heatmaps: dict[Cell, npt.NDArray[np.float64]] | None = None, provenance: dict[str, Any] | None = None
	) -> None:
		if kind not in ('full', 'extrapolate'):
			raise ValueError(f'Unknown report kind \'{kind}\'')

		self.kind         = kind
		self.rows         = list(rows)
		self.vertex_count = int(vertex_count)
		self.heatmaps     = dict(heatmaps or {})
		self.provenance   = dict(provenance or {})

		self.cells: list[Cell] = []
		for row in self.rows:
			if row.cell not in self.cells:
				self.cells.append(row.cell)

		self.aggregates: dict[Cell, AggregateStats] = {
			cell: aggregate_rows(r.stats for r in self.rows if r.cell == cell) for cell in self.cells
		}

	@property
	def configs(self) -> list[PriorConfig]:
		seen: list[PriorConfig] = []
		for config, _ in self.cells:
			if config is not None and config not in seen:
				seen.append(config)
		return seen

	@property
	def methods(self) -> list[CompletionMethod]:
		seen: list[CompletionMethod] = []
		for _, method in self.cells:
			if method is not None and method not in seen:
				seen.append(method)
		return seen

	def aggregate(self, config: PriorConfig | None = None, method: CompletionMethod | None = None) -> AggregateStats:
		'''
		Raises
		------
		ConfigurationError
			If the report has no such cell.
		'''

		try:
			return self.aggregates[(config, method)]
		except KeyError:
			raise ConfigurationError(f'Report has no results for {_cell_name((config, method))}') from None

	def heatmap(self, config: PriorConfig | None, method: CompletionMethod | None) -> npt.NDArray[np.float64]:
		'''
		Raises
		------
		ConfigurationError
			If the report has no field for the cell.
		'''

		try:
			return self.heatmaps[(config, method)]
		except KeyError:
			raise ConfigurationError(f'Report has no heat map for {_cell_name((config, method))}') from None

	def headline(self) -> dict[str, float]:
		'''
		The complete-anatomy numbers: RMS of mean surface errors, average of maximum surface errors and
		RMS vertex error.
		'''

		agg = self.aggregate()
		return {
			'rms_surface': agg.rms_of_mean_surface,
			'max_surface': agg.mean_of_max_surface,
			'rms_vertex':  agg.rms_vertex,
		}

	def improvement(self, config: PriorConfig) -> dict[str, float]:
		''' Reduction in aggregate error of smooth over cut-and-paste completion, positive when smooth is better '''

		cnp    = self.aggregate(config, CompletionMethod.CUT_AND_PASTE)
		smooth = self.aggregate(config, CompletionMethod.SMOOTH)
		return {
			'rms': cnp.rms_of_mean_surface - smooth.rms_of_mean_surface,
			'max': cnp.mean_of_max_surface - smooth.mean_of_max_surface,
		}

	def summary(self) -> dict[str, Any]:
		'''
		Report level summary.

		For the complete-anatomy protocol this is :py:meth:`headline`. For extrapolation, when both
		methods were run, the mean and minimum improvement over all configs.
		'''

		if self.kind == 'full':
			return self.headline()

		methods = self.methods
		if CompletionMethod.CUT_AND_PASTE not in methods or CompletionMethod.SMOOTH not in methods:
			return {}

		gains = [self.improvement(c) for c in self.configs]
		rms   = np.array([g['rms'] for g in gains])
		peak  = np.array([g['max'] for g in gains])
		return {
			'mean_rms_improvement': float(rms.mean()),
			'min_rms_improvement':  float(rms.min()),
			'mean_max_improvement': float(peak.mean()),
			'min_max_improvement':  float(peak.min()),
		}

	def __repr__(self) -> str:
		return f'<ExperimentReport kind={self.kind} rows={len(self.rows)} cells={len(self.cells)}>'

def _cell_name(cell: Cell) -> str:
	config, method = cell
	if config is None:
		return 'complete anatomy'
	return f'{config.label} / {method.long_name if method is not None else "?"}'

def _run(fn: Callable[[int], T], count: int, jobs: int) -> list[T]:
	if jobs < 1:
		raise ValueError(f'Job count must be at least 1, got {jobs}')
	if jobs == 1 or count <= 1:
		return [fn(i) for i in range(count)]
	with ThreadPoolExecutor(max_workers = jobs) as pool:
		return list(pool.map(fn, range(count)))

def _check_population(meshes: Sequence[TriMesh]) -> list[str]:
	if len(meshes) < 3:
		raise TrainingSetError(3, len(meshes))
	for mesh in meshes[1:]:
		meshes[0].check_topology(mesh)
	return [mesh_digest(m) for m in meshes]

def _fail(left_out: int, cause: Exception, skip_failures: bool) -> str:
	if not skip_failures:
		raise IterationFailedError(left_out, cause) from cause
	log.warning(f'Iteration {left_out} failed: {cause}')
	return str(cause)

# Errors a single iteration may raise without the run being invalid
_ITERATION_ERRORS = (GashadokuroError, ValueError, np.linalg.LinAlgError)

def population_mean(meshes: Sequence[TriMesh]) -> TriMesh:
	''' The vertex-wise mean of a corresponded population, carrying the first mesh's labels '''

	if not meshes:
		raise TrainingSetError(1, 0)
	return meshes[0].with_vertices(np.mean([m.vertices for m in meshes], axis = 0))

def loo_full(
	meshes: Sequence[TriMesh], *, jobs: int = 1, skip_failures: bool = False,
	extra_provenance: dict[str, Any] | None = None
) -> ExperimentReport:
	'''
	Complete-anatomy leave-one-out test.

	For each shape a model is built from all the others, the shape is projected onto every mode of that
	model and the reconstruction is compared with the shape over all vertices.

	Parameters
	----------
	meshes : Sequence[TriMesh]
		At least three corresponded shapes.

	jobs : int
		Worker threads.

	skip_failures : bool
		Record failed iterations instead of aborting.

	extra_provenance : dict | None
		Merged into the report provenance.

	Raises
	------
	TrainingSetError
		If fewer than three shapes are given.

	TopologyMismatchError
		If the shapes are not corresponded.

	IterationFailedError
		If an iteration fails and ``skip_failures`` is unset.
	'''

	digests = _check_population(meshes)
	full    = VertexMask.full(meshes[0].vertex_count)

	def iteration(i: int) -> IterationRecord:
		training = [m for j, m in enumerate(meshes) if j != i]
		train_id = set_digest(d for j, d in enumerate(digests) if j != i)
		log.info(f'Complete-anatomy iteration {i + 1}/{len(meshes)}')

		try:
			ssm      = build_ssm(training)
			estimate = synthesize(ssm, project_full(ssm, meshes[i]))
			stats    = region_error_stats(estimate, meshes[i], full)
		except _ITERATION_ERRORS as e:
			return IterationRecord(
				i, None, None, IterationStatus.FAILED, None, full.count, 0, None, train_id,
				_fail(i, e, skip_failures)
			)
		return IterationRecord(i, None, None, IterationStatus.OK, stats, full.count, 0, None, train_id)

	rows = _run(iteration, len(meshes), jobs)
	prov = provenance(
		protocol = 'loo_full', dataset_hash = set_digest(digests), shape_count = len(meshes),
		distance = 'estimate_to_truth', **(extra_provenance or {})
	)
	return ExperimentReport('full', rows, meshes[0].vertex_count, provenance = prov)

class _Partial(NamedTuple):
	rows:   list[IterationRecord]
	sums:   dict[Cell, npt.NDArray[np.float64]]
	counts: dict[Cell, npt.NDArray[np.int64]]

def loo_extrapolate(
	meshes: Sequence[TriMesh], configs: Iterable[PriorConfig] = DEFAULT_PRIOR_CONFIGS,
	methods: Iterable[CompletionMethod] = (CompletionMethod.CUT_AND_PASTE, CompletionMethod.SMOOTH), *,
	jobs: int = 1, skip_failures: bool = False, tikhonov: float = 0.0, tps_regularization: float = 0.0,
	max_knots: int = DEFAULT_MAX_KNOTS, acetabulum_label: str = ACETABULUM_LABEL,
	extra_provenance: dict[str, Any] | None = None
) -> ExperimentReport:
	'''
	Partial-prior extrapolation leave-one-out test.

	For each left-out shape, each prior config and each method: build the model from the other shapes,
	keep the prior region of the left-out shape, fit all modes to it, complete the rest and measure the
	error over the hidden region only. A config that hides nothing is recorded as a degenerate zero-error
	row.

	Parameters
	----------
	meshes : Sequence[TriMesh]
		At least three corresponded shapes carrying the acetabulum label.

	configs : Iterable[PriorConfig]
		Prior regions to evaluate.

	methods : Iterable[CompletionMethod]
		Completion methods to evaluate.

	jobs : int
		Worker threads.

	skip_failures : bool
		Record failed cells instead of aborting.

	tikhonov : float
		Tikhonov weight of the partial projection, zero by default.

	tps_regularization : float
		TPS smoothing weight of smooth completion, zero for exact interpolation.

	max_knots : int
		TPS knot cap of smooth completion.

	acetabulum_label : str
		Name of the vertex label spanning the acetabulum slab.

	extra_provenance : dict | None
		Merged into the report provenance.

	Raises
	------
	TrainingSetError
		If fewer than three shapes are given.

	ConfigurationError
		If no config or method is given, a config is invalid, or a shape lacks the acetabulum label.

	IterationFailedError
		If a cell fails and ``skip_failures`` is unset.
	'''

	configs = list(configs)
	methods = list(dict.fromkeys(methods))
	if not configs:
		raise ConfigurationError('At least one prior config is required')
	if not methods:
		raise ConfigurationError('At least one completion method is required')
	for config in configs:
		config.validate()

	digests = _check_population(meshes)
	labels  = [m.label(acetabulum_label) for m in meshes]
	count   = meshes[0].vertex_count
	cells: list[Cell] = [(c, m) for c in configs for m in methods]

	def iteration(i: int) -> _Partial:
		truth    = meshes[i]
		train_id = set_digest(d for j, d in enumerate(digests) if j != i)
		sums     = {cell: np.zeros(count) for cell in cells}
		counts   = {cell: np.zeros(count, dtype = np.int64) for cell in cells}
		rows: list[IterationRecord] = []
		log.info(f'Extrapolation iteration {i + 1}/{len(meshes)}')

		def failed(config: PriorConfig, method: CompletionMethod, unknown: int, e: Exception) -> IterationRecord:
			return IterationRecord(
				i, config, method, IterationStatus.FAILED, None, unknown, 0, None, train_id,
				_fail(i, e, skip_failures)
			)

		try:
			ssm = build_ssm([m for j, m in enumerate(meshes) if j != i])
		except _ITERATION_ERRORS as e:
			rows = [failed(c, m, 0, e) for c, m in cells]
			return _Partial(rows, sums, counts)

		index = TriangleIndex(truth)

		for config in configs:
			try:
				known    = build_prior_mask(
					truth, labels[i], config.crest_fraction, include_acetabulum = config.include_acetabulum
				)
				unknown  = ~known
				estimate = None
				if unknown.any():
					estimate = synthesize(ssm, project_partial(ssm, truth, known, regularization = tikhonov))
			except _ITERATION_ERRORS as e:
				rows.extend(failed(config, m, 0, e) for m in methods)
				continue

			for method in methods:
				if estimate is None:
					rows.append(IterationRecord(
						i, config, method, IterationStatus.DEGENERATE, ErrorStats.zero(), 0, 0, None, train_id
					))
					continue

				try:
					result = complete(
						method, truth, known, estimate, max_knots = max_knots, regularization = tps_regularization
					)
					surface, vertex = region_errors(result.mesh, truth, unknown, index = index)
				except _ITERATION_ERRORS as e:
					rows.append(failed(config, method, unknown.count, e))
					continue

				sums[(config, method)][unknown.bits]   += surface
				counts[(config, method)][unknown.bits] += 1
				rows.append(IterationRecord(
					i, config, method, IterationStatus.OK, ErrorStats.from_distances(surface, vertex),
					unknown.count, result.knot_count, result.metadata.get('seam_gap'), train_id
				))

		return _Partial(rows, sums, counts)

	partials = _run(iteration, len(meshes), jobs)

	rows: list[IterationRecord] = []
	sums   = {cell: np.zeros(count) for cell in cells}
	counts = {cell: np.zeros(count, dtype = np.int64) for cell in cells}
	for part in partials:
		rows.extend(part.rows)
		for cell in cells:
			sums[cell]   += part.sums[cell]
			counts[cell] += part.counts[cell]

	heatmaps: dict[Cell, npt.NDArray[np.float64]] = {}
	for cell in cells:
		field = np.full(count, HEATMAP_KNOWN_SENTINEL)
		seen  = counts[cell] > 0
		field[seen] = sums[cell][seen] / counts[cell][seen]
		heatmaps[cell] = field

	prov = provenance(
		protocol           = 'loo_extrapolate',
		dataset_hash       = set_digest(digests),
		shape_count        = len(meshes),
		configs            = [c.to_dict() for c in configs],
		methods            = [m.long_name for m in methods],
		tikhonov           = tikhonov,
		tps_regularization = tps_regularization,
		max_knots          = max_knots,
		distance           = 'estimate_to_truth',
		**(extra_provenance or {})
	)
	report = ExperimentReport('extrapolate', rows, count, heatmaps, prov)
	log.info(f'Finished {report!r}')
	return report
