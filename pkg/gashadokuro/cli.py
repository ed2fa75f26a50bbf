# SPDX-License-Identifier: BSD-3-Clause

'''
Gashadokuro command line interface.

Every subcommand exits with ``0`` on success. On failure a single line ``error: <CATEGORY>: <message>``
is written to stderr and the exit code is the category's value, see
:py:class:`ErrorCategory <gashadokuro.types.constants.ErrorCategory>`.
'''

import json
import logging               as log
import sys
from argparse                import ArgumentDefaultsHelpFormatter, ArgumentParser, Namespace
from os                      import getenv
from pathlib                 import Path
from typing                  import Any, NoReturn, Sequence

import numpy                 as np
from rich.console            import Console
from rich.logging            import RichHandler

from .                       import __version__
from .completion             import complete
from .experiments            import PriorConfig, loo_extrapolate, loo_full, population_mean
from .experiments.report     import export_heatmap, load_report, save_report, write_csv
from .mesh                   import TriMesh, VertexMask, load_mask
from .mesh.ply               import load_mesh, save_mesh
from .model                  import build_ssm, mode_shapes, project_partial, synthesize
from .model.io               import load_ssm, save_ssm
from .support.hashing        import array_digest, mesh_digest, provenance, set_digest
from .synth                  import SynthSpec, generate_population, load_dataset, write_dataset
from .types.constants        import (
	ACETABULUM_LABEL, DEFAULT_CREST_FRACTIONS, DEFAULT_MAX_KNOTS, CompletionMethod, ErrorCategory
)
from .types.errors           import ConfigurationError, GashadokuroError

__all__ = (
	'main',
)

SEED_ENV = 'SHAPECOMPLETE_SEED'

# Execution knobs that never change what a command produces
_NOT_PROVENANCE = frozenset(('jobs', 'verbose', 'config', 'verb'))

def _setup_logging() -> None:
	log.basicConfig(
		force    = True,
		format   = '%(message)s',
		datefmt  = '[%X]',
		level    = log.INFO,
		handlers = [
			RichHandler(console = Console(stderr = True), rich_tracebacks = True, show_path = False)
		]
	)

class _ArgumentParser(ArgumentParser):
	''' Reports usage errors as :py:class:`ConfigurationError` instead of exiting '''

	def error(self, message: str) -> NoReturn:
		raise ConfigurationError(f'{self.prog}: {message}')

def _add_axis_order(parser: ArgumentParser) -> None:
	parser.add_argument(
		'--axis-order',
		type    = str,
		default = 'xyz',
		help    = 'Which input axes become x, y and z, the last one being the axial direction'
	)

def _setup_args() -> tuple[ArgumentParser, dict[str, ArgumentParser]]:
	parser = _ArgumentParser(
		prog            = 'gashadokuro',
		description     = 'Statistical shape model construction, partial shape completion and evaluation',
		formatter_class = ArgumentDefaultsHelpFormatter
	)

	parser.add_argument(
		'--version',
		action  = 'version',
		version = f'%(prog)s {__version__}'
	)

	parser.add_argument(
		'--verbose', '-v',
		action = 'store_true',
		help   = 'Enable verbose/debug logging'
	)

	parser.add_argument(
		'--config', '-c',
		type    = Path,
		default = None,
		help    = 'JSON file of option defaults, keyed by long flag name. Explicit flags take precedence'
	)

	verb_parsers = parser.add_subparsers(
		dest = 'verb', required = True, parser_class = _ArgumentParser
	)

	seed_default = getenv(SEED_ENV, '0')

	synth = verb_parsers.add_parser(
		'synth', description = 'Generate a synthetic corresponded population',
		formatter_class = ArgumentDefaultsHelpFormatter
	)
	synth.add_argument('--output', '-o', type = Path, required = True, help = 'Dataset directory to write')
	synth.add_argument(
		'--seed', type = int, default = seed_default, help = f'Root random seed (Uses ${SEED_ENV} as default)'
	)
	synth.add_argument('--shapes', type = int, default = 42, help = 'Number of shapes')
	synth.add_argument('--modes', type = int, default = 10, help = 'Number of generative modes')
	synth.add_argument('--resolution', type = int, default = 3, help = 'Template icosphere subdivision level')
	synth.add_argument('--noise', type = float, default = 0.2, help = 'Per-coordinate noise sigma (mm)')
	synth.add_argument('--bends', type = int, default = 4, help = 'Individual bends per shape')
	synth.add_argument(
		'--bend-sigma', type = float, default = 0.015, help = 'Bend slope sigma (mm per mm), 0 keeps shapes in the model span'
	)
	synth.add_argument(
		'--sigmas', type = str, default = None,
		help = 'Comma separated per-mode coefficient sigmas (mm), graded 3.0 to 0.3 when unset'
	)
	synth.add_argument('--text', action = 'store_true', help = 'Write ASCII PLY files')

	build = verb_parsers.add_parser(
		'build-ssm', description = 'Build a statistical shape model from corresponded meshes',
		formatter_class = ArgumentDefaultsHelpFormatter
	)
	build.add_argument('inputs', type = Path, nargs = '+', help = 'A dataset directory or PLY files')
	build.add_argument('--output', '-o', type = Path, required = True, help = 'Model file to write')
	build.add_argument(
		'--export-modes', type = Path, default = None,
		help = 'Directory to write the mean shape and +/- 3 sigma shapes of the leading modes to'
	)
	build.add_argument('--mode-count', type = int, default = 3, help = 'Modes exported by --export-modes')
	_add_axis_order(build)

	comp = verb_parsers.add_parser(
		'complete', description = 'Complete a partially known shape',
		formatter_class = ArgumentDefaultsHelpFormatter
	)
	comp.add_argument('--model', '-m', type = Path, required = True, help = 'Shape model file')
	comp.add_argument(
		'--partial', '-p', type = Path, required = True,
		help = 'PLY with the template topology, only its known vertices are used'
	)
	known = comp.add_mutually_exclusive_group()
	known.add_argument('--mask', type = Path, default = None, help = 'JSON vertex mask of the known region')
	known.add_argument(
		'--known-label', type = str, default = None, help = 'Vertex label of the partial PLY marking the known region'
	)
	comp.add_argument('--method', type = str, default = 'smooth', help = 'cnp or smooth')
	comp.add_argument('--output', '-o', type = Path, required = True, help = 'Completed PLY to write')
	comp.add_argument('--max-knots', type = int, default = DEFAULT_MAX_KNOTS, help = 'TPS knot cap')
	comp.add_argument('--tikhonov', type = float, default = 0.0, help = 'Tikhonov weight of the partial projection')
	comp.add_argument(
		'--tps-regularization', type = float, default = 0.0, help = 'TPS smoothing weight, 0 for exact interpolation'
	)
	_add_axis_order(comp)

	loo = verb_parsers.add_parser(
		'eval-loo', description = 'Run a leave-one-out experiment',
		formatter_class = ArgumentDefaultsHelpFormatter
	)
	loo.add_argument('inputs', type = Path, nargs = '+', help = 'A dataset directory or PLY files')
	loo.add_argument('--output', '-o', type = Path, required = True, help = 'Directory for the report')
	loo.add_argument('--mode', choices = ('full', 'extrapolate'), default = 'extrapolate', help = 'Protocol')
	loo.add_argument(
		'--crest', type = str, default = ','.join(f'{f:g}' for f in DEFAULT_CREST_FRACTIONS),
		help = 'Comma separated crest fractions, as decimals'
	)
	loo.add_argument('--no-acetabulum', action = 'store_true', help = 'Leave the acetabulum slab out of the prior')
	loo.add_argument('--methods', type = str, default = 'cnp,smooth', help = 'Comma separated completion methods')
	loo.add_argument('--jobs', '-j', type = int, default = 1, help = 'Parallel iterations')
	loo.add_argument('--skip-failures', action = 'store_true', help = 'Record failed iterations and carry on')
	loo.add_argument('--tikhonov', type = float, default = 0.0, help = 'Tikhonov weight of the partial projection')
	loo.add_argument(
		'--tps-regularization', type = float, default = 0.0, help = 'TPS smoothing weight, 0 for exact interpolation'
	)
	loo.add_argument('--max-knots', type = int, default = DEFAULT_MAX_KNOTS, help = 'TPS knot cap')
	loo.add_argument('--acetabulum-label', type = str, default = ACETABULUM_LABEL, help = 'Acetabulum vertex label')
	loo.add_argument(
		'--seed', type = int, default = seed_default, help = f'Recorded seed (Uses ${SEED_ENV} as default)'
	)
	loo.add_argument('--no-heatmaps', action = 'store_true', help = 'Skip writing heat map PLY files')
	_add_axis_order(loo)

	heat = verb_parsers.add_parser(
		'heatmap', description = 'Export a per-vertex mean error field from a report',
		formatter_class = ArgumentDefaultsHelpFormatter
	)
	heat.add_argument('--report', '-r', type = Path, required = True, help = 'Report JSON')
	heat.add_argument('--crest', type = float, required = True, help = 'Crest fraction of the cell')
	heat.add_argument('--no-acetabulum', action = 'store_true', help = 'Select a cell without the acetabulum')
	heat.add_argument('--method', type = str, required = True, help = 'cnp or smooth')
	shape = heat.add_mutually_exclusive_group(required = True)
	shape.add_argument('--mean-shape', type = Path, default = None, help = 'PLY of the mean shape')
	shape.add_argument(
		'--dataset', type = Path, nargs = '+', default = None, help = 'Dataset to average into the mean shape'
	)
	heat.add_argument('--output', '-o', type = Path, required = True, help = 'Heat map PLY to write')
	_add_axis_order(heat)

	return (parser, {
		'synth': synth, 'build-ssm': build, 'complete': comp, 'eval-loo': loo, 'heatmap': heat,
	})

def _apply_config(path: Path, parser: ArgumentParser) -> None:
	try:
		values = json.loads(path.read_text())
	except json.JSONDecodeError as e:
		raise ConfigurationError(f'Invalid config file \'{path}\': {e}') from e
	if not isinstance(values, dict):
		raise ConfigurationError(f'Config file \'{path}\' must hold a JSON object')

	known = {a.dest for a in parser._actions}
	resolved: dict[str, Any] = {}
	for key, value in values.items():
		dest = str(key).lstrip('-').replace('-', '_')
		if dest not in known or dest == 'help':
			raise ConfigurationError(f'Unknown option \'{key}\' in config file \'{path}\'')
		resolved[dest] = value

	# Options given in the file no longer need to be on the command line
	for action in parser._actions:
		if action.dest in resolved:
			action.required = False
	parser.set_defaults(**resolved)

def _parse_args(argv: Sequence[str] | None) -> Namespace:
	parser, verbs = _setup_args()

	# The config file has to be applied before the real parse so it can satisfy required options
	early = _ArgumentParser(add_help = False)
	early.add_argument('--config', '-c', type = Path, default = None)
	pre, rest = early.parse_known_args(argv)

	if pre.config is not None:
		verb = next((arg for arg in rest if arg in verbs), None)
		if verb is not None:
			_apply_config(pre.config, verbs[verb])
	return parser.parse_args(argv)

def _run_config(args: Namespace) -> dict[str, Any]:
	config: dict[str, Any] = {'command': args.verb}
	for key, value in sorted(vars(args).items()):
		if key in _NOT_PROVENANCE:
			continue
		if isinstance(value, Path):
			value = str(value)
		elif isinstance(value, list):
			value = [str(v) if isinstance(v, Path) else v for v in value]
		config[key] = value
	return config

def _fractions(value: str | Sequence[float] | float) -> list[float]:
	if isinstance(value, (int, float)):
		return [float(value)]
	items = value.split(',') if isinstance(value, str) else list(value)
	try:
		fractions = [float(v) for v in items if str(v).strip() != '']
	except ValueError as e:
		raise ConfigurationError(f'Invalid crest fraction list {value!r}') from e
	if not fractions:
		raise ConfigurationError('At least one crest fraction is required')
	return fractions

def _methods(value: str | Sequence[str]) -> list[CompletionMethod]:
	items = value.split(',') if isinstance(value, str) else list(value)
	return [CompletionMethod.from_str(m) for m in items if m.strip() != '']

def _load_meshes(inputs: Sequence[Path | str], axis_order: str) -> list[TriMesh]:
	paths = [Path(p) for p in inputs]
	if len(paths) == 1 and paths[0].is_dir():
		return load_dataset(paths[0], axis_order = axis_order)
	return [load_mesh(p, axis_order = axis_order) for p in paths]

def cmd_synth(args: Namespace) -> int:
	sigmas = None if args.sigmas is None else tuple(_fractions(args.sigmas))
	spec = SynthSpec(
		template_resolution = args.resolution,
		generative_modes    = args.modes,
		coefficient_sigma   = sigmas,
		noise_sigma         = args.noise,
		sample_count        = args.shapes,
		seed                = args.seed,
		bend_count          = args.bends,
		bend_sigma          = args.bend_sigma,
	)

	meshes, truth = generate_population(spec)
	manifest = write_dataset(args.output, meshes, truth, run_config = _run_config(args), text = args.text)
	print(f'Wrote {len(meshes)} shapes to {args.output}')
	print(f'Dataset hash: {manifest["dataset_hash"]}')
	return 0

def cmd_build_ssm(args: Namespace) -> int:
	meshes  = _load_meshes(args.inputs, args.axis_order)
	digests = [mesh_digest(m) for m in meshes]

	ssm = build_ssm(meshes, provenance = provenance(
		training_hashes = digests,
		dataset_hash    = set_digest(digests),
		shape_count     = len(meshes),
		covariance      = 'sample (S - 1)',
		run_config      = _run_config(args),
	))
	save_ssm(ssm, args.output)

	print(f'Built model with {ssm.mode_count} modes from {len(meshes)} shapes ({ssm.vertex_count} vertices)')
	cumulative = np.cumsum(ssm.explained_variance_ratio)
	for j, (sigma, ratio) in enumerate(zip(ssm.std_devs, ssm.explained_variance_ratio)):
		print(f'  mode {j:3d}: sigma = {sigma:9.4f} mm  variance {ratio:7.2%}  cumulative {cumulative[j]:7.2%}')

	if args.export_modes is not None:
		out: Path = args.export_modes
		out.mkdir(parents = True, exist_ok = True)
		save_mesh(ssm.mean_mesh(), out / 'mean.ply')
		for mode, sign, mesh in mode_shapes(ssm, args.mode_count, 3.0):
			save_mesh(mesh, out / f'mode{mode}_{"plus" if sign > 0 else "minus"}3sd.ply')
		log.info(f'Exported mode shapes to \'{out}\'')
	return 0

def cmd_complete(args: Namespace) -> int:
	ssm     = load_ssm(args.model)
	partial = load_mesh(args.partial, axis_order = args.axis_order)
	ssm.check_mesh(partial)
	method  = CompletionMethod.from_str(args.method)

	known: VertexMask
	if args.mask is not None:
		known = load_mask(args.mask)
	elif args.known_label is not None:
		known = partial.label(args.known_label)
	else:
		raise ConfigurationError('Either --mask or --known-label is required')

	coeffs   = project_partial(ssm, partial, known, regularization = args.tikhonov)
	estimate = synthesize(ssm, coeffs)
	result   = complete(
		method, partial, known, estimate, max_knots = args.max_knots, regularization = args.tps_regularization
	)

	prov = provenance(
		model_digest   = array_digest(ssm.mean, ssm.modes, ssm.std_devs, ssm.faces),
		partial_digest = mesh_digest(partial),
		known_digest   = array_digest(known.bits),
		run_config     = _run_config(args),
	)
	save_mesh(result.mesh, args.output, comments = {'gashadokuro_version': prov['gashadokuro_version']})

	metadata = {
		**result.to_dict(),
		'coefficients':            coeffs.b.tolist(),
		'normalized_coefficients': coeffs.normalized.tolist(),
		'provenance':              prov,
	}
	meta_path = args.output.with_name(f'{args.output.name}.json')
	meta_path.write_text(json.dumps(metadata, indent = 2, sort_keys = True) + '\n')

	print(f'Completed {known.mesh_vertex_count - known.count} unknown vertices with {method.long_name}')
	if 'seam_gap' in result.metadata:
		print(f'Seam gap: {result.metadata["seam_gap"]:.6f} mm')
	return 0

def _heatmap_name(config: PriorConfig, method: CompletionMethod) -> str:
	suffix = '' if config.include_acetabulum else '_noacetabulum'
	return f'heatmap_crest{config.crest_fraction * 100:g}pct{suffix}_{method.long_name}.ply'

def cmd_eval_loo(args: Namespace) -> int:
	meshes = _load_meshes(args.inputs, args.axis_order)
	extra  = {'seed': args.seed, 'run_config': _run_config(args)}

	if args.mode == 'full':
		report = loo_full(meshes, jobs = args.jobs, skip_failures = args.skip_failures, extra_provenance = extra)
	else:
		configs = [PriorConfig(f, not args.no_acetabulum) for f in _fractions(args.crest)]
		report  = loo_extrapolate(
			meshes, configs, _methods(args.methods),
			jobs               = args.jobs,
			skip_failures      = args.skip_failures,
			tikhonov           = args.tikhonov,
			tps_regularization = args.tps_regularization,
			max_knots          = args.max_knots,
			acetabulum_label   = args.acetabulum_label,
			extra_provenance   = extra,
		)

	out: Path = args.output
	out.mkdir(parents = True, exist_ok = True)
	save_report(report, out / 'report.json')
	write_csv(report, out / 'report.csv')

	if report.kind == 'full':
		headline = report.headline()
		print(
			f'RMS surface error {headline["rms_surface"]:.4f} mm, max surface error {headline["max_surface"]:.4f} mm, '
			f'RMS vertex error {headline["rms_vertex"]:.4f} mm'
		)
	else:
		for config in report.configs:
			for method in report.methods:
				agg = report.aggregate(config, method)
				print(
					f'{config.label:>18} {method.long_name:>13}: RMS {agg.rms_of_mean_surface:.4f} mm, '
					f'max {agg.mean_of_max_surface:.4f} mm'
				)

		if not args.no_heatmaps:
			mean = population_mean(meshes)
			(out / 'heatmaps').mkdir(exist_ok = True)
			for config, method in report.cells:
				if config is not None and method is not None:
					export_heatmap(report, config, method, mean, out / 'heatmaps' / _heatmap_name(config, method))

	failed = sum(1 for r in report.rows if r.stats is None)
	if failed:
		log.warning(f'{failed} iterations failed and are marked in the report')
	log.info(f'Wrote report to \'{out}\'')
	return 0

def cmd_heatmap(args: Namespace) -> int:
	report = load_report(args.report)
	config = PriorConfig(args.crest, not args.no_acetabulum)
	method = CompletionMethod.from_str(args.method)

	if args.mean_shape is not None:
		mean = load_mesh(args.mean_shape, axis_order = args.axis_order)
	else:
		mean = population_mean(_load_meshes(args.dataset, args.axis_order))

	export_heatmap(report, config, method, mean, args.output)
	print(f'Wrote heat map for {config.label} / {method.long_name} to {args.output}')
	return 0

def _category(error: Exception) -> ErrorCategory:
	if isinstance(error, GashadokuroError):
		return error.category
	if isinstance(error, OSError):
		return ErrorCategory.IO
	return ErrorCategory.CONFIG

def main(argv: Sequence[str] | None = None) -> int:
	_setup_logging()

	try:
		args = _parse_args(argv)
		if args.verbose:
			log.getLogger().setLevel(log.DEBUG)

		match args.verb:
			case 'synth':
				return cmd_synth(args)
			case 'build-ssm':
				return cmd_build_ssm(args)
			case 'complete':
				return cmd_complete(args)
			case 'eval-loo':
				return cmd_eval_loo(args)
			case 'heatmap':
				return cmd_heatmap(args)
	except (GashadokuroError, OSError, ValueError) as e:
		category = _category(e)
		log.debug('Failure details', exc_info = True)
		print(f'error: {category}: {e}', file = sys.stderr)
		return int(category)

	return 0

if __name__ == '__main__':
	raise SystemExit(main())
