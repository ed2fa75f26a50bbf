# SPDX-License-Identifier: BSD-3-Clause

'''
Experiment report serialization.

Reports are written as JSON (every row, every aggregate and every heat map) and as a CSV table with
one row per prior config and an RMS and max column per completion method. ``nan`` values, which only
appear for cells where every iteration failed, are written as ``null``.
'''

import csv
import json
import logging         as log
import math
from pathlib           import Path
from typing            import Any

import numpy           as np

from .                 import Cell, ExperimentReport, IterationRecord, PriorConfig
from ..mesh            import TriMesh
from ..mesh.ply        import save_mesh
from ..metrics         import ErrorStats
from ..types.constants import CompletionMethod, IterationStatus
from ..types.errors    import ConfigurationError

__all__ = (
	'report_to_dict',
	'report_from_dict',
	'save_report',
	'load_report',
	'write_csv',
	'export_heatmap',
)

def _clean(value: Any) -> Any:
	if isinstance(value, float):
		return None if math.isnan(value) else value
	if isinstance(value, dict):
		return {k: _clean(v) for k, v in value.items()}
	if isinstance(value, (list, tuple)):
		return [_clean(v) for v in value]
	return value

def _method_name(method: CompletionMethod | None) -> str | None:
	return None if method is None else method.long_name

def _row_to_dict(row: IterationRecord) -> dict[str, Any]:
	return {
		'left_out':      row.left_out,
		'config':        None if row.config is None else row.config.to_dict(),
		'method':        _method_name(row.method),
		'status':        str(row.status),
		'stats':         None if row.stats is None else row.stats.to_dict(),
		'unknown_count': row.unknown_count,
		'knot_count':    row.knot_count,
		'seam_gap':      row.seam_gap,
		'training_hash': row.training_hash,
		'error':         row.error,
	}

def _row_from_dict(data: dict[str, Any]) -> IterationRecord:
	return IterationRecord(
		left_out      = int(data['left_out']),
		config        = None if data['config'] is None else PriorConfig.from_dict(data['config']),
		method        = None if data['method'] is None else CompletionMethod.from_str(data['method']),
		status        = IterationStatus.from_str(data['status']),
		stats         = None if data['stats'] is None else ErrorStats.from_dict(data['stats']),
		unknown_count = int(data['unknown_count']),
		knot_count    = int(data['knot_count']),
		seam_gap      = None if data['seam_gap'] is None else float(data['seam_gap']),
		training_hash = str(data['training_hash']),
		error         = data.get('error'),
	)

def report_to_dict(report: ExperimentReport) -> dict[str, Any]:
	''' A JSON-ready rendering of a report '''

	cells = []
	for cell in report.cells:
		config, method = cell
		entry: dict[str, Any] = {
			'config':    None if config is None else config.to_dict(),
			'method':    _method_name(method),
			'aggregate': report.aggregates[cell].to_dict(),
		}
		if cell in report.heatmaps:
			entry['heatmap'] = report.heatmaps[cell].tolist()
		cells.append(entry)

	return _clean({
		'kind':         report.kind,
		'vertex_count': report.vertex_count,
		'provenance':   report.provenance,
		'summary':      report.summary(),
		'cells':        cells,
		'rows':         [_row_to_dict(r) for r in report.rows],
	})

def report_from_dict(data: dict[str, Any]) -> ExperimentReport:
	'''
	Rebuild a report from :py:func:`report_to_dict` output. Aggregates are recomputed from the rows.

	Raises
	------
	ConfigurationError
		If the document is not a report.
	'''

	try:
		rows = [_row_from_dict(r) for r in data['rows']]
		heatmaps: dict[Cell, np.ndarray] = {}
		for entry in data['cells']:
			if 'heatmap' not in entry:
				continue
			config = None if entry['config'] is None else PriorConfig.from_dict(entry['config'])
			method = None if entry['method'] is None else CompletionMethod.from_str(entry['method'])
			heatmaps[(config, method)] = np.asarray(entry['heatmap'], dtype = np.float64)

		return ExperimentReport(
			str(data['kind']), rows, int(data['vertex_count']), heatmaps, dict(data.get('provenance', {}))
		)
	except (KeyError, TypeError, ValueError) as e:
		raise ConfigurationError(f'Invalid experiment report: {e!r}') from e

def save_report(report: ExperimentReport, path: Path | str) -> None:
	''' Write a report as JSON with sorted keys, identical reports give identical bytes '''

	text = json.dumps(report_to_dict(report), indent = 2, sort_keys = True, allow_nan = False)
	Path(path).write_text(text + '\n')
	log.debug(f'Wrote {report!r} to \'{path}\'')

def load_report(path: Path | str) -> ExperimentReport:
	'''
	Read a report written by :py:func:`save_report`.

	Raises
	------
	ConfigurationError
		If the file is not a valid report.
	'''

	try:
		data = json.loads(Path(path).read_text())
	except json.JSONDecodeError as e:
		raise ConfigurationError(f'Invalid experiment report \'{path}\': {e}') from e
	return report_from_dict(data)

def _number(value: float) -> str:
	return '' if math.isnan(value) else repr(value)

def write_csv(report: ExperimentReport, path: Path | str) -> None:
	'''
	Write the aggregate table.

	Extrapolation reports get one row per prior config, labelled by its crest percentage, with the
	RMS of mean surface errors and average of maximum surface errors of each method. Complete-anatomy
	reports get a single row of headline numbers.
	'''

	with Path(path).open('w', newline = '') as f:
		out = csv.writer(f, lineterminator = '\n')

		if report.kind == 'full':
			agg = report.aggregate()
			out.writerow(('rms_surface_mm', 'max_surface_mm', 'rms_vertex_mm', 'iterations', 'failed'))
			out.writerow((
				_number(agg.rms_of_mean_surface), _number(agg.mean_of_max_surface), _number(agg.rms_vertex),
				agg.iteration_count, agg.failed_count
			))
			return

		methods = report.methods
		header  = ['crest', 'acetabulum']
		for method in methods:
			header += [f'{method.long_name}_rms_mm', f'{method.long_name}_max_mm', f'{method.long_name}_failed']
		out.writerow(header)

		for config in report.configs:
			line: list[Any] = [f'{config.crest_fraction * 100:g}%', int(config.include_acetabulum)]
			for method in methods:
				agg = report.aggregate(config, method)
				line += [_number(agg.rms_of_mean_surface), _number(agg.mean_of_max_surface), agg.failed_count]
			out.writerow(line)

def export_heatmap(
	report: ExperimentReport, config: PriorConfig, method: CompletionMethod, mean_shape: TriMesh,
	path: Path | str, *, text: bool = False
) -> None:
	'''
	Write the mean shape with a cell's per-vertex mean error as the ``quality`` property.

	Vertices that were never hidden carry :py:data:`HEATMAP_KNOWN_SENTINEL
	<gashadokuro.types.constants.HEATMAP_KNOWN_SENTINEL>`.

	Raises
	------
	ConfigurationError
		If the report has no field for the cell, or it does not fit ``mean_shape``.
	'''

	field = report.heatmap(config, method)
	if field.shape[0] != mean_shape.vertex_count:
		raise ConfigurationError(
			f'Heat map has {field.shape[0]} values but the mean shape has {mean_shape.vertex_count} vertices'
		)

	comments = {
		'gashadokuro_version': str(report.provenance.get('gashadokuro_version', '')),
		'heatmap': f'{config.label} {method.long_name}',
		'dataset_hash': str(report.provenance.get('dataset_hash', '')),
	}
	save_mesh(mean_shape, path, field, text = text, comments = comments)
