# SPDX-License-Identifier: BSD-3-Clause

import csv
import json

import numpy                        as np

from gashadokuro.experiments        import ExperimentReport, PriorConfig, loo_extrapolate, loo_full, population_mean
from gashadokuro.experiments.report import (
	export_heatmap, load_report, report_to_dict, save_report, write_csv
)
from gashadokuro.mesh.ply           import load_mesh, read_vertex_property
from gashadokuro.support.test       import GashadokuroTestCase, unit_cube
from gashadokuro.synth              import SynthSpec, generate_population
from gashadokuro.types.constants    import CompletionMethod
from gashadokuro.types.errors       import ConfigurationError

SPEC    = SynthSpec(template_resolution = 2, generative_modes = 2, sample_count = 4, seed = 3)
CONFIGS = (PriorConfig(0.05), PriorConfig(0.15))

class GashadokuroExperimentsReportTest(GashadokuroTestCase):

	@classmethod
	def setUpClass(cls) -> None:
		cls.meshes, _ = generate_population(SPEC)
		cls.report    = loo_extrapolate(cls.meshes, CONFIGS, extra_provenance = {'seed': 3})

	def test_json_round_trip(self) -> None:
		path = self.tmp / 'report.json'
		save_report(self.report, path)
		loaded = load_report(path)

		self.assertEqual(report_to_dict(loaded), report_to_dict(self.report))
		self.assertEqual(loaded.provenance['seed'], 3)
		self.assertEqual(loaded.configs, list(CONFIGS))

		save_report(loaded, self.tmp / 'again.json')
		self.assertEqual(path.read_bytes(), (self.tmp / 'again.json').read_bytes())

	def test_failed_cells_are_null(self) -> None:
		report = loo_extrapolate(
			self.meshes, CONFIGS[:1], (CompletionMethod.SMOOTH, ), max_knots = 3, skip_failures = True
		)
		save_report(report, self.tmp / 'failed.json')

		doc = json.loads((self.tmp / 'failed.json').read_text())
		self.assertIsNone(doc['cells'][0]['aggregate']['rms_of_mean_surface'])
		self.assertEqual(doc['cells'][0]['aggregate']['failed_count'], 4)
		self.assertTrue(all(row['status'] == 'failed' for row in doc['rows']))

		loaded = load_report(self.tmp / 'failed.json')
		self.assertEqual(loaded.aggregate(CONFIGS[0], CompletionMethod.SMOOTH).failed_count, 4)

	def test_invalid(self) -> None:
		(self.tmp / 'bad.json').write_text('{"kind": "full"}')
		with self.assertRaises(ConfigurationError):
			load_report(self.tmp / 'bad.json')

		(self.tmp / 'worse.json').write_text('{')
		with self.assertRaises(ConfigurationError):
			load_report(self.tmp / 'worse.json')

		with self.assertRaises(ValueError):
			ExperimentReport('partial', [], 10)

	def test_csv(self) -> None:
		write_csv(self.report, self.tmp / 'report.csv')

		with (self.tmp / 'report.csv').open() as f:
			rows = list(csv.reader(f))

		self.assertEqual(rows[0], [
			'crest', 'acetabulum',
			'cut_and_paste_rms_mm', 'cut_and_paste_max_mm', 'cut_and_paste_failed',
			'smooth_rms_mm', 'smooth_max_mm', 'smooth_failed',
		])
		self.assertEqual([r[0] for r in rows[1:]], ['5%', '15%'])

		agg = self.report.aggregate(CONFIGS[1], CompletionMethod.SMOOTH)
		self.assertAlmostEqual(float(rows[2][5]), agg.rms_of_mean_surface)
		self.assertAlmostEqual(float(rows[2][6]), agg.mean_of_max_surface)

	def test_csv_full(self) -> None:
		report = loo_full(self.meshes)
		write_csv(report, self.tmp / 'full.csv')

		with (self.tmp / 'full.csv').open() as f:
			rows = list(csv.reader(f))
		self.assertEqual(rows[0], ['rms_surface_mm', 'max_surface_mm', 'rms_vertex_mm', 'iterations', 'failed'])
		self.assertEqual(rows[1][3:], ['4', '0'])

	def test_heatmap_export(self) -> None:
		mean = population_mean(self.meshes)
		path = self.tmp / 'heat.ply'
		export_heatmap(self.report, CONFIGS[0], CompletionMethod.SMOOTH, mean, path)

		field = self.report.heatmap(CONFIGS[0], CompletionMethod.SMOOTH)
		back  = read_vertex_property(path)
		self.assertTrue(np.allclose(back, field, rtol = 1e-6, atol = 1e-9))
		self.assertEqual(load_mesh(path).vertex_count, mean.vertex_count)

		with self.assertRaises(ConfigurationError):
			export_heatmap(self.report, PriorConfig(0.5), CompletionMethod.SMOOTH, mean, path)
		with self.assertRaises(ConfigurationError):
			export_heatmap(self.report, CONFIGS[0], CompletionMethod.SMOOTH, unit_cube(), self.tmp / 'cube.ply')
