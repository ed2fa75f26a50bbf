# SPDX-License-Identifier: BSD-3-Clause

import math

import numpy                        as np

from gashadokuro.experiments        import PriorConfig, loo_extrapolate, loo_full, population_mean
from gashadokuro.experiments.report import report_to_dict
from gashadokuro.support.test       import GashadokuroTestCase, tetrahedron
from gashadokuro.synth              import SynthSpec, generate_population
from gashadokuro.types.constants    import (
	ACETABULUM_LABEL, HEATMAP_KNOWN_SENTINEL, CompletionMethod, ErrorCategory, IterationStatus
)
from gashadokuro.types.errors       import ConfigurationError, IterationFailedError, TrainingSetError

SPEC = SynthSpec(template_resolution = 2, generative_modes = 3, sample_count = 6, seed = 1)

CNP    = CompletionMethod.CUT_AND_PASTE
SMOOTH = CompletionMethod.SMOOTH

class GashadokuroExperimentsFullTest(GashadokuroTestCase):

	@classmethod
	def setUpClass(cls) -> None:
		cls.meshes, _ = generate_population(SPEC)

	def test_report(self) -> None:
		report = loo_full(self.meshes)

		self.assertEqual(report.kind, 'full')
		self.assertEqual(len(report.rows), 6)
		self.assertEqual([r.left_out for r in report.rows], list(range(6)))
		self.assertTrue(all(r.status == IterationStatus.OK for r in report.rows))
		self.assertTrue(all(r.unknown_count == 162 for r in report.rows))
		self.assertEqual(report.provenance['protocol'], 'loo_full')
		self.assertEqual(report.provenance['shape_count'], 6)

		headline = report.headline()
		self.assertGreater(headline['rms_surface'], 0.0)
		self.assertLessEqual(headline['rms_surface'], headline['max_surface'])

		# Every row was trained on a different subset
		self.assertEqual(len({r.training_hash for r in report.rows}), 6)

	def test_noise_free_is_exact(self) -> None:
		spec = SynthSpec(
			template_resolution = 2, generative_modes = 5, sample_count = 12, noise_sigma = 0.0,
			bend_sigma = 0.0, seed = 2
		)
		self.assertTrue(spec.in_span)
		meshes, _ = generate_population(spec)
		report    = loo_full(meshes)

		# Every left-out shape lies in the span of the others
		for row in report.rows:
			self.assertLess(row.stats.max_surface, 1e-6)
		self.assertLess(report.headline()['rms_vertex'], 1e-6)

	def test_out_of_span_residuals(self) -> None:
		# Shape b moves corner 0 out along its diagonal, shape c moves corner 1 off the slanted face.
		# Each two-shape model has one mode, so the residual of the third shape is what that mode misses
		base   = tetrahedron()
		out    = np.full(3, 1.0 / math.sqrt(3.0))
		moved0 = base.vertices.copy()
		moved0[0] -= out
		moved1 = base.vertices.copy()
		moved1[1] += out

		report = loo_full([base, base.with_vertices(moved0), base.with_vertices(moved1)])
		a, b, c = (row.stats for row in report.rows)

		# Left out a: the model mean is half of each move, orthogonal to the mode
		self.assertAlmostEqual(a.rms_vertex, math.sqrt(2.0) / 4.0, places = 12)
		self.assertAlmostEqual(a.max_surface, 0.5, places = 12)
		self.assertAlmostEqual(a.mean_surface, 0.25, places = 12)
		self.assertAlmostEqual(a.rms_surface, math.sqrt(2.0) / 4.0, places = 12)

		# Left out b or c: the estimate is the base shape, one corner a full unit off
		for stats in (b, c):
			self.assertAlmostEqual(stats.rms_vertex, 0.5, places = 12)
			self.assertGreater(stats.max_surface, 0.0)
			self.assertLessEqual(stats.max_surface, 1.0)

	def test_order_invariant(self) -> None:
		forward  = loo_full(self.meshes)
		backward = loo_full(self.meshes[::-1])
		count    = len(self.meshes)

		for row in forward.rows:
			other = backward.rows[count - 1 - row.left_out]
			self.assertEqual(row.training_hash, other.training_hash)
			for value, expected in zip(other.stats, row.stats):
				self.assertAlmostEqual(value, expected, places = 9)

		for value, expected in zip(backward.aggregate(), forward.aggregate()):
			self.assertAlmostEqual(value, expected, places = 9)

	def test_jobs_invariant(self) -> None:
		serial   = loo_full(self.meshes, jobs = 1)
		parallel = loo_full(self.meshes, jobs = 3)
		self.assertEqual(report_to_dict(serial), report_to_dict(parallel))

		with self.assertRaises(ValueError):
			loo_full(self.meshes, jobs = 0)

	def test_too_few(self) -> None:
		with self.assertRaises(TrainingSetError):
			loo_full(self.meshes[:2])

class GashadokuroExperimentsExtrapolateTest(GashadokuroTestCase):

	@classmethod
	def setUpClass(cls) -> None:
		cls.meshes, _ = generate_population(SPEC)
		cls.report    = loo_extrapolate(cls.meshes)

	def test_cells(self) -> None:
		report = self.report

		self.assertEqual(report.kind, 'extrapolate')
		self.assertEqual(len(report.rows), 6 * 4 * 2)
		self.assertEqual(report.configs, [PriorConfig(f) for f in (0.0, 0.05, 0.10, 0.15)])
		self.assertEqual(report.methods, [CNP, SMOOTH])
		self.assertTrue(all(r.status == IterationStatus.OK for r in report.rows))

		for config in report.configs:
			for method in report.methods:
				agg = report.aggregate(config, method)
				self.assertEqual(agg.iteration_count, 6)
				self.assertEqual(agg.failed_count, 0)
				self.assertTrue(math.isfinite(agg.rms_of_mean_surface))

		with self.assertRaises(ConfigurationError):
			report.aggregate(PriorConfig(0.5), SMOOTH)

	def test_monotone_prior(self) -> None:
		for left_out in range(6):
			counts = [
				r.unknown_count for r in self.report.rows if r.left_out == left_out and r.method == CNP
			]
			self.assertEqual(counts, sorted(counts, reverse = True))

	def test_seam(self) -> None:
		for row in self.report.rows:
			self.assertIsNotNone(row.seam_gap)
			if row.method == SMOOTH:
				self.assertLess(row.seam_gap, 1e-6)
				self.assertGreater(row.knot_count, 0)
			else:
				self.assertEqual(row.knot_count, 0)

	def test_heatmaps(self) -> None:
		cup = self.meshes[0].label(ACETABULUM_LABEL).bits

		for cell in self.report.cells:
			field = self.report.heatmaps[cell]
			self.assertEqual(field.shape, (162, ))
			# The labelled acetabulum is always part of the prior
			self.assertTrue(np.all(field[cup] == HEATMAP_KNOWN_SENTINEL))
			self.assertTrue(np.all((field == HEATMAP_KNOWN_SENTINEL) | (field >= 0.0)))
			self.assertTrue(np.any(field >= 0.0))

	def test_summary(self) -> None:
		summary = self.report.summary()
		gains   = [self.report.improvement(c)['rms'] for c in self.report.configs]

		self.assertAlmostEqual(summary['mean_rms_improvement'], float(np.mean(gains)))
		self.assertAlmostEqual(summary['min_rms_improvement'], min(gains))
		self.assertEqual(self.report.provenance['methods'], ['cut_and_paste', 'smooth'])

	def test_jobs_invariant(self) -> None:
		configs  = (PriorConfig(0.05), )
		serial   = loo_extrapolate(self.meshes, configs, jobs = 1)
		parallel = loo_extrapolate(self.meshes, configs, jobs = 4)
		self.assertEqual(report_to_dict(serial), report_to_dict(parallel))

	def test_degenerate_prior(self) -> None:
		report = loo_extrapolate(self.meshes, (PriorConfig(1.0), ), (CNP, ))

		self.assertTrue(all(r.status == IterationStatus.DEGENERATE for r in report.rows))
		agg = report.aggregate(PriorConfig(1.0), CNP)
		self.assertEqual(agg.degenerate_count, 6)
		self.assertEqual(agg.rms_of_mean_surface, 0.0)
		self.assertTrue(np.all(report.heatmap(PriorConfig(1.0), CNP) == HEATMAP_KNOWN_SENTINEL))

	def test_crest_only(self) -> None:
		report = loo_extrapolate(self.meshes, (PriorConfig(0.3, include_acetabulum = False), ), (CNP, ))
		self.assertTrue(all(r.status == IterationStatus.OK for r in report.rows))

	def test_failures(self) -> None:
		with self.assertRaises(IterationFailedError) as ctx:
			loo_extrapolate(self.meshes, (PriorConfig(0.05), ), max_knots = 3)
		self.assertEqual(ctx.exception.category, ErrorCategory.CONFIG)
		self.assertEqual(ctx.exception.left_out, 0)

		report = loo_extrapolate(self.meshes, (PriorConfig(0.05), ), max_knots = 3, skip_failures = True)
		self.assertEqual(report.aggregate(PriorConfig(0.05), SMOOTH).failed_count, 6)
		self.assertEqual(report.aggregate(PriorConfig(0.05), CNP).failed_count, 0)
		self.assertTrue(math.isnan(report.aggregate(PriorConfig(0.05), SMOOTH).rms_of_mean_surface))
		self.assertTrue(all(
			r.error is not None for r in report.rows if r.status == IterationStatus.FAILED
		))

	def test_invalid(self) -> None:
		with self.assertRaises(ConfigurationError):
			loo_extrapolate(self.meshes, ())
		with self.assertRaises(ConfigurationError):
			loo_extrapolate(self.meshes, (PriorConfig(1.5), ))
		with self.assertRaises(ConfigurationError):
			loo_extrapolate(self.meshes, (PriorConfig(0.0, include_acetabulum = False), ))
		with self.assertRaises(ConfigurationError):
			loo_extrapolate([m.with_labels({}) for m in self.meshes])

	def test_population_mean(self) -> None:
		mean = population_mean(self.meshes)
		self.assertArrayAlmostEqual(mean.vertices, np.mean([m.vertices for m in self.meshes], axis = 0))
		self.assertEqual(mean.label(ACETABULUM_LABEL), self.meshes[0].label(ACETABULUM_LABEL))
