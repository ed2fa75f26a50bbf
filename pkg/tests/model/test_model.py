# SPDX-License-Identifier: BSD-3-Clause

import numpy                  as np
from scipy                    import linalg

from gashadokuro.mesh         import TriMesh, VertexMask
from gashadokuro.model        import (
	ModeCoefficients, build_ssm, mode_shapes, project_full, project_partial, synthesize
)
from gashadokuro.support.test import GashadokuroTestCase, tetrahedron, unit_cube
from gashadokuro.types.errors import EmptyRegionError, TopologyMismatchError, TrainingSetError

def _population(count: int, seed: int = 1, scale: float = 0.1) -> list[TriMesh]:
	rng  = np.random.default_rng(seed)
	cube = unit_cube()
	return [cube.with_vertices(cube.vertices + scale * rng.standard_normal((8, 3))) for _ in range(count)]

class GashadokuroModelBuildTest(GashadokuroTestCase):

	def test_modes(self) -> None:
		meshes = _population(6)
		ssm    = build_ssm(meshes)

		self.assertEqual(ssm.vertex_count, 8)
		self.assertEqual(ssm.mode_count, 5)
		self.assertArrayAlmostEqual(ssm.modes.T @ ssm.modes, np.eye(5), atol = 1e-10)
		self.assertTrue(np.all(np.diff(ssm.std_devs) <= 0.0))
		self.assertTrue(np.all(ssm.std_devs > 0.0))
		self.assertAlmostEqual(float(ssm.explained_variance_ratio.sum()), 1.0)
		self.assertArrayAlmostEqual(ssm.mean, np.mean([m.flat for m in meshes], axis = 0))

		# Largest magnitude entry of every mode is positive
		peaks = ssm.modes[np.argmax(np.abs(ssm.modes), axis = 0), np.arange(5)]
		self.assertTrue(np.all(peaks > 0.0))

	def test_deterministic(self) -> None:
		a = build_ssm(_population(6))
		b = build_ssm(_population(6))
		self.assertArrayEqual(a.modes, b.modes)
		self.assertArrayEqual(a.std_devs, b.std_devs)

	def test_sample_variance(self) -> None:
		cube  = unit_cube()
		other = cube.with_vertices(cube.vertices + [0.0, 0.0, 2.0])
		ssm   = build_ssm([cube, other])

		# Two shapes a distance d apart give one mode with sigma d / sqrt(2)
		self.assertEqual(ssm.mode_count, 1)
		self.assertAlmostEqual(float(ssm.std_devs[0]), np.sqrt(8 * 4.0) / np.sqrt(2.0))

	def test_zero_variance(self) -> None:
		cube = unit_cube()
		ssm  = build_ssm([cube, cube, cube])

		self.assertEqual(ssm.mode_count, 0)
		self.assertArrayAlmostEqual(synthesize(ssm, []).vertices, cube.vertices)
		self.assertEqual(len(project_partial(ssm, cube, VertexMask.full(8))), 0)

	def test_invalid(self) -> None:
		with self.assertRaises(TrainingSetError):
			build_ssm([unit_cube()])
		with self.assertRaises(TopologyMismatchError):
			build_ssm([unit_cube(), tetrahedron()])

		ssm = build_ssm(_population(3))
		with self.assertRaises(TopologyMismatchError):
			project_full(ssm, tetrahedron())
		with self.assertRaises(ValueError):
			synthesize(ssm, [1.0])

class GashadokuroModelProjectionTest(GashadokuroTestCase):

	def test_full_reconstruction(self) -> None:
		meshes = _population(6)
		ssm    = build_ssm(meshes)

		for mesh in meshes:
			self.assertArrayAlmostEqual(synthesize(ssm, project_full(ssm, mesh)).vertices, mesh.vertices, atol = 1e-10)

	def test_partial_matches_full(self) -> None:
		meshes = _population(6)
		ssm    = build_ssm(meshes)
		target = _population(1, seed = 99)[0]

		full    = project_full(ssm, target)
		partial = project_partial(ssm, target, VertexMask.full(8))
		self.assertArrayAlmostEqual(partial.b, full.b, atol = 1e-10)

	def test_partial_recovers_span(self) -> None:
		ssm   = build_ssm(_population(4))
		truth = ModeCoefficients.from_normalized(ssm, [1.5, -0.5, 2.0])
		shape = synthesize(ssm, truth)
		known = VertexMask.from_indices(8, [0, 1, 2, 3])

		from_mesh   = project_partial(ssm, shape, known)
		from_points = project_partial(ssm, shape.vertices[known.bits], known)
		self.assertArrayAlmostEqual(from_mesh.b, truth.b, atol = 1e-9)
		self.assertArrayAlmostEqual(from_points.b, truth.b, atol = 1e-9)
		self.assertArrayAlmostEqual(from_mesh.normalized, [1.5, -0.5, 2.0], atol = 1e-9)

	def test_partial_underdetermined(self) -> None:
		ssm    = build_ssm(_population(8))
		target = _population(1, seed = 42)[0]
		known  = VertexMask.from_indices(8, [5])

		# Seven modes but only three equations, the fit still interpolates the known vertex
		estimate = synthesize(ssm, project_partial(ssm, target, known))
		self.assertArrayAlmostEqual(estimate.vertices[5], target.vertices[5], atol = 1e-9)

	def test_regularization(self) -> None:
		ssm    = build_ssm(_population(6))
		target = _population(1, seed = 7)[0]
		known  = VertexMask.from_indices(8, [0, 1, 4])

		plain  = project_partial(ssm, target, known)
		shrunk = project_partial(ssm, target, known, regularization = 10.0)
		self.assertLess(float(np.linalg.norm(shrunk.b)), float(np.linalg.norm(plain.b)))

		with self.assertRaises(ValueError):
			project_partial(ssm, target, known, regularization = -1.0)

	def test_partial_invalid(self) -> None:
		ssm = build_ssm(_population(4))

		with self.assertRaises(EmptyRegionError):
			project_partial(ssm, unit_cube(), VertexMask.empty(8))
		with self.assertRaises(TopologyMismatchError):
			project_partial(ssm, unit_cube(), VertexMask.full(4))
		with self.assertRaises(TopologyMismatchError):
			project_partial(ssm, np.zeros((3, 3)), VertexMask.from_indices(8, [0, 1]))

	def test_mode_shapes(self) -> None:
		ssm    = build_ssm(_population(4))
		shapes = mode_shapes(ssm, 2, 3.0)

		self.assertEqual([(m, s) for m, s, _ in shapes], [(0, 1), (0, -1), (1, 1), (1, -1)])
		offset = shapes[0][2].flat - ssm.mean
		self.assertArrayAlmostEqual(offset, 3.0 * ssm.std_devs[0] * ssm.modes[:, 0], atol = 1e-12)
		self.assertEqual(len(mode_shapes(ssm, 10)), 2 * ssm.mode_count)

class GashadokuroModelOracleTest(GashadokuroTestCase):

	def test_matches_covariance_eigendecomposition(self) -> None:
		meshes = _population(9, seed = 21, scale = 0.3)
		ssm    = build_ssm(meshes)

		shapes = np.stack([m.flat for m in meshes])
		cov    = np.cov(shapes, rowvar = False, ddof = 1)
		evals, evecs = linalg.eigh(cov)
		evals  = evals[::-1][:ssm.mode_count]
		evecs  = evecs[:, ::-1][:, :ssm.mode_count]

		self.assertEqual(ssm.mode_count, 8)
		self.assertTrue(np.allclose(ssm.std_devs, np.sqrt(evals), rtol = 1e-8, atol = 0.0))
		self.assertLess(float(np.max(linalg.subspace_angles(ssm.modes, evecs))), 1e-6)

	def test_generative_span(self) -> None:
		rng    = np.random.default_rng(12)
		cube   = unit_cube()
		fields = linalg.qr(rng.standard_normal((24, 2)), mode = 'economic')[0]
		meshes = [
			cube.with_vertices(cube.vertices + (fields @ rng.normal(0.0, 1.0, 2)).reshape(8, 3))
			for _ in range(6)
		]
		ssm = build_ssm(meshes)

		self.assertEqual(ssm.mode_count, 2)
		self.assertLess(float(np.max(linalg.subspace_angles(ssm.modes, fields))), 1e-6)

	def test_minimum_norm(self) -> None:
		ssm    = build_ssm(_population(6, seed = 13))
		known  = VertexMask.from_indices(8, [2, 6])
		target = _population(1, seed = 14)[0]

		rows = (3 * known.indices[:, None] + np.arange(3)).reshape(-1)
		a    = ssm.modes[rows]
		y    = target.flat[rows] - ssm.mean[rows]

		# Overdetermined, the least squares solution is unique
		expected = linalg.pinv(a) @ y
		self.assertArrayAlmostEqual(project_partial(ssm, target, known).b, expected, atol = 1e-9)

		# Underdetermined, the minimum norm solution is returned
		single   = VertexMask.from_indices(8, [4])
		rows     = np.arange(12, 15)
		expected = linalg.pinv(ssm.modes[rows]) @ (target.flat[rows] - ssm.mean[rows])
		self.assertArrayAlmostEqual(project_partial(ssm, target, single).b, expected, atol = 1e-9)
