# SPDX-License-Identifier: BSD-3-Clause

import numpy                   as np

from gashadokuro.completion    import TPSWarp, eval_tps, fit_tps
from gashadokuro.support.test  import GashadokuroTestCase, unit_cube
from gashadokuro.types.errors  import SingularSystemError

def _knots(count: int = 20, seed: int = 5) -> np.ndarray:
	rng = np.random.default_rng(seed)
	return np.vstack((unit_cube().vertices * 40.0, rng.uniform(-20.0, 60.0, (count - 8, 3))))

class GashadokuroCompletionTPSTest(GashadokuroTestCase):

	def test_interpolates(self) -> None:
		src = _knots()
		rng = np.random.default_rng(9)
		dst = src + rng.normal(0.0, 2.0, src.shape)

		warp = fit_tps(src, dst)
		self.assertEqual(warp.knot_count, 20)
		self.assertArrayAlmostEqual(warp(src), dst, atol = 1e-8)
		self.assertLess(warp.side_condition_residual(), 1e-8)

	def test_affine_reproduction(self) -> None:
		src    = _knots()
		linear = np.array([[1.1, 0.1, 0.0], [-0.2, 0.9, 0.05], [0.0, 0.3, 1.2]])
		shift  = np.array([5.0, -3.0, 12.0])

		warp = fit_tps(src, src @ linear.T + shift)
		self.assertArrayAlmostEqual(warp.weights, np.zeros_like(src), atol = 1e-9)
		self.assertArrayAlmostEqual(warp.linear, linear, atol = 1e-9)
		self.assertArrayAlmostEqual(warp.translation, shift, atol = 1e-7)

		far = np.array([[100.0, -50.0, 7.0], [0.5, 0.5, 0.5]])
		self.assertArrayAlmostEqual(eval_tps(warp, far), far @ linear.T + shift, atol = 1e-7)

	def test_scale_invariance(self) -> None:
		src = _knots()
		dst = src + np.sin(src / 10.0)

		small = fit_tps(src, dst)
		large = fit_tps(src * 1000.0, dst * 1000.0)
		point = np.array([[10.0, 20.0, 30.0]])
		self.assertArrayAlmostEqual(large(point * 1000.0) / 1000.0, small(point), atol = 1e-8)

	def test_regularization(self) -> None:
		src = _knots()
		rng = np.random.default_rng(2)
		dst = src + rng.normal(0.0, 2.0, src.shape)

		exact  = np.abs(fit_tps(src, dst)(src) - dst).max()
		smooth = np.abs(fit_tps(src, dst, regularization = 1.0)(src) - dst).max()
		self.assertGreater(smooth, exact)
		self.assertEqual(fit_tps(src, dst, regularization = 1.0).regularization, 1.0)

	def test_degenerate_knots(self) -> None:
		cube = unit_cube().vertices

		with self.assertRaisesRegex(SingularSystemError, r'too few knots'):
			fit_tps(cube[:3], cube[:3])

		with self.assertRaisesRegex(SingularSystemError, r'duplicate knots'):
			doubled = np.vstack((cube, cube[:1]))
			fit_tps(doubled, doubled)

		with self.assertRaisesRegex(SingularSystemError, r'coplanar knots'):
			fit_tps(cube[:4], cube[:4])

	def test_invalid_arguments(self) -> None:
		src = _knots()
		with self.assertRaises(ValueError):
			fit_tps(src, src[:-1])
		with self.assertRaises(ValueError):
			fit_tps(src, src, regularization = -0.5)
		with self.assertRaises(ValueError):
			TPSWarp(src, src[:-1], np.zeros((3, 4)))

	def test_random_knot_sets(self) -> None:
		rng = np.random.default_rng(2024)
		for _ in range(200):
			count = int(rng.integers(4, 501))
			src   = rng.uniform(-50.0, 50.0, (count, 3))
			dst   = src + rng.normal(0.0, 3.0, src.shape)
			diag  = float(np.linalg.norm(src.max(axis = 0) - src.min(axis = 0)))

			warp = fit_tps(src, dst)
			self.assertLess(float(np.abs(warp(src) - dst).max()), 1e-9 * diag, f'{count} knots')

	def test_identity_and_translation(self) -> None:
		src = _knots()

		identity = fit_tps(src, src)
		self.assertLess(float(np.linalg.norm(identity.weights)), 1e-10)
		self.assertArrayAlmostEqual(identity.linear, np.eye(3), atol = 1e-9)
		self.assertArrayAlmostEqual(identity.translation, np.zeros(3), atol = 1e-7)

		shift = np.array([-4.0, 2.5, 30.0])
		moved = fit_tps(src, src + shift)
		self.assertLess(float(np.linalg.norm(moved.weights)), 1e-10)
		self.assertArrayAlmostEqual(moved.linear, np.eye(3), atol = 1e-9)
		self.assertArrayAlmostEqual(moved.translation, shift, atol = 1e-7)

	def test_dense_solve(self) -> None:
		src = _knots(10, seed = 11)
		rng = np.random.default_rng(4)
		dst = src + rng.normal(0.0, 5.0, src.shape)

		# The bordered system assembled directly in millimetres
		system = np.zeros((14, 14))
		system[:10, :10] = np.linalg.norm(src[:, None, :] - src[None, :, :], axis = 2)
		system[:10, 10:13] = src
		system[:10, 13] = 1.0
		system[10:, :10] = system[:10, 10:].T
		rhs = np.vstack((dst, np.zeros((4, 3))))
		solution = np.linalg.solve(system, rhs)

		warp = fit_tps(src, dst)
		self.assertArrayAlmostEqual(warp.weights, solution[:10], atol = 1e-9)
		self.assertArrayAlmostEqual(warp.linear, solution[10:13].T, atol = 1e-9)
		self.assertArrayAlmostEqual(warp.translation, solution[13], atol = 1e-7)

		where = rng.uniform(-40.0, 80.0, (25, 3))
		dense = where @ solution[10:13] + solution[13] + np.linalg.norm(where[:, None, :] - src[None, :, :], axis = 2) @ solution[:10]
		self.assertArrayAlmostEqual(eval_tps(warp, where), dense, atol = 1e-7)

	def test_far_field(self) -> None:
		src = _knots()
		rng = np.random.default_rng(8)
		warp = fit_tps(src, src + rng.normal(0.0, 3.0, src.shape))

		heading = np.array([0.48, -0.6, 0.64])
		ratios  = []
		for reach in (1e3, 1e4, 1e5, 1e6):
			point  = heading[None, :] * reach
			affine = point @ warp.linear.T + warp.translation
			ratios.append(float(np.linalg.norm(eval_tps(warp, point) - affine)) / reach)

		# The side conditions cancel the kernel's linear growth
		for near, far in zip(ratios, ratios[1:]):
			self.assertLess(far, near)
		self.assertLess(ratios[-1], 1e-6)
