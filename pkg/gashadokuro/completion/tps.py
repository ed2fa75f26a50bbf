# SPDX-License-Identifier: BSD-3-Clause

'''
Three dimensional thin-plate spline warps.

The warp is ``f(p) = A p + t + sum_i w_i U(|p - k_i|)`` with the 3D biharmonic kernel ``U(r) = r``,
fit by solving the bordered ``(K + 4) x (K + 4)`` system

.. code-block:: text

	| U + lambda I   P | | w |   | y |
	|                  | |   | = |   |
	| P^T            0 | | a |   | 0 |

where ``P = [k, 1]``. The bottom block enforces the side conditions ``sum w = 0`` and
``sum w k^T = 0`` that keep the warp affine in the far field.

The system is assembled in normalized knot coordinates (centred, unit RMS radius) and the result is
mapped back, which keeps the conditioning independent of the mesh scale.
'''

import logging      as log
import warnings

import numpy        as np
import numpy.typing as npt
from scipy          import linalg
from scipy.spatial  import distance

from ..types.errors import SingularSystemError

__all__ = (
	'TPSWarp',

	'fit_tps',
	'eval_tps',
)

COPLANAR_RATIO = 1e-12
''' Knots whose smallest to largest spread ratio is below this are treated as coplanar '''

EVAL_CHUNK = 4096
''' Points evaluated per kernel block '''

class TPSWarp:
	'''
	A fitted 3D thin-plate spline warp.

	Parameters
	----------
	knots : array_like
		``(K, 3)`` source points.

	weights : array_like
		``(K, 3)`` kernel coefficients.

	affine : array_like
		``3 x 4`` matrix, linear part in the first three columns and translation in the last.

	regularization : float
		The smoothing weight the warp was fit with.
	'''

	def __init__(
		self, knots: npt.ArrayLike, weights: npt.ArrayLike, affine: npt.ArrayLike, regularization: float = 0.0
	) -> None:
		self.knots   = np.array(knots, dtype = np.float64).reshape(-1, 3)
		self.weights = np.array(weights, dtype = np.float64).reshape(-1, 3)
		self.affine  = np.array(affine, dtype = np.float64).reshape(3, 4)
		self.regularization = float(regularization)

		if self.knots.shape != self.weights.shape:
			raise ValueError(f'Expected one weight row per knot, got {self.weights.shape} for {self.knots.shape}')

		for arr in (self.knots, self.weights, self.affine):
			arr.setflags(write = False)

	@property
	def knot_count(self) -> int:
		return int(self.knots.shape[0])

	@property
	def linear(self) -> npt.NDArray[np.float64]:
		return self.affine[:, :3]

	@property
	def translation(self) -> npt.NDArray[np.float64]:
		return self.affine[:, 3]

	def side_condition_residual(self) -> float:
		'''
		Largest violation of the side conditions, measured in the normalized knot frame.

		The value has the units of the targets, so it compares against the target magnitude.
		'''

		center = self.knots.mean(axis = 0)
		scale  = float(np.sqrt(np.mean(np.sum((self.knots - center) ** 2, axis = 1))))
		norm   = (self.knots - center) / scale
		w      = self.weights * scale
		total  = np.abs(w.sum(axis = 0)).max()
		moment = np.abs(norm.T @ w).max()
		return float(max(total, moment))

	def __call__(self, points: npt.ArrayLike) -> npt.NDArray[np.float64]:
		return eval_tps(self, points)

	def __repr__(self) -> str:
		return f'<TPSWarp knots={self.knot_count} regularization={self.regularization}>'

def _check_knots(sources: npt.NDArray[np.float64]) -> None:
	count = sources.shape[0]
	if count < 4:
		raise SingularSystemError('too few knots', f'{count} given, at least 4 are needed')

	if distance.pdist(sources).min() == 0.0:
		raise SingularSystemError('duplicate knots')

	spread = linalg.svd(sources - sources.mean(axis = 0), compute_uv = False)
	if spread[0] == 0.0 or spread[2] / spread[0] < COPLANAR_RATIO:
		raise SingularSystemError('coplanar knots')

def fit_tps(sources: npt.ArrayLike, targets: npt.ArrayLike, regularization: float = 0.0) -> TPSWarp:
	'''
	Fit a thin-plate spline mapping ``sources`` onto ``targets``.

	With ``regularization`` of zero the warp interpolates every knot exactly. A positive value is added
	to the kernel diagonal of the normalized system, trading exactness for smoothness.

	Parameters
	----------
	sources : array_like
		``(K, 3)`` knot positions, at least 4, pairwise distinct and not coplanar.

	targets : array_like
		``(K, 3)`` positions the knots are mapped onto.

	regularization : float
		Non-negative smoothing weight.

	Raises
	------
	SingularSystemError
		If the knots are too few, duplicated, coplanar, or the system is numerically singular.

	ValueError
		If the point arrays are malformed or ``regularization`` is negative.
	'''

	src = np.asarray(sources, dtype = np.float64)
	dst = np.asarray(targets, dtype = np.float64)

	if src.ndim != 2 or src.shape[1] != 3 or src.shape != dst.shape:
		raise ValueError(f'Expected matching (K, 3) source and target arrays, got {src.shape} and {dst.shape}')
	if regularization < 0.0:
		raise ValueError(f'Regularization must be non-negative, got {regularization}')

	_check_knots(src)

	count  = src.shape[0]
	center = src.mean(axis = 0)
	scale  = float(np.sqrt(np.mean(np.sum((src - center) ** 2, axis = 1))))
	norm   = (src - center) / scale

	system = np.zeros((count + 4, count + 4))
	system[:count, :count] = distance.cdist(norm, norm) + regularization * np.eye(count)
	system[:count, count:count + 3] = norm
	system[:count, count + 3] = 1.0
	system[count:, :count] = system[:count, count:].T

	rhs = np.zeros((count + 4, 3))
	rhs[:count] = dst

	with warnings.catch_warnings():
		warnings.simplefilter('error', linalg.LinAlgWarning)
		try:
			solution = linalg.solve(system, rhs, assume_a = 'sym')
		except linalg.LinAlgWarning as e:
			raise SingularSystemError('ill-conditioned knot system', str(e)) from e
		except linalg.LinAlgError as e:
			raise SingularSystemError('singular knot system', str(e)) from e

	weights = solution[:count] / scale
	lin     = solution[count:count + 3].T / scale
	trans   = solution[count + 3] - lin @ center

	warp = TPSWarp(src, weights, np.column_stack((lin, trans)), regularization)
	log.debug(f'Fit {warp!r}, side condition residual {warp.side_condition_residual():.2e}')
	return warp

def eval_tps(warp: TPSWarp, points: npt.ArrayLike) -> npt.NDArray[np.float64]:
	'''
	Evaluate a warp at each of the given points.

	Parameters
	----------
	warp : TPSWarp
		The warp.

	points : array_like
		``(P, 3)`` positions.

	Returns
	-------
	numpy.ndarray
		``(P, 3)`` warped positions.
	'''

	pts = np.asarray(points, dtype = np.float64).reshape(-1, 3)
	out = pts @ warp.linear.T + warp.translation

	for start in range(0, pts.shape[0], EVAL_CHUNK):
		block = pts[start:start + EVAL_CHUNK]
		out[start:start + EVAL_CHUNK] += distance.cdist(block, warp.knots) @ warp.weights
	return out
