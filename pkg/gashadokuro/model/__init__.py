# SPDX-License-Identifier: BSD-3-Clause

'''
Linear statistical shape models.

A model is built by principal component analysis over a population of corresponded meshes. Every mesh
is flattened into its ``3N`` shape vector ``(x0, y0, z0, x1, ...)``; the model stores the mean vector,
an orthonormal ``3N x k`` mode matrix and one sample standard deviation per mode.

Inputs are assumed to be aligned already, no Procrustes step is applied.
'''

import logging         as log
from typing            import Any, Sequence

import numpy           as np
import numpy.typing    as npt
from scipy             import linalg

from ..mesh            import TriMesh, VertexMask
from ..types.constants import MODE_VARIANCE_CUTOFF
from ..types.errors    import EmptyRegionError, TopologyMismatchError, TrainingSetError

__all__ = (
	'SSM',
	'ModeCoefficients',

	'build_ssm',
	'project_full',
	'project_partial',
	'synthesize',
	'mode_shapes',
)

class SSM:
	'''
	A linear statistical shape model.

	Parameters
	----------
	mean : array_like
		``3N`` mean shape vector, in millimetres.

	modes : array_like
		``3N x k`` matrix with orthonormal columns.

	std_devs : array_like
		``k`` per-mode sample standard deviations, nonincreasing.

	faces : array_like
		``(F, 3)`` template connectivity.

	provenance : dict | None
		Free-form record of how the model was built.

	Attributes
	----------
	mean : numpy.ndarray
		Read-only mean shape vector.

	modes : numpy.ndarray
		Read-only mode matrix.

	std_devs : numpy.ndarray
		Read-only per-mode standard deviations.

	faces : numpy.ndarray
		Read-only template connectivity.

	vertex_count : int
		Number of template vertices ``N``.

	provenance : dict
		Free-form record of how the model was built.
	'''

	def __init__(
		self, mean: npt.ArrayLike, modes: npt.ArrayLike, std_devs: npt.ArrayLike, faces: npt.ArrayLike,
		provenance: dict[str, Any] | None = None
	) -> None:
		self.mean     = np.array(mean, dtype = np.float64).reshape(-1)
		self.std_devs = np.array(std_devs, dtype = np.float64).reshape(-1)
		self.modes    = np.array(modes, dtype = np.float64).reshape(self.mean.shape[0], self.std_devs.shape[0])
		self.faces    = np.array(faces, dtype = np.int64).reshape(-1, 3)

		if self.mean.shape[0] % 3 != 0:
			raise ValueError(f'Mean shape vector length {self.mean.shape[0]} is not a multiple of 3')

		for arr in (self.mean, self.modes, self.std_devs, self.faces):
			arr.setflags(write = False)

		self.vertex_count = self.mean.shape[0] // 3
		self.provenance   = dict(provenance or {})

	@property
	def mode_count(self) -> int:
		return int(self.std_devs.shape[0])

	@property
	def variances(self) -> npt.NDArray[np.float64]:
		return self.std_devs ** 2

	@property
	def explained_variance_ratio(self) -> npt.NDArray[np.float64]:
		''' Fraction of the total model variance carried by each mode '''

		total = float(self.variances.sum())
		if total == 0.0:
			return np.zeros_like(self.std_devs)
		return self.variances / total

	def mean_mesh(self) -> TriMesh:
		''' The mean shape as a mesh '''
		return TriMesh(self.mean.reshape(-1, 3), self.faces)

	def check_mesh(self, mesh: TriMesh) -> None:
		'''
		Ensure ``mesh`` has the model's template topology.

		Raises
		------
		TopologyMismatchError
			If the vertex count or connectivity differ.
		'''

		if mesh.vertex_count != self.vertex_count:
			raise TopologyMismatchError('vertex count', self.vertex_count, mesh.vertex_count)
		if not np.array_equal(mesh.faces, self.faces):
			raise TopologyMismatchError('connectivity', f'{self.faces.shape[0]} template faces', 'different faces')

	def __repr__(self) -> str:
		return f'<SSM vertices={self.vertex_count} modes={self.mode_count}>'

class ModeCoefficients:
	'''
	Shape coefficients in the basis of a model's modes.

	Parameters
	----------
	b : array_like
		One coefficient per mode, in millimetres.

	std_devs : array_like | None
		The model's standard deviations, needed for :py:attr:`normalized`.
	'''

	def __init__(self, b: npt.ArrayLike, std_devs: npt.ArrayLike | None = None) -> None:
		self.b = np.array(b, dtype = np.float64).reshape(-1)
		self.b.setflags(write = False)
		self._std_devs = None if std_devs is None else np.asarray(std_devs, dtype = np.float64).reshape(-1)

		if self._std_devs is not None and self._std_devs.shape != self.b.shape:
			raise ValueError(f'Expected {self._std_devs.shape[0]} coefficients, got {self.b.shape[0]}')

	@staticmethod
	def from_normalized(ssm: SSM, sigmas: npt.ArrayLike) -> 'ModeCoefficients':
		''' Coefficients given in units of each mode's standard deviation '''

		z = np.asarray(sigmas, dtype = np.float64).reshape(-1)
		if z.shape[0] != ssm.mode_count:
			raise ValueError(f'Expected {ssm.mode_count} coefficients, got {z.shape[0]}')
		return ModeCoefficients(z * ssm.std_devs, ssm.std_devs)

	@property
	def normalized(self) -> npt.NDArray[np.float64]:
		''' Coefficients divided by the per-mode standard deviations '''

		if self._std_devs is None:
			raise ValueError('Coefficients were created without model standard deviations')
		return self.b / self._std_devs

	def __len__(self) -> int:
		return int(self.b.shape[0])

	def __repr__(self) -> str:
		return f'<ModeCoefficients k={len(self)}>'

def _stack(meshes: Sequence[TriMesh]) -> npt.NDArray[np.float64]:
	template = meshes[0]
	for mesh in meshes[1:]:
		template.check_topology(mesh)
	return np.stack([m.flat for m in meshes])

def _orient(modes: npt.NDArray[np.float64]) -> npt.NDArray[np.float64]:
	# Make the largest magnitude entry of each mode positive
	peak  = np.argmax(np.abs(modes), axis = 0)
	signs = np.sign(modes[peak, np.arange(modes.shape[1])])
	signs[signs == 0] = 1.0
	return modes * signs

def build_ssm(meshes: Sequence[TriMesh], *, provenance: dict[str, Any] | None = None) -> SSM:
	'''
	Build a statistical shape model by PCA over corresponded meshes.

	The eigen-decomposition is done on the ``S x S`` Gram matrix of the centred shape vectors
	(the snapshot method), with the sample covariance divisor ``S - 1``. Modes whose variance is below
	:py:data:`MODE_VARIANCE_CUTOFF <gashadokuro.types.constants.MODE_VARIANCE_CUTOFF>` times the largest
	variance are dropped.

	Parameters
	----------
	meshes : Sequence[TriMesh]
		At least two meshes sharing one template connectivity.

	provenance : dict | None
		Stored on the resulting model.

	Raises
	------
	TrainingSetError
		If fewer than two meshes are given.

	TopologyMismatchError
		If the meshes do not share connectivity.
	'''

	if len(meshes) < 2:
		raise TrainingSetError(2, len(meshes))

	shapes   = _stack(meshes)
	count    = shapes.shape[0]
	mean     = shapes.mean(axis = 0)
	centered = shapes - mean

	gram = (centered @ centered.T) / (count - 1)
	evals, evecs = linalg.eigh(gram)

	order = np.argsort(evals, kind = 'stable')[::-1]
	evals = evals[order]
	evecs = evecs[:, order]

	largest = float(evals[0]) if evals.size else 0.0
	keep    = evals > max(largest * MODE_VARIANCE_CUTOFF, 0.0) if largest > 0.0 else np.zeros_like(evals, dtype = bool)
	evals   = evals[keep]
	evecs   = evecs[:, keep]

	if evals.size:
		modes = (centered.T @ evecs) / np.sqrt(evals * (count - 1))
		# Re-orthonormalize against round-off, keeping each column's orientation
		q, r  = linalg.qr(modes, mode = 'economic')
		modes = q * np.sign(np.where(np.diag(r) == 0, 1.0, np.diag(r)))
		modes = _orient(modes)
	else:
		modes = np.zeros((shapes.shape[1], 0))

	ssm = SSM(mean, modes, np.sqrt(evals), meshes[0].faces, provenance)
	log.debug(f'Built {ssm!r} from {count} shapes, dropped {int((~keep).sum())} zero-variance modes')
	return ssm

def project_full(ssm: SSM, mesh: TriMesh) -> ModeCoefficients:
	'''
	Project a complete mesh onto the model modes.

	``b = modes^T (x - mean)``; synthesizing ``b`` gives the closest shape in the model span.

	Raises
	------
	TopologyMismatchError
		If the mesh does not have the model's topology.
	'''

	ssm.check_mesh(mesh)
	return ModeCoefficients(ssm.modes.T @ (mesh.flat - ssm.mean), ssm.std_devs)

def _known_points(ssm: SSM, partial: 'TriMesh | npt.ArrayLike', known: VertexMask) -> npt.NDArray[np.float64]:
	if isinstance(partial, TriMesh):
		if partial.vertex_count == ssm.vertex_count:
			return partial.vertices[known.bits]
		points = partial.vertices
	else:
		points = np.asarray(partial, dtype = np.float64).reshape(-1, 3)
		if points.shape[0] == ssm.vertex_count and known.count != ssm.vertex_count:
			return points[known.bits]

	if points.shape[0] != known.count:
		raise TopologyMismatchError('partial vertex count', f'{known.count} known vertices', points.shape[0])
	return points

def project_partial(
	ssm: SSM, partial: 'TriMesh | npt.ArrayLike', known: VertexMask, *, regularization: float = 0.0
) -> ModeCoefficients:
	'''
	Fit model coefficients to the known region of a partial shape.

	Solves ``min_b || R(mean + modes b) - R(x) ||^2 + regularization * ||b||^2`` where ``R`` keeps the
	coordinates of the known vertices, using a rank revealing complete orthogonal factorization. When the
	restricted modes are rank deficient the minimum norm minimizer is returned.

	Parameters
	----------
	ssm : SSM
		The model.

	partial : TriMesh | array_like
		Either a mesh with the full template vertex count (only known vertices are read), or the
		``(|known|, 3)`` coordinates of the known vertices in index order.

	known : VertexMask
		The known vertices.

	regularization : float
		Optional Tikhonov weight, zero by default.

	Raises
	------
	EmptyRegionError
		If ``known`` is empty.

	TopologyMismatchError
		If the mask or partial shape do not fit the model.
	'''

	known.check_against(ssm.vertex_count)
	if not known.any():
		raise EmptyRegionError('known region')
	if regularization < 0.0:
		raise ValueError(f'Regularization must be non-negative, got {regularization}')

	points = _known_points(ssm, partial, known)
	rows   = (3 * known.indices[:, None] + np.arange(3)).reshape(-1)

	a = ssm.modes[rows, :]
	y = points.reshape(-1) - ssm.mean[rows]

	if ssm.mode_count == 0:
		return ModeCoefficients(np.zeros(0), ssm.std_devs)

	if regularization > 0.0:
		a = np.vstack((a, np.sqrt(regularization) * np.eye(ssm.mode_count)))
		y = np.concatenate((y, np.zeros(ssm.mode_count)))

	cond = max(a.shape) * np.finfo(np.float64).eps
	b, _, rank, _ = linalg.lstsq(a, y, cond = cond, lapack_driver = 'gelsy')
	if rank < ssm.mode_count:
		log.debug(f'Partial projection is rank deficient: rank {rank} of {ssm.mode_count} modes')
	return ModeCoefficients(b, ssm.std_devs)

def synthesize(ssm: SSM, coeffs: 'ModeCoefficients | npt.ArrayLike') -> TriMesh:
	'''
	Generate the shape ``mean + modes b`` with the template connectivity.

	Raises
	------
	ValueError
		If the coefficient count does not match the model's mode count.
	'''

	b = coeffs.b if isinstance(coeffs, ModeCoefficients) else np.asarray(coeffs, dtype = np.float64).reshape(-1)
	if b.shape[0] != ssm.mode_count:
		raise ValueError(f'Expected {ssm.mode_count} coefficients, got {b.shape[0]}')
	return TriMesh((ssm.mean + ssm.modes @ b).reshape(-1, 3), ssm.faces)

def mode_shapes(ssm: SSM, mode_count: int = 3, sigmas: float = 3.0) -> list[tuple[int, int, TriMesh]]:
	'''
	The shapes at ``+sigmas`` and ``-sigmas`` standard deviations along each of the leading modes.

	Returns
	-------
	list[tuple[int, int, TriMesh]]
		``(mode index, sign, mesh)`` triples, ``+1`` before ``-1`` for each mode.
	'''

	shapes = []
	for mode in range(min(mode_count, ssm.mode_count)):
		for sign in (1, -1):
			b = np.zeros(ssm.mode_count)
			b[mode] = sign * sigmas * ssm.std_devs[mode]
			shapes.append((mode, sign, synthesize(ssm, b)))
	return shapes
