# SPDX-License-Identifier: BSD-3-Clause

'''
Specialized errors for Gashadokuro.

Every error carries an :py:class:`ErrorCategory <gashadokuro.types.constants.ErrorCategory>` so that
callers, and the command line front-end in particular, can report failures in a machine parsable way.
'''

from pathlib    import Path

from .constants import ErrorCategory

__all__ = (
	'GashadokuroError',

	'MeshFormatError',
	'InvalidMeshError',
	'TopologyMismatchError',
	'EmptyRegionError',
	'SingularSystemError',
	'ModelFileError',
	'ModelVersionError',
	'TrainingSetError',
	'ConfigurationError',
	'IterationFailedError',
)

class GashadokuroError(Exception):
	''' Base class for all Gashadokuro errors. '''

	category: ErrorCategory = ErrorCategory.CONFIG

class MeshFormatError(GashadokuroError):
	'''
	Raised when a mesh file can not be parsed or uses an unsupported encoding.

	Parameters
	----------
	path : Path | str
		The file being read.

	reason : str
		What was wrong with it.

	Attributes
	----------
	path : Path
		The file being read.

	reason : str
		What was wrong with it.
	'''

	category = ErrorCategory.FORMAT

	def __init__(self, path: Path | str, reason: str) -> None:
		super().__init__(f'Unable to read mesh \'{path}\': {reason}')
		self.path   = Path(path)
		self.reason = reason

class InvalidMeshError(GashadokuroError):
	'''
	Raised when vertex and face data violate the triangle mesh invariants.

	Parameters
	----------
	reason : str
		The violated invariant.
	'''

	category = ErrorCategory.FORMAT

	def __init__(self, reason: str) -> None:
		super().__init__(f'Invalid triangle mesh: {reason}')
		self.reason = reason

class TopologyMismatchError(GashadokuroError):
	'''
	Raised when two meshes, or a mesh and a shape model, do not share the same template connectivity.

	Parameters
	----------
	what : str
		Which quantity disagreed, e.g. ``vertex count`` or ``connectivity``.

	expected : object
		The expected value.

	actual : object
		The value found.

	Attributes
	----------
	what : str
		Which quantity disagreed.

	expected : object
		The expected value.

	actual : object
		The value found.
	'''

	category = ErrorCategory.TOPOLOGY

	def __init__(self, what: str, expected: object, actual: object) -> None:
		super().__init__(f'Topology mismatch in {what}: expected {expected}, got {actual}.')
		self.what     = what
		self.expected = expected
		self.actual   = actual

class EmptyRegionError(GashadokuroError):
	'''
	Raised when a vertex region an operation depends on is empty or otherwise degenerate.

	Parameters
	----------
	region : str
		The name of the region, e.g. ``acetabulum label`` or ``seam``.

	reason : str
		Why the region is unusable.
	'''

	category = ErrorCategory.TOPOLOGY

	def __init__(self, region: str, reason: str = 'region is empty') -> None:
		super().__init__(f'Degenerate {region}: {reason}.')
		self.region = region
		self.reason = reason

class SingularSystemError(GashadokuroError):
	'''
	Raised when a linear system can not be solved.

	Parameters
	----------
	condition : str
		The offending condition, e.g. ``coplanar knots`` or ``duplicate knots``.

	detail : str
		Optional extra context.

	Attributes
	----------
	condition : str
		The offending condition.
	'''

	category = ErrorCategory.SINGULAR

	def __init__(self, condition: str, detail: str = '') -> None:
		msg = f'Singular system: {condition}'
		if detail:
			msg += f' ({detail})'
		super().__init__(f'{msg}.')
		self.condition = condition
		self.detail    = detail

class ModelFileError(GashadokuroError):
	'''
	Raised when a shape model file is truncated, corrupt, or inconsistent.

	Parameters
	----------
	path : Path | str
		The model file.

	reason : str
		What was wrong with it.
	'''

	category = ErrorCategory.FORMAT

	def __init__(self, path: Path | str, reason: str) -> None:
		super().__init__(f'Corrupt shape model file \'{path}\': {reason}')
		self.path   = Path(path)
		self.reason = reason

class ModelVersionError(ModelFileError):
	'''
	Raised when a shape model file was written with an unsupported format version.

	Parameters
	----------
	path : Path | str
		The model file.

	found : int
		The version stored in the file.

	supported : int
		The version this library reads and writes.

	Attributes
	----------
	found : int
		The version stored in the file.

	supported : int
		The version this library reads and writes.
	'''

	def __init__(self, path: Path | str, found: int, supported: int) -> None:
		super().__init__(path, f'format version {found} is not supported, only version {supported}')
		self.found     = found
		self.supported = supported

class TrainingSetError(GashadokuroError):
	'''
	Raised when an operation is given fewer shapes than it needs.

	Parameters
	----------
	needed : int
		The minimum number of shapes.

	given : int
		The number of shapes supplied.
	'''

	category = ErrorCategory.CONFIG

	def __init__(self, needed: int, given: int) -> None:
		super().__init__(f'At least {needed} shapes are required, only {given} given.')
		self.needed = needed
		self.given  = given

class ConfigurationError(GashadokuroError):
	''' Raised for invalid run, synthesis, or prior-region configuration. '''

	category = ErrorCategory.CONFIG

class IterationFailedError(GashadokuroError):
	'''
	Raised when a leave-one-out iteration fails and failures are not being skipped.

	The category is inherited from the underlying cause.

	Parameters
	----------
	left_out : int
		Index of the left-out shape.

	cause : Exception
		The error raised by the iteration.

	Attributes
	----------
	left_out : int
		Index of the left-out shape.

	cause : Exception
		The error raised by the iteration.
	'''

	def __init__(self, left_out: int, cause: Exception) -> None:
		super().__init__(f'Leave-one-out iteration {left_out} failed: {cause}')
		self.left_out = left_out
		self.cause    = cause
		if isinstance(cause, GashadokuroError):
			self.category = cause.category
		elif isinstance(cause, ValueError):
			self.category = ErrorCategory.CONFIG
