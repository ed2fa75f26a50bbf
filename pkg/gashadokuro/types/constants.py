# SPDX-License-Identifier: BSD-3-Clause

'''
Various constants used throughout Gashadokuro.
'''

from enum   import IntEnum, auto, unique

__all__ = (
	'CompletionMethod',
	'ErrorCategory',
	'IterationStatus',

	'AXIAL_AXIS',
	'DEFAULT_CREST_FRACTIONS',
	'DEFAULT_MAX_KNOTS',
	'HEATMAP_KNOWN_SENTINEL',
	'MODE_VARIANCE_CUTOFF',
	'ACETABULUM_LABEL',
	'CREST_LABEL',
	'UNLABELED_LABEL',
)

@unique
class CompletionMethod(IntEnum):
	''' Partial shape completion strategy '''

	CUT_AND_PASTE = auto()
	''' Keep the prior, copy the unknown region straight from the model estimate '''
	SMOOTH        = auto()
	''' Keep the prior, warp the unknown region of the estimate through a TPS fit on the known region '''

	def __str__(self) -> str:
		match self:
			case CompletionMethod.CUT_AND_PASTE:
				return 'cnp'
			case CompletionMethod.SMOOTH:
				return 'smooth'

	@property
	def long_name(self) -> str:
		match self:
			case CompletionMethod.CUT_AND_PASTE:
				return 'cut_and_paste'
			case CompletionMethod.SMOOTH:
				return 'smooth'

	@staticmethod
	def from_str(method: str) -> 'CompletionMethod':
		match method.strip().lower():
			case 'cnp' | 'cut_and_paste' | 'cut-and-paste':
				return CompletionMethod.CUT_AND_PASTE
			case 'smooth' | 'tps':
				return CompletionMethod.SMOOTH
			case _:
				raise ValueError(f'Unknown completion method \'{method}\', expected one of: cnp, smooth')

@unique
class ErrorCategory(IntEnum):
	'''
	Machine readable failure categories.

	The integer value doubles as the CLI exit code.
	'''

	CONFIG   = 2
	''' Invalid flags, configuration files, or argument values '''
	IO       = 3
	''' Unreadable inputs or unwritable outputs '''
	FORMAT   = 4
	''' Malformed mesh, model, or report files '''
	TOPOLOGY = 5
	''' Mismatched connectivity or degenerate vertex regions '''
	SINGULAR = 6
	''' Singular or rank-deficient linear systems that can not be solved '''

	def __str__(self) -> str:
		return self.name

@unique
class IterationStatus(IntEnum):
	''' Outcome of a single leave-one-out iteration '''

	OK         = auto()
	''' Completed normally '''
	DEGENERATE = auto()
	''' Nothing to evaluate, the unknown region was empty '''
	FAILED     = auto()
	''' An error was raised and recorded in place of the statistics '''

	def __str__(self) -> str:
		return self.name.lower()

	@staticmethod
	def from_str(status: str) -> 'IterationStatus':
		return IterationStatus[status.upper()]

AXIAL_AXIS = 2
''' Index of the axial (superior) direction in mesh coordinates, i.e. +z '''

ACETABULUM_LABEL = 'acetabulum'
''' Vertex label naming the hip-socket region '''

CREST_LABEL = 'crest'
''' Vertex label naming the superior iliac crest '''

UNLABELED_LABEL = 'unlabeled'
''' Label name written for vertices that carry no label '''

DEFAULT_CREST_FRACTIONS: tuple[float, ...] = (0.0, 0.05, 0.10, 0.15)
''' Retained superior crest fractions evaluated by default '''

DEFAULT_MAX_KNOTS = 500
''' Default cap on the number of TPS knots used by smooth completion '''

HEATMAP_KNOWN_SENTINEL = -1.0
''' Per-vertex heat map value marking vertices that were never extrapolated '''

MODE_VARIANCE_CUTOFF = 1e-12
''' Modes whose variance is below this fraction of the largest variance are dropped '''
