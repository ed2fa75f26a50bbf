# SPDX-License-Identifier: BSD-3-Clause

'''
Helpers and utilities for various Gashadokuro tests
'''

from inspect        import isfunction
from os             import getenv
from pathlib        import Path
from tempfile       import TemporaryDirectory
from typing         import Any, cast
from unittest       import TestCase, skip

import numpy        as np
import numpy.typing as npt

from ..mesh         import TriMesh

ALLOW_SLOW = getenv('GASHADOKURO_TEST_SLOW') is not None

__all__ = (
	'GashadokuroTestCase',
	'GashadokuroSlowTestCase',

	'tetrahedron',
	'unit_cube',
	'unit_square',
)

def tetrahedron() -> TriMesh:
	''' The unit right-corner tetrahedron, 4 vertices and 4 outward facing triangles '''
	return TriMesh(
		[[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
		[[0, 2, 1], [0, 1, 3], [0, 3, 2], [1, 2, 3]]
	)

def unit_cube(offset: npt.ArrayLike = (0.0, 0.0, 0.0)) -> TriMesh:
	'''
	The axis aligned cube ``[0, 1]^3`` shifted by ``offset``.

	Vertices 0-3 are the bottom face (``z = 0``) and 4-7 the top face, in the same counter-clockwise order.
	'''

	corners = np.array([
		[0, 0, 0], [1, 0, 0], [1, 1, 0], [0, 1, 0],
		[0, 0, 1], [1, 0, 1], [1, 1, 1], [0, 1, 1],
	], dtype = np.float64)
	faces = [
		[0, 2, 1], [0, 3, 2], # bottom
		[4, 5, 6], [4, 6, 7], # top
		[0, 1, 5], [0, 5, 4],
		[1, 2, 6], [1, 6, 5],
		[2, 3, 7], [2, 7, 6],
		[3, 0, 4], [3, 4, 7],
	]
	return TriMesh(corners + np.asarray(offset, dtype = np.float64), faces)

def unit_square(z: float = 0.0) -> TriMesh:
	''' The square ``[0, 1]^2`` at height ``z`` as two triangles '''
	return TriMesh(
		[[0.0, 0.0, z], [1.0, 0.0, z], [1.0, 1.0, z], [0.0, 1.0, z]],
		[[0, 1, 2], [0, 2, 3]]
	)

class GashadokuroSlowTestMeta(type):
	'''
	This metaclass is used to automatically annotate all tests within a :py:class:`GashadokuroSlowTestCase`
	test class with :py:meth:`unittest.skip` unless slow tests were requested.

	Slow tests run the full scale seeded experiments and are enabled by setting the
	``GASHADOKURO_TEST_SLOW`` environment variable.
	'''

	def __new__(
		cls: type[type], name: str, bases: tuple[type, ...], namespace: dict[str, Any]
	) -> 'GashadokuroSlowTestMeta':
		for attr, val in namespace.items():
			if isfunction(val):
				if not ALLOW_SLOW and val.__name__.startswith('test_'):
					namespace[attr] = skip('Slow tests disabled')(val)
		return cast(GashadokuroSlowTestMeta, type.__new__(cls, name, bases, namespace))

class GashadokuroTestCase(TestCase):
	'''
	A :py:class:`unittest.TestCase` with a scratch directory and numpy aware asserts.

	Attributes
	----------
	tmp : Path
		A fresh temporary directory, removed after each test.
	'''

	tmp: Path

	def setUp(self) -> None:
		'''
		Hook that runs prior to a test running

		NOTE
		----
		If your test needs specialized setup code and you overload this make sure you call
		`super().setUp()`!
		'''

		self._tmp_dir = TemporaryDirectory(prefix = 'gashadokuro-test-')
		self.tmp      = Path(self._tmp_dir.name)

	def tearDown(self) -> None:
		self._tmp_dir.cleanup()

	def assertArrayAlmostEqual(
		self, actual: npt.ArrayLike, expected: npt.ArrayLike, atol: float = 1e-9, msg: str | None = None
	) -> None:
		''' Assert two arrays have the same shape and agree elementwise within ``atol`` '''

		a = np.asarray(actual, dtype = np.float64)
		e = np.asarray(expected, dtype = np.float64)
		if a.shape != e.shape:
			raise self.failureException(msg or f'Shape mismatch: {a.shape} != {e.shape}')
		if a.size and not np.allclose(a, e, rtol = 0.0, atol = atol):
			worst = float(np.max(np.abs(a - e)))
			raise self.failureException(msg or f'Arrays differ by up to {worst:.3e} (atol {atol:.1e})')

	def assertArrayEqual(self, actual: npt.ArrayLike, expected: npt.ArrayLike, msg: str | None = None) -> None:
		''' Assert two arrays are bit-identical '''

		if not np.array_equal(np.asarray(actual), np.asarray(expected)):
			raise self.failureException(msg or 'Arrays are not identical')

class GashadokuroSlowTestCase(GashadokuroTestCase, metaclass = GashadokuroSlowTestMeta):
	''' Full scale tests, skipped unless ``GASHADOKURO_TEST_SLOW`` is set '''
