# SPDX-License-Identifier: BSD-3-Clause

from pathlib                     import Path
from unittest                    import TestCase

from gashadokuro.types.constants import ErrorCategory
from gashadokuro.types.errors    import (
	ConfigurationError, EmptyRegionError, GashadokuroError, IterationFailedError, MeshFormatError,
	ModelFileError, ModelVersionError, SingularSystemError, TopologyMismatchError, TrainingSetError
)

class GashadokuroTypesErrorsTest(TestCase):

	def test_mesh_format(self) -> None:
		EXCEPTION = MeshFormatError('bone.ply', 'missing face element')

		with self.assertRaisesRegex(MeshFormatError, r'^Unable to read mesh \'bone\.ply\': missing face element$'):
			try:
				raise EXCEPTION
			except Exception as e:
				self.assertIsInstance(e, GashadokuroError)
				self.assertEqual(e.path, Path('bone.ply'))
				self.assertEqual(e.category, ErrorCategory.FORMAT)
				raise e

	def test_topology_mismatch(self) -> None:
		EXCEPTION = TopologyMismatchError('vertex count', 642, 640)

		with self.assertRaisesRegex(
			TopologyMismatchError, r'^Topology mismatch in vertex count: expected 642, got 640\.$'
		):
			try:
				raise EXCEPTION
			except Exception as e:
				self.assertEqual(e.what, 'vertex count')
				self.assertEqual(e.expected, 642)
				self.assertEqual(e.actual, 640)
				self.assertEqual(e.category, ErrorCategory.TOPOLOGY)
				raise e

	def test_empty_region(self) -> None:
		with self.assertRaisesRegex(EmptyRegionError, r'^Degenerate acetabulum label: region is empty\.$'):
			raise EmptyRegionError('acetabulum label')

		self.assertEqual(EmptyRegionError('seam').category, ErrorCategory.TOPOLOGY)

	def test_singular_system(self) -> None:
		self.assertEqual(str(SingularSystemError('coplanar knots')), 'Singular system: coplanar knots.')
		self.assertEqual(
			str(SingularSystemError('too few knots', '3 given')), 'Singular system: too few knots (3 given).'
		)
		self.assertEqual(SingularSystemError('x').category, ErrorCategory.SINGULAR)

	def test_model_version(self) -> None:
		EXCEPTION = ModelVersionError('model.ssm', 7, 1)

		self.assertIsInstance(EXCEPTION, ModelFileError)
		self.assertEqual(EXCEPTION.found, 7)
		self.assertEqual(EXCEPTION.supported, 1)
		self.assertEqual(EXCEPTION.category, ErrorCategory.FORMAT)
		self.assertEqual(
			str(EXCEPTION), 'Corrupt shape model file \'model.ssm\': format version 7 is not supported, only version 1'
		)

	def test_training_set(self) -> None:
		self.assertEqual(str(TrainingSetError(3, 2)), 'At least 3 shapes are required, only 2 given.')
		self.assertEqual(TrainingSetError(3, 2).category, ErrorCategory.CONFIG)
		self.assertEqual(ConfigurationError('x').category, ErrorCategory.CONFIG)

	def test_iteration_failed(self) -> None:
		self.assertEqual(IterationFailedError(4, SingularSystemError('x')).category, ErrorCategory.SINGULAR)
		self.assertEqual(IterationFailedError(4, EmptyRegionError('seam')).category, ErrorCategory.TOPOLOGY)
		self.assertEqual(IterationFailedError(4, ValueError('bad')).category, ErrorCategory.CONFIG)

		e = IterationFailedError(4, ValueError('bad'))
		self.assertEqual(e.left_out, 4)
		self.assertEqual(str(e), 'Leave-one-out iteration 4 failed: bad')
