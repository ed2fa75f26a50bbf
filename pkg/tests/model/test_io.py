# SPDX-License-Identifier: BSD-3-Clause

import json
import struct

import numpy                  as np

from gashadokuro.model        import build_ssm
from gashadokuro.model.io     import FORMAT_VERSION, SSMChunk, load_ssm, save_ssm, sidecar_path
from gashadokuro.support.test import GashadokuroTestCase, unit_cube
from gashadokuro.types.errors import ModelFileError, ModelVersionError

class GashadokuroModelIOTest(GashadokuroTestCase):

	def setUp(self) -> None:
		super().setUp()

		rng  = np.random.default_rng(3)
		cube = unit_cube()
		self.ssm = build_ssm(
			[cube.with_vertices(cube.vertices + rng.normal(0.0, 0.2, (8, 3))) for _ in range(5)],
			provenance = {'dataset_hash': 'abc', 'shape_count': 5}
		)
		self.path = self.tmp / 'pelvis.ssm'
		save_ssm(self.ssm, self.path)

	def test_round_trip(self) -> None:
		loaded = load_ssm(self.path)

		self.assertArrayEqual(loaded.mean, self.ssm.mean)
		self.assertArrayEqual(loaded.modes, self.ssm.modes)
		self.assertArrayEqual(loaded.std_devs, self.ssm.std_devs)
		self.assertArrayEqual(loaded.faces, self.ssm.faces)
		self.assertEqual(loaded.provenance, {'dataset_hash': 'abc', 'shape_count': 5})

		sidecar = json.loads(sidecar_path(self.path).read_text())
		self.assertEqual(sidecar['format_version'], FORMAT_VERSION)
		self.assertEqual(sidecar['mode_count'], 4)
		self.assertEqual(sidecar_path(self.path).name, 'pelvis.ssm.json')

	def test_deterministic_bytes(self) -> None:
		save_ssm(self.ssm, self.tmp / 'again.ssm')
		self.assertEqual(self.path.read_bytes(), (self.tmp / 'again.ssm').read_bytes())

	def test_missing_sidecar(self) -> None:
		sidecar_path(self.path).unlink()
		self.assertEqual(load_ssm(self.path).provenance, {})

	def test_unknown_chunk(self) -> None:
		extra = SSMChunk.build({'tag': b'NOTE', 'length': 5, 'payload': b'hello'})
		self.path.write_bytes(self.path.read_bytes() + extra)
		self.assertArrayEqual(load_ssm(self.path).modes, self.ssm.modes)

	def test_bad_magic(self) -> None:
		self.path.write_bytes(b'XSSM' + self.path.read_bytes()[4:])
		with self.assertRaisesRegex(ModelFileError, r'bad header'):
			load_ssm(self.path)

	def test_version(self) -> None:
		data = self.path.read_bytes()
		self.path.write_bytes(data[:4] + struct.pack('<I', 99) + data[8:])
		with self.assertRaises(ModelVersionError) as ctx:
			load_ssm(self.path)
		self.assertEqual(ctx.exception.found, 99)

	def test_truncated(self) -> None:
		data = self.path.read_bytes()

		self.path.write_bytes(data[:20])
		with self.assertRaisesRegex(ModelFileError, r'bad header'):
			load_ssm(self.path)

		self.path.write_bytes(data[:-7])
		with self.assertRaisesRegex(ModelFileError, r'truncated or corrupt'):
			load_ssm(self.path)

	def test_inconsistent(self) -> None:
		data = self.path.read_bytes()
		# Claim one more mode than the chunks hold
		self.path.write_bytes(data[:16] + struct.pack('<Q', 5) + data[24:])
		with self.assertRaisesRegex(ModelFileError, r'MODE chunk holds'):
			load_ssm(self.path)

	def test_missing_file(self) -> None:
		with self.assertRaises(OSError):
			load_ssm(self.tmp / 'none.ssm')
