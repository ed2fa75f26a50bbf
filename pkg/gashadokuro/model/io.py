# SPDX-License-Identifier: BSD-3-Clause

'''
Shape model file format.

A model file is a fixed header followed by tagged chunks, all little-endian:

+-----------------+-----------+------------------------------------------------+
| Field           | Type      | Description                                    |
+=================+===========+================================================+
| ``magic``       | 4 bytes   | ``GSSM``                                       |
+-----------------+-----------+------------------------------------------------+
| ``version``     | ``u32``   | Format version, currently ``1``                |
+-----------------+-----------+------------------------------------------------+
| ``vertices``    | ``u64``   | Template vertex count ``N``                    |
+-----------------+-----------+------------------------------------------------+
| ``modes``       | ``u64``   | Mode count ``k``                               |
+-----------------+-----------+------------------------------------------------+
| ``faces``       | ``u64``   | Template face count ``F``                      |
+-----------------+-----------+------------------------------------------------+

Each chunk is a 4 byte tag, a ``u64`` payload length and the payload:

* ``MEAN``: ``3N`` float64 mean shape vector.
* ``MODE``: ``3N x k`` float64 mode matrix, row major.
* ``SDEV``: ``k`` float64 standard deviations.
* ``FACE``: ``F x 3`` int64 triangle indices.

Unknown chunk tags are skipped. The provenance record is kept in a JSON sidecar next to the model
file, ``<model>.json``.
'''

import json
import logging      as log
from pathlib        import Path
from typing         import Any

import numpy        as np
from construct      import (
	Bytes, Const, ConstructError, GreedyRange, Int32ul, Int64ul, Struct, Terminated, this
)

from .              import SSM
from ..types.errors import ModelFileError, ModelVersionError

__all__ = (
	'FORMAT_VERSION',
	'SSMHeader',
	'SSMChunk',
	'SSMFile',

	'save_ssm',
	'load_ssm',
	'sidecar_path',
)

FORMAT_VERSION = 1
''' The model file version written and accepted by this library '''

SSMHeader = Struct(
	'magic'    / Const(b'GSSM'),
	'version'  / Int32ul,
	'vertices' / Int64ul,
	'modes'    / Int64ul,
	'faces'    / Int64ul,
)

SSMChunk = Struct(
	'tag'     / Bytes(4),
	'length'  / Int64ul,
	'payload' / Bytes(this.length),
)

SSMFile = Struct(
	'header' / SSMHeader,
	'chunks' / GreedyRange(SSMChunk),
	Terminated,
)

def sidecar_path(path: Path | str) -> Path:
	''' The provenance sidecar for a model file '''
	path = Path(path)
	return path.with_name(f'{path.name}.json')

def save_ssm(ssm: SSM, path: Path | str) -> None:
	'''
	Write a shape model and its provenance sidecar.

	Raises
	------
	OSError
		If either file can not be written.
	'''

	path = Path(path)

	chunks = [
		(b'MEAN', ssm.mean.astype('<f8')),
		(b'MODE', ssm.modes.astype('<f8')),
		(b'SDEV', ssm.std_devs.astype('<f8')),
		(b'FACE', ssm.faces.astype('<i8')),
	]

	data = SSMFile.build({
		'header': {
			'version':  FORMAT_VERSION,
			'vertices': ssm.vertex_count,
			'modes':    ssm.mode_count,
			'faces':    int(ssm.faces.shape[0]),
		},
		'chunks': [
			{'tag': tag, 'length': arr.nbytes, 'payload': np.ascontiguousarray(arr).tobytes()}
			for tag, arr in chunks
		],
	})
	path.write_bytes(data)

	sidecar = {
		'format_version': FORMAT_VERSION,
		'vertex_count':   ssm.vertex_count,
		'mode_count':     ssm.mode_count,
		'std_devs':       ssm.std_devs.tolist(),
		'provenance':     ssm.provenance,
	}
	sidecar_path(path).write_text(json.dumps(sidecar, indent = 2, sort_keys = True) + '\n')
	log.debug(f'Wrote {ssm!r} to \'{path}\'')

def _array(path: Path, chunks: dict[bytes, bytes], tag: bytes, dtype: str, shape: tuple[int, ...]) -> np.ndarray:
	try:
		payload = chunks[tag]
	except KeyError:
		raise ModelFileError(path, f'missing {tag.decode()} chunk') from None

	expected = int(np.prod(shape)) * np.dtype(dtype).itemsize
	if len(payload) != expected:
		raise ModelFileError(path, f'{tag.decode()} chunk holds {len(payload)} bytes, expected {expected}')
	return np.frombuffer(payload, dtype = dtype).reshape(shape)

def load_ssm(path: Path | str) -> SSM:
	'''
	Read a shape model written by :py:func:`save_ssm`.

	The provenance sidecar is optional, a missing sidecar yields an empty provenance record.

	Raises
	------
	ModelVersionError
		If the file was written with an unsupported format version.

	ModelFileError
		If the file is truncated, corrupt, or internally inconsistent.

	OSError
		If the file can not be read.
	'''

	path = Path(path)
	data = path.read_bytes()

	try:
		header = SSMHeader.parse(data)
	except ConstructError as e:
		raise ModelFileError(path, f'bad header ({type(e).__name__})') from e

	if header.version != FORMAT_VERSION:
		raise ModelVersionError(path, int(header.version), FORMAT_VERSION)

	try:
		parsed = SSMFile.parse(data)
	except ConstructError as e:
		raise ModelFileError(path, f'truncated or corrupt chunk data ({type(e).__name__})') from e

	chunks: dict[bytes, bytes] = {}
	for chunk in parsed.chunks:
		if chunk.tag in chunks:
			raise ModelFileError(path, f'duplicate {chunk.tag!r} chunk')
		chunks[chunk.tag] = chunk.payload

	for tag in sorted(set(chunks) - {b'MEAN', b'MODE', b'SDEV', b'FACE'}):
		log.debug(f'Skipping unknown chunk {tag!r} in \'{path}\'')

	n = int(header.vertices)
	k = int(header.modes)
	f = int(header.faces)

	mean  = _array(path, chunks, b'MEAN', '<f8', (3 * n, ))
	modes = _array(path, chunks, b'MODE', '<f8', (3 * n, k))
	sdev  = _array(path, chunks, b'SDEV', '<f8', (k, ))
	faces = _array(path, chunks, b'FACE', '<i8', (f, 3))

	provenance: dict[str, Any] = {}
	side = sidecar_path(path)
	if side.exists():
		try:
			provenance = dict(json.loads(side.read_text()).get('provenance', {}))
		except (json.JSONDecodeError, AttributeError, TypeError, ValueError) as e:
			raise ModelFileError(side, f'invalid provenance sidecar: {e}') from e

	ssm = SSM(mean, modes, sdev, faces, provenance)
	log.debug(f'Loaded {ssm!r} from \'{path}\'')
	return ssm
