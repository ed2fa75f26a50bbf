# SPDX-License-Identifier: BSD-3-Clause

'''
Deterministic content hashes and provenance blocks for generated artifacts.
'''

import hashlib
from typing         import Any, Iterable

import numpy        as np
import numpy.typing as npt

from ..             import __version__
from ..mesh         import TriMesh

__all__ = (
	'array_digest',
	'mesh_digest',
	'set_digest',
	'provenance',
	'public_version',
)

def array_digest(*arrays: npt.ArrayLike) -> str:
	'''
	SHA-256 over the little-endian bytes of the given arrays.

	Floating point data is hashed as float64, integers as int64, so the digest does not depend on
	the in-memory dtype a value happened to be stored with.
	'''

	h = hashlib.sha256()
	for a in arrays:
		arr = np.asarray(a)
		if np.issubdtype(arr.dtype, np.floating):
			arr = arr.astype('<f8')
		elif np.issubdtype(arr.dtype, np.integer) or arr.dtype == np.bool_:
			arr = arr.astype('<i8')
		h.update(str(arr.shape).encode())
		h.update(np.ascontiguousarray(arr).tobytes())
	return h.hexdigest()

def mesh_digest(mesh: TriMesh) -> str:
	''' Digest of a mesh's geometry and connectivity, labels excluded '''
	return array_digest(mesh.vertices, mesh.faces)

def set_digest(digests: Iterable[str]) -> str:
	''' Order independent digest of a collection of digests '''

	h = hashlib.sha256()
	for d in sorted(digests):
		h.update(d.encode())
	return h.hexdigest()

def public_version(version: str = __version__) -> str:
	''' ``version`` with any local ``+node.date`` segment removed '''
	return version.partition('+')[0]

def provenance(**fields: Any) -> dict[str, Any]:
	''' A provenance block: the public library version plus the given fields '''
	return {'gashadokuro_version': public_version(), **fields}
