# SPDX-License-Identifier: BSD-3-Clause

'''
Point to triangle mesh distances.

The closest point on a triangle is found by classifying the query against the triangle's vertex,
edge and face Voronoi regions. All arithmetic is elementwise over ``(point, triangle)`` pairs, so a
given pair produces the same bits no matter how the pairs are batched, and the accelerated query in
:py:class:`TriangleIndex` returns exactly what an exhaustive scan would.
'''

import logging      as log

import numpy        as np
import numpy.typing as npt
from scipy.spatial  import cKDTree

from ..mesh         import TriMesh

__all__ = (
	'TriangleIndex',

	'point_triangle_distance',
	'point_triangle_distances',
	'surface_distance',
)

QUERY_CHUNK = 2048
''' Query points handled per candidate gathering pass '''

Array = npt.NDArray[np.float64]

def _dot(u: Array, v: Array) -> Array:
	return u[:, 0] * v[:, 0] + u[:, 1] * v[:, 1] + u[:, 2] * v[:, 2]

def _segment_closest(p: Array, a: Array, b: Array) -> Array:
	ab   = b - a
	len2 = _dot(ab, ab)
	with np.errstate(divide = 'ignore', invalid = 'ignore'):
		t = np.where(len2 > 0.0, _dot(p - a, ab) / len2, 0.0)
	t = np.clip(t, 0.0, 1.0)
	return a + t[:, None] * ab

def _closest_points(p: Array, a: Array, b: Array, c: Array) -> Array:
	ab = b - a
	ac = c - a
	ap = p - a
	bp = p - b
	cp = p - c

	d1 = _dot(ab, ap)
	d2 = _dot(ac, ap)
	d3 = _dot(ab, bp)
	d4 = _dot(ac, bp)
	d5 = _dot(ab, cp)
	d6 = _dot(ac, cp)

	vc = d1 * d4 - d3 * d2
	vb = d5 * d2 - d1 * d6
	va = d3 * d6 - d5 * d4

	out  = np.empty_like(p)
	done = np.zeros(p.shape[0], dtype = np.bool_)

	def assign(region: npt.NDArray[np.bool_], value: Array) -> None:
		sel = region & ~done
		out[sel] = value[sel]
		done[sel] = True

	normal = np.cross(ab, ac)
	degenerate = _dot(normal, normal) == 0.0
	if degenerate.any():
		segs = (
			_segment_closest(p, a, b), _segment_closest(p, b, c), _segment_closest(p, c, a)
		)
		dist = np.stack([_dot(p - s, p - s) for s in segs])
		best = np.argmin(dist, axis = 0)
		assign(degenerate, np.choose(best[:, None], segs))

	with np.errstate(divide = 'ignore', invalid = 'ignore'):
		assign((d1 <= 0.0) & (d2 <= 0.0), a)
		assign((d3 >= 0.0) & (d4 <= d3), b)
		assign((vc <= 0.0) & (d1 >= 0.0) & (d3 <= 0.0), a + (d1 / (d1 - d3))[:, None] * ab)
		assign((d6 >= 0.0) & (d5 <= d6), c)
		assign((vb <= 0.0) & (d2 >= 0.0) & (d6 <= 0.0), a + (d2 / (d2 - d6))[:, None] * ac)
		assign(
			(va <= 0.0) & ((d4 - d3) >= 0.0) & ((d5 - d6) >= 0.0),
			b + ((d4 - d3) / ((d4 - d3) + (d5 - d6)))[:, None] * (c - b)
		)
		denom = va + vb + vc
		v = vb / denom
		w = vc / denom
		assign(np.ones_like(done), a + v[:, None] * ab + w[:, None] * ac)

	return out

def point_triangle_distances(
	points: npt.ArrayLike, a: npt.ArrayLike, b: npt.ArrayLike, c: npt.ArrayLike
) -> Array:
	'''
	Euclidean distances from each point to its paired closed triangle ``(a, b, c)``.

	Degenerate triangles (zero area) fall back to the nearest of their three edges.

	Parameters
	----------
	points, a, b, c : array_like
		``(M, 3)`` arrays, or single points broadcast against the others.

	Returns
	-------
	numpy.ndarray
		``(M,)`` distances.
	'''

	p, ta, tb, tc = (np.atleast_2d(np.asarray(x, dtype = np.float64)) for x in (points, a, b, c))
	p, ta, tb, tc = np.broadcast_arrays(p, ta, tb, tc)
	p, ta, tb, tc = (np.ascontiguousarray(x) for x in (p, ta, tb, tc))

	diff = p - _closest_points(p, ta, tb, tc)
	return np.sqrt(_dot(diff, diff))

def point_triangle_distance(p: npt.ArrayLike, a: npt.ArrayLike, b: npt.ArrayLike, c: npt.ArrayLike) -> float:
	''' Distance from a single point to a single closed triangle '''
	return float(point_triangle_distances(p, a, b, c)[0])

class TriangleIndex:
	'''
	Spatial index over the triangles of a mesh for exact nearest surface queries.

	Triangles are hashed by centroid in a k-d tree. For a query point, the distance to the nearest
	surface vertex bounds the answer from above, so only triangles whose centroid lies within that bound
	plus the largest centroid radius can hold the closest point. Those candidates are evaluated
	exactly.

	Parameters
	----------
	mesh : TriMesh
		The reference surface. The index does not track later changes, meshes are immutable.
	'''

	def __init__(self, mesh: TriMesh) -> None:
		self.mesh = mesh
		tri = mesh.vertices[mesh.faces]

		self._a = np.ascontiguousarray(tri[:, 0])
		self._b = np.ascontiguousarray(tri[:, 1])
		self._c = np.ascontiguousarray(tri[:, 2])

		centroids   = tri.mean(axis = 1)
		self.radius = float(np.linalg.norm(tri - centroids[:, None, :], axis = 2).max())

		used = np.unique(mesh.faces)
		self._face_tree   = cKDTree(centroids)
		self._vertex_tree = cKDTree(mesh.vertices[used])

	def _pairs(self, points: Array, tris: npt.NDArray[np.int64]) -> Array:
		return point_triangle_distances(points, self._a[tris], self._b[tris], self._c[tris])

	def query(self, points: npt.ArrayLike) -> Array:
		'''
		Distance from each point to the nearest point of the indexed surface.

		Returns
		-------
		numpy.ndarray
			``(P,)`` distances.
		'''

		pts = np.asarray(points, dtype = np.float64).reshape(-1, 3)
		out = np.empty(pts.shape[0])

		for start in range(0, pts.shape[0], QUERY_CHUNK):
			block = pts[start:start + QUERY_CHUNK]
			upper, _ = self._vertex_tree.query(block)
			# Small slack so rounding in the tree never prunes the true nearest triangle
			reach = (upper + self.radius) * (1.0 + 1e-9) + 1e-12
			cands = self._face_tree.query_ball_point(block, reach)

			counts = np.fromiter((len(c) for c in cands), dtype = np.int64, count = block.shape[0])
			owner  = np.repeat(np.arange(block.shape[0]), counts)
			tris   = np.fromiter(
				(t for c in cands for t in c), dtype = np.int64, count = int(counts.sum())
			)

			dist = self._pairs(block[owner], tris)
			best = np.full(block.shape[0], np.inf)
			np.minimum.at(best, owner, dist)
			out[start:start + QUERY_CHUNK] = best

		return out

	def exhaustive(self, points: npt.ArrayLike) -> Array:
		''' Brute force distances over every triangle, for verification '''

		pts = np.asarray(points, dtype = np.float64).reshape(-1, 3)
		faces = np.arange(self.mesh.face_count)
		out = np.empty(pts.shape[0])
		for i, p in enumerate(pts):
			out[i] = self._pairs(np.broadcast_to(p, (faces.shape[0], 3)), faces).min()
		return out

	def __repr__(self) -> str:
		return f'<TriangleIndex faces={self.mesh.face_count}>'

def surface_distance(points: npt.ArrayLike, reference: TriMesh, *, index: TriangleIndex | None = None) -> Array:
	'''
	One-sided distances from each point to the surface of ``reference``.

	Parameters
	----------
	points : array_like
		``(P, 3)`` query points.

	reference : TriMesh
		The surface measured against.

	index : TriangleIndex | None
		A prebuilt index of ``reference`` to reuse across calls.
	'''

	if index is None:
		index = TriangleIndex(reference)
	elif index.mesh is not reference:
		log.debug('Provided triangle index was built for another mesh, rebuilding')
		index = TriangleIndex(reference)
	return index.query(points)
