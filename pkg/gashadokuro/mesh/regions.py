# SPDX-License-Identifier: BSD-3-Clause

'''
Axial slab and label based vertex region selection.

The axial direction is fixed as +z of the mesh coordinates. Slabs are closed intervals, so a vertex
lying exactly on a slab boundary is part of the slab.
'''

import logging          as log

import numpy            as np

from .                  import TriMesh, VertexMask
from ..types.constants  import AXIAL_AXIS
from ..types.errors     import EmptyRegionError

__all__ = (
	'mesh_height',
	'select_slab',
	'build_prior_mask',
	'crest_slab',
	'seam_vertices',
)

def mesh_height(mesh: TriMesh) -> float:
	''' The axial extent ``max z - min z`` of the mesh, in millimetres '''

	z = mesh.vertices[:, AXIAL_AXIS]
	return float(z.max() - z.min())

def select_slab(mesh: TriMesh, z_lo: float, z_hi: float) -> VertexMask:
	'''
	Select the vertices inside the closed axial slab ``z_lo <= z <= z_hi``.

	Raises
	------
	ValueError
		If ``z_lo > z_hi``.
	'''

	if not z_lo <= z_hi:
		raise ValueError(f'Slab bounds are inverted: z_lo={z_lo} > z_hi={z_hi}')

	z = mesh.vertices[:, AXIAL_AXIS]
	return VertexMask((z >= z_lo) & (z <= z_hi))

def crest_slab(mesh: TriMesh, crest_fraction: float) -> VertexMask:
	'''
	Select the superior ``crest_fraction`` of the mesh height, measured down from the top.

	A fraction of zero selects nothing, a fraction of one selects every vertex.
	'''

	if not 0.0 <= crest_fraction <= 1.0:
		raise ValueError(f'Crest fraction must be within [0, 1], got {crest_fraction}')

	if crest_fraction == 0.0:
		return VertexMask.empty(mesh.vertex_count)

	z      = mesh.vertices[:, AXIAL_AXIS]
	z_min  = float(z.min())
	z_max  = float(z.max())
	# Measured up from the bottom so a fraction of one lands exactly on `z_min`
	thresh = z_min + (1.0 - crest_fraction) * (z_max - z_min)
	return select_slab(mesh, thresh, z_max)

def build_prior_mask(
	mesh: TriMesh, acetabulum_label: VertexMask, crest_fraction: float, *, include_acetabulum: bool = True
) -> VertexMask:
	'''
	Build the region of known anatomy for a partial scan.

	The region is the union of every vertex within the axial slab spanned by the acetabulum label, and
	the superior ``crest_fraction`` of the mesh height. The acetabulum slab includes unlabelled vertices
	that happen to lie at the same heights, as a partial CT would capture whole axial slices.

	Parameters
	----------
	mesh : TriMesh
		The mesh whose geometry decides slab membership.

	acetabulum_label : VertexMask
		The labelled acetabulum vertices.

	crest_fraction : float
		Fraction of the mesh height retained at the top, within ``[0, 1]``.

	include_acetabulum : bool
		If unset, only the crest slab is returned.

	Raises
	------
	EmptyRegionError
		If the acetabulum label selects no vertex.

	ValueError
		If ``crest_fraction`` is outside ``[0, 1]``.
	'''

	acetabulum_label.check_against(mesh.vertex_count)

	crest = crest_slab(mesh, crest_fraction)
	if not include_acetabulum:
		return crest

	if not acetabulum_label.any():
		raise EmptyRegionError('acetabulum label')

	z     = mesh.vertices[acetabulum_label.bits, AXIAL_AXIS]
	cup   = select_slab(mesh, float(z.min()), float(z.max()))
	prior = cup | crest

	log.debug(
		f'Prior mask: {cup.count} acetabulum slab + {crest.count} crest '
		f'({crest_fraction:.0%}) -> {prior.count}/{mesh.vertex_count} vertices'
	)
	return prior

def seam_vertices(mesh: TriMesh, known: VertexMask) -> VertexMask:
	'''
	Select the known vertices that share at least one edge with an unknown vertex.
	'''

	known.check_against(mesh.vertex_count)

	edges = mesh.edges
	a     = known.bits[edges[:, 0]]
	b     = known.bits[edges[:, 1]]
	cross = a != b

	seam = np.zeros(mesh.vertex_count, dtype = np.bool_)
	seam[edges[cross & a, 0]] = True
	seam[edges[cross & b, 1]] = True
	return VertexMask(seam)
