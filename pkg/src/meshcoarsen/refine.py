"""Refinement strategies.

Storage conventions exploited later by coarsening:

* new coordinates are appended;
* refined elements are replaced in place by their children;
* quadrilateral children start with their corner node (the oldest) and
  carry the parent's center at position three;
* bisection children of one parent stay consecutive in storage;
* green and blue patterns form trailing blocks after the red elements.
"""
from __future__ import annotations

import numpy as np

from ._red import RedContext, mark_mask, red_closure, red_refine
from .geometry import create_edge2elements, number_edges
from .mesh import QuadMesh, TriMesh, rotate_oldest_first


def trefine_r(mesh: TriMesh, marked, two_neighbor_rule: bool = False) -> TriMesh:
    """Red refinement of triangles with hanging nodes.

    The closure enforces 1-irregularity and, optionally, that no unrefined
    triangle keeps hanging nodes on two of its edges.
    """
    mask = mark_mask(marked, mesh.n_elements)
    if not mask.any():
        return mesh
    ctx = RedContext(mesh.elements3, mesh.irregular, len(mesh.coordinates))
    mask = red_closure(ctx, mask, d=2 if two_neighbor_rule else None)
    coords, elements, irr, bnd, _ = red_refine(mesh.coordinates, ctx, mesh.irregular, mesh.boundary, mask)
    return TriMesh(coords, elements, irr, bnd, mesh.n0)


def qrefine_r(mesh: QuadMesh, marked) -> QuadMesh:
    """Red refinement of quadrilaterals (1-irregular, 3-neighbour rule)."""
    mask = mark_mask(marked, mesh.n_elements)
    if not mask.any():
        return mesh
    elements = rotate_oldest_first(mesh.elements4)
    ctx = RedContext(elements, mesh.irregular, len(mesh.coordinates))
    mask = red_closure(ctx, mask, d=3)
    coords, elements, irr, bnd, _ = red_refine(mesh.coordinates, ctx, mesh.irregular, mesh.boundary, mask)
    return QuadMesh(coords, elements, irr, bnd, mesh.n0)


# ---------------------------------------------------------------------------
# bisection based refinement


def _split_boundary(boundary, index_find, edge2new):
    if boundary is None or len(boundary) == 0:
        return boundary
    bidx = index_find(boundary[:, 0], boundary[:, 1])
    mids = np.where(bidx >= 0, edge2new[np.maximum(bidx, 0)], -1)
    split = mids >= 0
    cnt = np.where(split, 2, 1)
    off = np.concatenate([[0], np.cumsum(cnt)[:-1]])
    nb = np.empty((cnt.sum(), 2), np.int64)
    nb[off[~split]] = boundary[~split]
    s = np.nonzero(split)[0]
    nb[off[s]] = np.column_stack([boundary[s, 0], mids[s]])
    nb[off[s] + 1] = np.column_stack([mids[s], boundary[s, 1]])
    return nb


def _bisection_refine(mesh: TriMesh, marked, red: bool) -> TriMesh:
    from .geometry import EdgeIndex

    m = mesh.n_elements
    mask = mark_mask(marked, m)
    if not mask.any():
        return mesh
    E = mesh.elements3
    n = len(mesh.coordinates)
    edge2nodes, (el2ed,) = number_edges([E], n)
    create_edge2elements(el2ed, len(edge2nodes))  # manifold check
    medge = np.zeros(len(edge2nodes), bool)
    medge[el2ed[mask].ravel()] = True
    # closure: a marked edge forces the reference edge (local edge 0)
    while True:
        swap = ~medge[el2ed[:, 0]] & (medge[el2ed[:, 1]] | medge[el2ed[:, 2]])
        if not swap.any():
            break
        medge[el2ed[swap, 0]] = True
    fresh = np.nonzero(medge)[0]
    edge2new = np.full(len(edge2nodes), -1, np.int64)
    edge2new[fresh] = n + np.arange(len(fresh))
    c = mesh.coordinates
    coords = np.vstack([c, 0.5 * (c[edge2nodes[fresh, 0]] + c[edge2nodes[fresh, 1]])])

    NN = edge2new[el2ed]
    has = NN >= 0
    none = ~has[:, 0]
    b1 = has[:, 0] & ~has[:, 1] & ~has[:, 2]
    b12 = has[:, 0] & has[:, 1] & ~has[:, 2]
    b13 = has[:, 0] & ~has[:, 1] & has[:, 2]
    b123 = has[:, 0] & has[:, 1] & has[:, 2]
    counts = np.select([none, b1, b12 | b13], [1, 2, 3], 4)
    off = np.concatenate([[0], np.cumsum(counts)[:-1]])
    out = np.empty((counts.sum(), 3), np.int64)
    out[off[none]] = E[none]

    def put(sel, rows):
        idx = off[sel]
        for t, r in enumerate(rows):
            out[idx + t] = np.column_stack(r)

    n1, n2, n3 = E[:, 0], E[:, 1], E[:, 2]
    m1, m2, m3 = NN[:, 0], NN[:, 1], NN[:, 2]
    s = b1
    put(s, [(n3[s], n1[s], m1[s]), (n2[s], n3[s], m1[s])])
    s = b12
    put(s, [(n3[s], n1[s], m1[s]), (m1[s], n2[s], m2[s]), (n3[s], m1[s], m2[s])])
    s = b13
    put(s, [(m1[s], n3[s], m3[s]), (n1[s], m1[s], m3[s]), (n2[s], n3[s], m1[s])])
    s = b123
    if red:
        # reference edges of all four children are parallel to the parent's
        put(s, [(n1[s], m1[s], m3[s]), (m1[s], n2[s], m2[s]),
                (m3[s], m2[s], n3[s]), (m2[s], m3[s], m1[s])])
    else:
        put(s, [(m1[s], n3[s], m3[s]), (n1[s], m1[s], m3[s]),
                (m1[s], n2[s], m2[s]), (n3[s], m1[s], m2[s])])
    bnd = _split_boundary(mesh.boundary, EdgeIndex(edge2nodes, n).find, edge2new)
    return TriMesh(coords, out, None, bnd, mesh.n0)


def trefine_nvb(mesh: TriMesh, marked) -> TriMesh:
    """Newest vertex bisection; marked elements receive bisec(3).

    The reference edge of ``(a, b, c)`` is ``(a, b)``; ``c`` is its newest
    vertex.
    """
    return _bisection_refine(mesh, marked, red=False)


def trefine_rgb(mesh: TriMesh, marked) -> TriMesh:
    """Red-green-blue refinement; marked elements are red-refined."""
    return _bisection_refine(mesh, marked, red=True)


# ---------------------------------------------------------------------------
# red-green and red-blue


def trefine_rg(mesh: TriMesh, marked) -> TriMesh:
    """Red-green refinement: recoarsen greens, red-refine, close with greens."""
    from .coarsen_regular import recoarsen_green_tri, regularize_green_tri

    red, marks = recoarsen_green_tri(mesh, marked)
    red = trefine_r(red, marks, two_neighbor_rule=True)
    return regularize_green_tri(red)


def qrefine_rg(mesh, marked):
    """Red-green refinement of quadrilaterals; returns a MixedMesh."""
    from .coarsen_regular import recoarsen_green_quad, regularize_green_quad

    red, marks = recoarsen_green_quad(mesh, marked)
    red = qrefine_r(red, marks)
    return regularize_green_quad(red)


def qrefine_rb(mesh: QuadMesh, marked) -> QuadMesh:
    """Red-blue refinement of quadrilaterals."""
    from .coarsen_regular import recoarsen_blue, regularize_blue

    red, marks = recoarsen_blue(mesh, marked)
    red = qrefine_r(red, marks)
    return regularize_blue(red)


__all__ = [
    "trefine_r", "qrefine_r", "trefine_nvb", "trefine_rgb", "trefine_rg", "qrefine_rg", "qrefine_rb",
]
