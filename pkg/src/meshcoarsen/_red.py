"""Shared machinery for red refinement of 1-irregular meshes.

Used by the refinement strategies and by the regularization step of the
red-blue wrapper, which has to insert red refinements during its closure.
"""
from __future__ import annotations

import numpy as np

from .geometry import EdgeIndex, create_edge2elements, number_edges
from .mesh import MeshError


def mark_mask(marked, m: int) -> np.ndarray:
    """Boolean mask of length ``m`` from an index list, ``"all"`` or a mask."""
    if isinstance(marked, str):
        if marked != "all":
            raise ValueError(f"unknown marking {marked!r}")
        return np.ones(m, bool)
    arr = np.asarray(marked)
    if arr.dtype == bool:
        if arr.shape != (m,):
            raise IndexError(f"mark mask has length {arr.size}, expected {m}")
        return arr.copy()
    arr = arr.astype(np.int64).ravel()
    if arr.size and (arr.min() < 0 or arr.max() >= m):
        raise IndexError(f"marked element index out of range 0..{m - 1}")
    mask = np.zeros(m, bool)
    mask[arr] = True
    return mask


class RedContext:
    """Edge data of a red (possibly irregular) mesh.

    Attributes
    ----------
    edge_hanging : node hanging on each edge, ``-1`` if none
    half_to_long : for a half of an irregular edge, the index of the long
        edge, else ``-1``
    """

    def __init__(self, elements: np.ndarray, irregular: np.ndarray, n_nodes: int):
        self.elements = elements
        self.k = elements.shape[1]
        self.n = n_nodes
        self.edge2nodes, (self.el2ed,) = number_edges([elements], n_nodes)
        ne = len(self.edge2nodes)
        self.edge2el = create_edge2elements(self.el2ed, ne)
        self.index = EdgeIndex(self.edge2nodes, n_nodes)
        self.edge_hanging = np.full(ne, -1, np.int64)
        self.half_to_long = np.full(ne, -1, np.int64)
        self.long_edges = np.zeros(0, np.int64)
        if len(irregular):
            irr = np.asarray(irregular, dtype=np.int64)
            long = self.index.find(irr[:, 0], irr[:, 1])
            h1 = self.index.find(irr[:, 0], irr[:, 2])
            h2 = self.index.find(irr[:, 2], irr[:, 1])
            if (long < 0).any() or (h1 < 0).any() or (h2 < 0).any():
                raise MeshError("irregular table does not match the element edges")
            self.edge_hanging[long] = irr[:, 2]
            self.half_to_long[h1] = long
            self.half_to_long[h2] = long
            self.long_edges = long

    @property
    def n_edges(self) -> int:
        return len(self.edge2nodes)

    def boundary_edges(self) -> np.ndarray:
        """Mask of edges that occur once, counting irregular triples as
        zero-area virtual elements."""
        cnt = np.bincount(self.el2ed.ravel(), minlength=self.n_edges)
        if len(self.long_edges):
            np.add.at(cnt, self.long_edges, 1)
            halves = np.nonzero(self.half_to_long >= 0)[0]
            np.add.at(cnt, halves, 1)
        return cnt == 1


def red_closure(ctx: RedContext, marked: np.ndarray, d=None, extra_split=None) -> np.ndarray:
    """Grow ``marked`` until the 1-irregular rule (and, if ``d`` is given,
    the d-neighbour rule) holds after refinement."""
    marked = marked.copy()
    el2ed = ctx.el2ed
    while True:
        before = int(marked.sum())
        me = el2ed[marked].ravel()
        need = ctx.half_to_long[me]
        need = need[need >= 0]
        if need.size:
            marked[ctx.edge2el[need, 0]] = True
        if d is not None:
            split = ctx.edge_hanging >= 0
            split[el2ed[marked].ravel()] = True
            if extra_split is not None:
                split |= extra_split
            cnt = split[el2ed].sum(axis=1)
            marked |= cnt >= d
        if int(marked.sum()) == before:
            return marked


def red_refine(coordinates, ctx: RedContext, irregular, boundary, marked: np.ndarray):
    """Red-refine all elements in ``marked`` (closure already applied).

    Returns new ``(coordinates, elements, irregular, boundary, parent)``
    where ``parent[i]`` is the input element that output element ``i``
    stems from.
    """
    elements = ctx.elements
    k = ctx.k
    m = len(elements)
    n = len(coordinates)
    el2ed = ctx.el2ed
    ref_edges = np.unique(el2ed[marked].ravel())
    fresh = ref_edges[ctx.edge_hanging[ref_edges] < 0]
    edge2new = ctx.edge_hanging.copy()
    edge2new[fresh] = n + np.arange(len(fresh))
    e2n = ctx.edge2nodes[fresh]
    new_coords = [coordinates, 0.5 * (coordinates[e2n[:, 0]] + coordinates[e2n[:, 1]])]
    marked_idx = np.nonzero(marked)[0]
    P = elements[marked_idx]
    M = edge2new[el2ed[marked_idx]]  # midpoint of local edge l = (v_l, v_{l+1})
    if k == 4:
        centers = n + len(fresh) + np.arange(len(marked_idx))
        new_coords.append(coordinates[P].mean(axis=1))
        C = centers
        children = np.stack([
            np.column_stack([P[:, 0], M[:, 0], C, M[:, 3]]),
            np.column_stack([P[:, 1], M[:, 1], C, M[:, 0]]),
            np.column_stack([P[:, 2], M[:, 2], C, M[:, 1]]),
            np.column_stack([P[:, 3], M[:, 3], C, M[:, 2]]),
        ], axis=1)
    else:
        children = np.stack([
            np.column_stack([P[:, 0], M[:, 0], M[:, 2]]),
            np.column_stack([M[:, 0], P[:, 1], M[:, 1]]),
            np.column_stack([M[:, 2], M[:, 1], P[:, 2]]),
            np.column_stack([M[:, 0], M[:, 1], M[:, 2]]),
        ], axis=1)
    coords = np.vstack(new_coords)

    counts = np.where(marked, 4, 1)
    offset = np.concatenate([[0], np.cumsum(counts)[:-1]])
    out = np.empty((counts.sum(), k), np.int64)
    keep = ~marked
    out[offset[keep]] = elements[keep]
    for c in range(4):
        out[offset[marked_idx] + c] = children[:, c]
    parent = np.repeat(np.arange(m), counts)

    # irregular edges
    rows = []
    if len(irregular):
        irr = np.asarray(irregular, dtype=np.int64)
        long = ctx.index.find(irr[:, 0], irr[:, 1])
        owner = ctx.edge2el[long, 0]
        rows.append(irr[~marked[owner]])
    if len(fresh):
        e2el = ctx.edge2el[fresh]
        is_half = ctx.half_to_long[fresh] >= 0
        is_bnd = (e2el[:, 1] < 0) & ~is_half
        both = (e2el[:, 1] >= 0) & marked[e2el[:, 0]] & marked[np.maximum(e2el[:, 1], 0)]
        sel = ~is_bnd & ~both
        a, b = e2n[sel, 0], e2n[sel, 1]
        rows.append(np.column_stack([a, b, edge2new[fresh[sel]]]))
    new_irr = np.vstack(rows) if rows else np.zeros((0, 3), np.int64)

    new_bnd = boundary
    if boundary is not None and len(boundary) and len(fresh):
        bidx = ctx.index.find(boundary[:, 0], boundary[:, 1])
        mids = np.where(bidx >= 0, edge2new[np.maximum(bidx, 0)], -1)
        split = (bidx >= 0) & np.isin(bidx, fresh)
        cnt = np.where(split, 2, 1)
        off = np.concatenate([[0], np.cumsum(cnt)[:-1]])
        nb = np.empty((cnt.sum(), 2), np.int64)
        nb[off[~split]] = boundary[~split]
        s = np.nonzero(split)[0]
        nb[off[s]] = np.column_stack([boundary[s, 0], mids[s]])
        nb[off[s] + 1] = np.column_stack([mids[s], boundary[s, 1]])
        new_bnd = nb
    return coords, out, new_irr, new_bnd, parent
