"""Coarsening of conforming red-green and red-blue meshes.

Each step recoarsens the trailing green/blue block into a 1-irregular red
mesh, coarsens that with :func:`coarsen_red.coarsen_r` and closes the
remaining hanging nodes again.

Storage of the Q-RG triangle block: all three-triangle patterns come first,
then all four-triangle patterns. For a parent ``(p1, p2, p3, p4)`` with
hanging node ``m`` on ``(p1, p2)`` the three triangles are::

    (p1, m, p4), (m, p2, p3), (m, p3, p4)

and with hanging nodes ``m1`` on ``(p1, p2)`` and ``m2`` on ``(p2, p3)``
the four triangles are::

    (p1, m1, p4), (m1, p2, m2), (m2, p3, p4), (m1, m2, p4)

A group of three is recognised by ``t0[1] == t1[0] == t2[0]``, which never
holds at the start of a group of four.
"""
from __future__ import annotations

import numpy as np

from ._red import RedContext, mark_mask, red_closure, red_refine
from .coarsen_red import coarsen_r, compact_nodes
from .geometry import EdgeIndex
from .mesh import MeshError, MixedMesh, QuadMesh, TriMesh, rotate_oldest_first


def _rotate_rows(elements: np.ndarray, start: np.ndarray) -> np.ndarray:
    k = elements.shape[1]
    idx = (start[:, None] + np.arange(k)[None, :]) % k
    return np.take_along_axis(elements, idx, axis=1)


def _with_irregular(base, rows):
    rows = [r for r in rows if len(r)]
    if not rows:
        return np.asarray(base).reshape(-1, 3)
    return np.vstack([np.asarray(base).reshape(-1, 3)] + rows)


# ---------------------------------------------------------------------------
# T-RG


def regularize_green_tri(mesh: TriMesh) -> TriMesh:
    """Close every hanging node of a red triangle mesh by a green pair."""
    if len(mesh.irregular) == 0:
        return mesh.replace(n_green=0) if mesh.n_green else mesh
    E = mesh.elements3
    ctx = RedContext(E, mesh.irregular, len(mesh.coordinates))
    H = ctx.edge_hanging[ctx.el2ed]
    has = H >= 0
    cnt = has.sum(axis=1)
    if (cnt >= 2).any():
        bad = int(np.nonzero(cnt >= 2)[0][0])
        raise MeshError(f"element {bad} has {int(cnt[bad])} hanging nodes; no green pattern fits")
    g = np.nonzero(cnt == 1)[0]
    loc = np.argmax(has[g], axis=1)
    P = _rotate_rows(E[g], loc)
    m = H[g, loc]
    green = np.stack([np.column_stack([P[:, 0], m, P[:, 2]]),
                      np.column_stack([m, P[:, 1], P[:, 2]])], axis=1).reshape(-1, 3)
    elements = np.vstack([E[cnt == 0], green])
    return TriMesh(mesh.coordinates, elements, None, mesh.boundary, mesh.n0, n_green=len(green))


def recoarsen_green_tri(mesh: TriMesh, marked):
    """Replace green pairs by their parents.

    Returns the red mesh (with hanging nodes recorded) and the transferred
    marks as an index array.
    """
    E = mesh.elements3
    m = len(E)
    mask = mark_mask(marked, m)
    ng = mesh.n_green
    if ng == 0:
        return mesh, np.nonzero(mask)[0]
    red = E[:m - ng]
    A = E[m - ng::2]
    B = E[m - ng + 1::2]
    inB = (A[:, :, None] == B[:, None, :]).any(axis=2)
    inA = (B[:, :, None] == A[:, None, :]).any(axis=2)
    if (inB.sum(axis=1) != 2).any():
        bad = int(np.nonzero(inB.sum(axis=1) != 2)[0][0])
        raise MeshError(f"green pair {bad} does not share exactly one edge")
    p1 = A[~inB]
    p2 = B[~inA]
    common = A[inB].reshape(-1, 2)
    newest = common.max(axis=1)
    parents = np.where(A == newest[:, None], p2[:, None], A)
    elements = np.vstack([red, parents])
    irr = _with_irregular(mesh.irregular, [np.column_stack([p1, p2, newest])])
    gmask = mask[m - ng:].reshape(-1, 2).any(axis=1)
    marks = np.nonzero(np.concatenate([mask[:m - ng], gmask]))[0]
    return TriMesh(mesh.coordinates, elements, irr, mesh.boundary, mesh.n0), marks


def coarsen_rg_tri(mesh: TriMesh, marked, policy: str = "any") -> TriMesh:
    """One red-green coarsening step for triangles."""
    red, marks = recoarsen_green_tri(mesh, marked)
    red = coarsen_r(red, marks, policy, two_neighbor_rule=True)
    return regularize_green_tri(red)


# ---------------------------------------------------------------------------
# Q-RG


def regularize_green_quad(mesh: QuadMesh) -> MixedMesh:
    """Close hanging nodes of a red quad mesh with green patterns."""
    E = rotate_oldest_first(mesh.elements4)
    if len(mesh.irregular) == 0:
        return MixedMesh(mesh.coordinates, None, E, mesh.boundary, mesh.n0)
    ctx = RedContext(E, mesh.irregular, len(mesh.coordinates))
    H = ctx.edge_hanging[ctx.el2ed]
    has = H >= 0
    cnt = has.sum(axis=1)
    if (cnt >= 3).any():
        bad = int(np.nonzero(cnt >= 3)[0][0])
        raise MeshError(f"element {bad} has {int(cnt[bad])} hanging nodes; no green pattern fits")
    nxt = np.roll(has, -1, axis=1)
    adjacent = (cnt == 2) & (has & nxt).any(axis=1)
    opposite = (cnt == 2) & ~adjacent
    one = np.nonzero(cnt == 1)[0]
    loc = np.argmax(has[one], axis=1)
    P = _rotate_rows(E[one], loc)
    m = H[one, loc]
    type1 = np.stack([np.column_stack([P[:, 0], m, P[:, 3]]),
                      np.column_stack([m, P[:, 1], P[:, 2]]),
                      np.column_stack([m, P[:, 2], P[:, 3]])], axis=1).reshape(-1, 3)

    two = np.nonzero(adjacent)[0]
    loc = np.argmax(has[two] & nxt[two], axis=1)
    P = _rotate_rows(E[two], loc)
    m1 = H[two, loc]
    m2 = H[two, (loc + 1) % 4]
    type2 = np.stack([np.column_stack([P[:, 0], m1, P[:, 3]]),
                      np.column_stack([m1, P[:, 1], m2]),
                      np.column_stack([m2, P[:, 2], P[:, 3]]),
                      np.column_stack([m1, m2, P[:, 3]])], axis=1).reshape(-1, 3)

    opp = np.nonzero(opposite)[0]
    loc = np.where(has[opp, 1], 0, 1)
    P = _rotate_rows(E[opp], loc)
    a = H[opp, (loc + 1) % 4]
    b = H[opp, (loc + 3) % 4]
    gq = np.stack([np.column_stack([P[:, 0], P[:, 1], a, b]),
                   np.column_stack([b, a, P[:, 2], P[:, 3]])], axis=1).reshape(-1, 4)
    gq = rotate_oldest_first(gq)
    elements4 = np.vstack([E[cnt == 0], gq])
    elements3 = np.vstack([type1, type2])
    return MixedMesh(mesh.coordinates, elements3, elements4, mesh.boundary, mesh.n0, n_green4=len(gq))


def _count_type1(T: np.ndarray) -> int:
    """Number of leading three-triangle groups."""
    g = len(T) // 3
    if g == 0:
        return 0
    head = T[:3 * g].reshape(g, 3, 3)
    sig = (head[:, 0, 1] == head[:, 1, 0]) & (head[:, 1, 0] == head[:, 2, 0])
    return g if sig.all() else int(np.argmin(sig))


def recoarsen_green_quad(mesh, marked):
    """Replace all green patterns of a Q-RG mesh by their quad parents."""
    if isinstance(mesh, QuadMesh):
        mask = mark_mask(marked, mesh.n_elements)
        return mesh, np.nonzero(mask)[0]
    T = mesh.elements3
    Q = mesh.elements4
    m3, m4 = len(T), len(Q)
    mask = mark_mask(marked, m3 + m4)
    mask3, mask4 = mask[:m3], mask[m3:]
    n1 = _count_type1(T)
    if (m3 - 3 * n1) % 4:
        raise MeshError("cannot classify the green triangle block")
    t1 = T[:3 * n1].reshape(-1, 3, 3)
    t2 = T[3 * n1:].reshape(-1, 4, 3)
    if len(t1):
        ok = (t1[:, 0, 1] == t1[:, 1, 0]) & (t1[:, 1, 0] == t1[:, 2, 0])
        ok &= (t1[:, 1, 2] == t1[:, 2, 1]) & (t1[:, 0, 2] == t1[:, 2, 2])
        if not ok.all():
            raise MeshError(f"malformed three-triangle green group {int(np.argmin(ok))}")
    if len(t2):
        ok = (t2[:, 0, 1] == t2[:, 1, 0]) & (t2[:, 1, 2] == t2[:, 2, 0])
        ok &= (t2[:, 3, 0] == t2[:, 0, 1]) & (t2[:, 3, 1] == t2[:, 1, 2]) & (t2[:, 3, 2] == t2[:, 0, 2])
        ok &= t2[:, 2, 2] == t2[:, 0, 2]
        if not ok.all():
            raise MeshError(f"malformed four-triangle green group {int(np.argmin(ok))}")
    par1 = np.column_stack([t1[:, 0, 0], t1[:, 1, 1], t1[:, 1, 2], t1[:, 0, 2]]) if len(t1) else np.zeros((0, 4), np.int64)
    irr1 = np.column_stack([t1[:, 0, 0], t1[:, 1, 1], t1[:, 0, 1]]) if len(t1) else np.zeros((0, 3), np.int64)
    par2 = np.column_stack([t2[:, 0, 0], t2[:, 1, 1], t2[:, 2, 1], t2[:, 0, 2]]) if len(t2) else np.zeros((0, 4), np.int64)
    irr2 = (np.vstack([np.column_stack([t2[:, 0, 0], t2[:, 1, 1], t2[:, 0, 1]]),
                       np.column_stack([t2[:, 1, 1], t2[:, 2, 1], t2[:, 1, 2]])])
            if len(t2) else np.zeros((0, 3), np.int64))

    ng4 = mesh.n_green4
    red = Q[:m4 - ng4]
    G = Q[m4 - ng4:].reshape(-1, 2, 4)
    par3, irr3 = [], []
    for q1, q2 in G.tolist():
        s2 = set(q2)
        r = next((r for r in range(4) if q1[(r + 2) % 4] in s2 and q1[(r + 3) % 4] in s2), None)
        if r is None or len(s2 & set(q1)) != 2:
            raise MeshError("malformed green quadrilateral pair")
        x, y, s1_, s2_ = (q1[(r + t) % 4] for t in range(4))
        r2 = q2.index(s2_)
        if q2[(r2 + 1) % 4] != s1_:
            raise MeshError("malformed green quadrilateral pair")
        z, w = q2[(r2 + 2) % 4], q2[(r2 + 3) % 4]
        par3.append([x, y, z, w])
        irr3.append([y, z, s1_])
        irr3.append([w, x, s2_])
    par3 = np.array(par3, np.int64).reshape(-1, 4)
    irr3 = np.array(irr3, np.int64).reshape(-1, 3)

    elements = rotate_oldest_first(np.vstack([red, par3, par1, par2]))
    irr = _with_irregular(np.zeros((0, 3), np.int64), [irr3, irr1, irr2])
    marks = np.concatenate([
        mask4[:m4 - ng4],
        mask4[m4 - ng4:].reshape(-1, 2).any(axis=1),
        mask3[:3 * n1].reshape(-1, 3).any(axis=1),
        mask3[3 * n1:].reshape(-1, 4).any(axis=1),
    ])
    out = QuadMesh(mesh.coordinates, elements, irr, mesh.boundary, mesh.n0)
    return out, np.nonzero(marks)[0]


def coarsen_rg_quad(mesh, marked, policy: str = "any") -> MixedMesh:
    """One red-green coarsening step for quadrilaterals."""
    red, marks = recoarsen_green_quad(mesh, marked)
    red = coarsen_r(red, marks, policy)
    return regularize_green_quad(red)


# ---------------------------------------------------------------------------
# Q-RB


def recoarsen_blue(mesh: QuadMesh, marked):
    """Replace blue triples by their parents.

    A newest node of a blue pattern survives as a hanging node if some
    remaining element still uses it; otherwise (shared with another blue
    pattern, or on the boundary) it is deleted.
    """
    E = mesh.elements4
    m = len(E)
    mask = mark_mask(marked, m)
    nb = mesh.n_blue
    if nb == 0:
        return mesh, np.nonzero(mask)[0]
    red = E[:m - nb]
    parents, hang = [], []
    for q1, q2, q3 in E[m - nb:].reshape(-1, 3, 4).tolist():
        s1, s2, s3 = set(q1), set(q2), set(q3)
        common = s1 & s2 & s3
        if len(common) != 1:
            raise MeshError("malformed blue triple")
        c = common.pop()
        try:
            (m1,) = (s1 & s2) - {c}
            (m2,) = (s2 & s3) - {c}
            (p4,) = (s1 & s3) - {c}
            (p1,) = s1 - {m1, c, p4}
            (p2,) = s2 - {m1, m2, c}
            (p3,) = s3 - {m2, p4, c}
        except ValueError:
            raise MeshError("malformed blue triple") from None
        parents.append([p1, p2, p3, p4])
        hang.append([p1, p2, m1])
        hang.append([p2, p3, m2])
    parents = np.array(parents, np.int64)
    hang = np.array(hang, np.int64)
    elements = np.vstack([red, parents])
    used = np.zeros(len(mesh.coordinates), bool)
    used[elements.ravel()] = True
    irr = _with_irregular(mesh.irregular, [hang[used[hang[:, 2]]]])
    coords, (elements,), (irr,), bnd, _ = compact_nodes(mesh.coordinates, [elements], mesh.boundary, [irr])
    marks = np.concatenate([mask[:m - nb], mask[m - nb:].reshape(-1, 3).any(axis=1)])
    out = QuadMesh(coords, rotate_oldest_first(elements), irr, bnd, mesh.n0)
    return out, np.nonzero(marks)[0]


def _blue_closure(ctx: RedContext):
    """Choose red refinements and extra split edges so that every element
    ends up with no split edge or with two adjacent ones.

    An element with a single split edge also splits the adjacent edge with
    the smaller edge number (edges that are halves of a coarser irregular
    edge are not eligible; if neither is, the element is refined red).
    Opposite split edges or three or more force a red refinement.
    """
    m = len(ctx.elements)
    marked = np.zeros(m, bool)
    extra = np.zeros(ctx.n_edges, bool)
    el2ed = ctx.el2ed
    eligible = ctx.half_to_long < 0
    while True:
        marked = red_closure(ctx, marked, d=3, extra_split=extra)
        split = (ctx.edge_hanging >= 0) | extra
        split[el2ed[marked].ravel()] = True
        S = split[el2ed]
        cnt = S.sum(axis=1)
        nxt = np.roll(S, -1, axis=1)
        opposite = (cnt == 2) & ~(S & nxt).any(axis=1)
        new_red = ~marked & (opposite | (cnt >= 3))
        single = np.nonzero(~marked & (cnt == 1))[0]
        changed = bool(new_red.any())
        marked |= new_red
        if single.size:
            loc = np.argmax(S[single], axis=1)
            ea = el2ed[single, (loc + 3) % 4]
            eb = el2ed[single, (loc + 1) % 4]
            ok_a, ok_b = eligible[ea], eligible[eb]
            pick = np.where(ok_a & ok_b, np.minimum(ea, eb), np.where(ok_a, ea, eb))
            none = ~ok_a & ~ok_b
            if none.any():
                marked[single[none]] = True
                changed = True
            pick = pick[~none]
            if pick.size:
                extra[pick] = True
                changed = True
        if not changed:
            return marked, extra


def regularize_blue(mesh: QuadMesh) -> QuadMesh:
    """Remove all hanging nodes using blue patterns plus red refinements
    where no blue pattern fits."""
    E = rotate_oldest_first(mesh.elements4)
    if len(mesh.irregular) == 0:
        return QuadMesh(mesh.coordinates, E, None, mesh.boundary, mesh.n0)
    n = len(mesh.coordinates)
    ctx = RedContext(E, mesh.irregular, n)
    marked, extra = _blue_closure(ctx)
    x_pairs = ctx.edge2nodes[extra]
    if marked.any():
        coords, E, irr, bnd, _ = red_refine(mesh.coordinates, ctx, mesh.irregular, mesh.boundary, marked)
        n = len(coords)
        ctx = RedContext(E, irr, n)
    else:
        coords, irr, bnd = mesh.coordinates, mesh.irregular, mesh.boundary
    x_idx = ctx.index.find(x_pairs[:, 0], x_pairs[:, 1])
    x_idx = x_idx[x_idx >= 0]
    x_idx = x_idx[ctx.edge_hanging[x_idx] < 0]
    x_idx = np.unique(x_idx)
    mid = ctx.edge_hanging.copy()
    mid[x_idx] = n + np.arange(len(x_idx))
    e2n = ctx.edge2nodes[x_idx]
    coords = np.vstack([coords, 0.5 * (coords[e2n[:, 0]] + coords[e2n[:, 1]])])

    H = mid[ctx.el2ed]
    S = H >= 0
    cnt = S.sum(axis=1)
    nxt = np.roll(S, -1, axis=1)
    blue = cnt == 2
    if (~blue & (cnt != 0)).any() or ((cnt == 2) & ~(S & nxt).any(axis=1)).any():
        raise MeshError("blue closure left an element without a fitting pattern")
    b = np.nonzero(blue)[0]
    loc = np.argmax(S[b] & nxt[b], axis=1)
    P = _rotate_rows(E[b], loc)
    m1 = H[b, loc]
    m2 = H[b, (loc + 1) % 4]
    centers = len(coords) + np.arange(len(b))
    coords = np.vstack([coords, coords[P].mean(axis=1)])
    triples = np.stack([np.column_stack([P[:, 0], m1, centers, P[:, 3]]),
                        np.column_stack([m1, P[:, 1], m2, centers]),
                        np.column_stack([m2, P[:, 2], P[:, 3], centers])], axis=1).reshape(-1, 4)
    elements = np.vstack([E[cnt == 0], rotate_oldest_first(triples)])

    if bnd is not None and len(bnd) and len(x_idx):
        bidx = ctx.index.find(bnd[:, 0], bnd[:, 1])
        xm = np.full(ctx.n_edges, -1, np.int64)
        xm[x_idx] = mid[x_idx]
        mids = np.where(bidx >= 0, xm[np.maximum(bidx, 0)], -1)
        split = mids >= 0
        cntb = np.where(split, 2, 1)
        off = np.concatenate([[0], np.cumsum(cntb)[:-1]])
        nbnd = np.empty((cntb.sum(), 2), np.int64)
        nbnd[off[~split]] = bnd[~split]
        s = np.nonzero(split)[0]
        nbnd[off[s]] = np.column_stack([bnd[s, 0], mids[s]])
        nbnd[off[s] + 1] = np.column_stack([mids[s], bnd[s, 1]])
        bnd = nbnd
    return QuadMesh(coords, elements, None, bnd, mesh.n0, n_blue=len(triples))


def coarsen_rb(mesh: QuadMesh, marked, policy: str = "any") -> QuadMesh:
    """One red-blue coarsening step."""
    red, marks = recoarsen_blue(mesh, marked)
    red = coarsen_r(red, marks, policy)
    return regularize_blue(red)


__all__ = [
    "regularize_green_tri", "recoarsen_green_tri", "coarsen_rg_tri",
    "regularize_green_quad", "recoarsen_green_quad", "coarsen_rg_quad",
    "recoarsen_blue", "regularize_blue", "coarsen_rb",
]
