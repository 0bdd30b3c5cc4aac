"""Coarsening of newest-vertex-bisection and red-green-blue meshes.

A triangle ``(a, b, c)`` has reference edge ``(a, b)`` and newest vertex
``c``. Bisecting it at ``m`` gives the consecutive siblings
``(c, a, m), (b, c, m)``, so a sibling pair ``(s, t)`` satisfies
``s[0] == t[1]`` and ``s[2] == t[2]``, and the parent is
``(s[1], t[0], s[0])``.

A node is removable when it is not initial, is the newest vertex of every
adjacent element, has two or four adjacent elements, and all of those can
be paired into siblings.

Red patterns of RGB meshes are stored as ``(n1, m12, m31), (m12, n2, m23),
(m31, m23, n3), (m23, m31, m12)``. Before the bisection criterion is
applied a marked red pattern is rewritten as the equivalent bisec(3)
pattern; patterns that do not lose a node in this step are restored.
"""
from __future__ import annotations

import numpy as np

from ._red import mark_mask
from .coarsen_red import compact_nodes
from .mesh import MeshError, TriMesh

MIDPOINT_RTOL = 1e-12


def _node_marks(E, mask, n, policy):
    valence = np.bincount(E.ravel(), minlength=n)
    hits = np.bincount(E[mask].ravel(), minlength=n)
    if policy == "any":
        return valence, hits > 0
    if policy == "all":
        return valence, (hits == valence) & (valence > 0)
    raise ValueError(f"unknown mark policy {policy!r}")


def _select(E, coords, mask, n0, policy):
    """Sibling pairs (start indices) to merge and the mask of removed nodes."""
    n = len(coords)
    m = len(E)
    removed = np.zeros(n, bool)
    if m < 2:
        return np.zeros(0, np.int64), removed
    newest = E[:, 2]
    valence, marked_node = _node_marks(E, mask, n, policy)
    newest_cnt = np.bincount(newest, minlength=n)
    adm = (np.arange(n) >= n0) & (newest_cnt == valence) & ((valence == 2) | (valence == 4)) & marked_node
    s, t = E[:-1], E[1:]
    cand = adm[s[:, 2]] & (s[:, 2] == t[:, 2]) & (s[:, 0] == t[:, 1])
    if cand.any():
        c = np.nonzero(cand)[0]
        mid = 0.5 * (coords[E[c, 1]] + coords[E[c + 1, 0]])
        scale = max(1.0, float(np.abs(coords).max()))
        ok = np.abs(mid - coords[E[c, 2]]).max(axis=1) <= MIDPOINT_RTOL * scale
        cand[c[~ok]] = False
    taken = []
    last = -2
    for i in np.nonzero(cand)[0].tolist():
        if i > last + 1:
            taken.append(i)
            last = i
    taken = np.array(taken, np.int64)
    if taken.size == 0:
        return taken, removed
    pairs = np.bincount(newest[taken], minlength=n)
    full = adm & (2 * pairs == valence)
    taken = taken[full[newest[taken]]]
    removed[newest[taken]] = True
    return taken, removed


def _merge(mesh: TriMesh, E, taken) -> TriMesh:
    if taken.size == 0:
        return mesh.replace(elements3=E) if not np.array_equal(E, mesh.elements3) else mesh
    E = E.copy()
    s, t = E[taken], E[taken + 1]
    E[taken] = np.column_stack([s[:, 1], t[:, 0], s[:, 0]])
    keep = np.ones(len(E), bool)
    keep[taken + 1] = False
    coords, (E,), _, bnd, removed = compact_nodes(mesh.coordinates, [E[keep]], mesh.boundary)
    if removed[:mesh.n0].any():
        raise MeshError("coarsening removed an initial node")
    return TriMesh(coords, E, None, bnd, mesh.n0)


def coarsen_nvb(mesh: TriMesh, marked, n0: int = None, policy: str = "any") -> TriMesh:
    """One coarsening step for newest vertex bisection meshes.

    With ``policy="any"`` a node counts as marked if one of its elements is
    marked; with ``"all"`` every adjacent element must be marked.
    """
    n0 = mesh.n0 if n0 is None else n0
    mask = mark_mask(marked, mesh.n_elements)
    if not mask.any():
        return mesh
    taken, _ = _select(mesh.elements3, mesh.coordinates, mask, n0, policy)
    return _merge(mesh, mesh.elements3, taken)


def red_patterns(E: np.ndarray) -> np.ndarray:
    """Start indices of stored red patterns (four consecutive elements)."""
    if len(E) < 4:
        return np.zeros(0, np.int64)
    A, B, C, D = E[:-3], E[1:-2], E[2:-1], E[3:]
    hit = ((A[:, 1] == B[:, 0]) & (A[:, 2] == C[:, 0]) & (B[:, 2] == C[:, 1])
           & (D[:, 0] == B[:, 2]) & (D[:, 1] == A[:, 2]) & (D[:, 2] == A[:, 1]))
    out, last = [], -4
    for i in np.nonzero(hit)[0].tolist():
        if i >= last + 4:
            out.append(i)
            last = i
    return np.array(out, np.int64)


def red_to_bisection(E: np.ndarray, starts: np.ndarray) -> np.ndarray:
    """Rewrite red patterns as the bisec(3) pattern of the same parent."""
    E = E.copy()
    if starts.size == 0:
        return E
    A, B, C = E[starts], E[starts + 1], E[starts + 2]
    n1, m12, m31 = A[:, 0], A[:, 1], A[:, 2]
    n2, m23, n3 = B[:, 1], B[:, 2], C[:, 2]
    E[starts] = np.column_stack([m12, n3, m31])
    E[starts + 1] = np.column_stack([n1, m12, m31])
    E[starts + 2] = np.column_stack([m12, n2, m23])
    E[starts + 3] = np.column_stack([n3, m12, m23])
    return E


def coarsen_rgb(mesh: TriMesh, marked, n0: int = None, policy: str = "any") -> TriMesh:
    """One coarsening step for red-green-blue meshes.

    Red patterns return to their parent in two steps, passing through a
    green or blue intermediate pattern.
    """
    n0 = mesh.n0 if n0 is None else n0
    mask = mark_mask(marked, mesh.n_elements)
    if not mask.any():
        return mesh
    E = mesh.elements3
    starts = red_patterns(E)
    if starts.size:
        pm = mask[starts[:, None] + np.arange(4)]
        sel = pm.any(axis=1) if policy == "any" else pm.all(axis=1)
        starts = starts[sel]
    work_mask = mask.copy()
    for t in range(4):
        work_mask[starts + t] = True
    W = red_to_bisection(E, starts)
    _, removed = _select(W, mesh.coordinates, work_mask, n0, policy)
    if starts.size:
        touched = removed[E[starts, 2]] | removed[E[starts + 1, 2]]
        restore = starts[~touched]
        for t in range(4):
            W[restore + t] = E[restore + t]
            work_mask[restore + t] = mask[restore + t]
    taken, _ = _select(W, mesh.coordinates, work_mask, n0, policy)
    return _merge(mesh, W, taken)


__all__ = ["coarsen_nvb", "coarsen_rgb", "red_patterns", "red_to_bisection"]
