"""History-free coarsening of red-refined (1-irregular) meshes.

The pipeline is Admissible -> Mark -> Closure -> Update. Parent elements
are recovered from the storage conventions of :mod:`meshcoarsen.refine`:
node age is index order, quadrilateral children carry the parent's center
at position three, and a triangle's middle child is recognised from the
oldest nodes of its neighbours.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._red import mark_mask
from .geometry import EdgeIndex, GeomData, provide_geometric_data
from .mesh import MeshError, QuadMesh, TriMesh, rotate_oldest_first


@dataclass(frozen=True, eq=False)
class AdmissibleSet:
    """Quartets of sibling elements.

    ``quartets[q]`` lists four element ids. For quadrilaterals they are
    sorted counterclockwise starting with the child holding the parent's
    oldest corner, and ``middle[q]`` is the shared center node. For
    triangles the three outer children come counterclockwise and the middle
    child last; ``middle[q]`` is the middle element id.
    """

    quartets: np.ndarray
    middle: np.ndarray

    def __len__(self) -> int:
        return len(self.quartets)

    def subset(self, keep: np.ndarray) -> "AdmissibleSet":
        return AdmissibleSet(self.quartets[keep], self.middle[keep])

    def as_sets(self) -> set:
        return {frozenset(q) for q in self.quartets.tolist()}


def _empty() -> AdmissibleSet:
    return AdmissibleSet(np.zeros((0, 4), np.int64), np.zeros(0, np.int64))


def _elements(mesh) -> np.ndarray:
    return mesh.elements4 if isinstance(mesh, QuadMesh) else mesh.elements3


# ---------------------------------------------------------------------------
# Admissible


def q_admissible(mesh: QuadMesh, geom: GeomData = None) -> AdmissibleSet:
    """Quartets around nodes found at position three of exactly four
    elements (initial nodes excluded).

    Elements must be rotated oldest-first (see
    :func:`meshcoarsen.mesh.normalize_oldest_first`); :func:`coarsen_r`
    does this before calling.
    """
    E = mesh.elements4
    n = len(mesh.coordinates)
    if len(E) == 0:
        return _empty()
    pos3 = E[:, 2]
    counts = np.bincount(pos3, minlength=n)
    cand = (counts == 4) & (np.arange(n) >= mesh.n0)
    els = np.nonzero(cand[pos3])[0]
    if els.size == 0:
        return _empty()
    els = els[np.argsort(pos3[els], kind="stable")]
    groups = els.reshape(-1, 4)
    q = len(groups)
    P1, P2, P4 = E[groups, 0], E[groups, 1], E[groups, 3]
    order = np.empty((q, 4), np.int64)
    order[:, 0] = np.argmin(P1, axis=1)
    valid = np.ones(q, bool)
    rows = np.arange(q)
    for t in range(1, 4):
        cur = order[:, t - 1]
        match = P4 == P2[rows, cur][:, None]
        order[:, t] = np.argmax(match, axis=1)
        valid &= match.any(axis=1)
    valid &= P2[rows, order[:, 3]] == P4[rows, order[:, 0]]
    quartets = np.take_along_axis(groups, order, axis=1)[valid]
    return AdmissibleSet(quartets, pos3[quartets[:, 0]])


def t_admissible(mesh: TriMesh, geom: GeomData = None) -> AdmissibleSet:
    """Quartets around middle elements.

    Every edge receives the oldest first node among its adjacent elements;
    an element whose three edges disagree is a middle element. Middle
    elements touching an initial node or lacking three direct neighbours
    are skipped.
    """
    E = mesh.elements3
    if len(E) == 0:
        return _empty()
    geom = geom if geom is not None else provide_geometric_data(mesh)
    el2ed, e2el = geom.element2edges, geom.edge2elements
    oldest = E.min(axis=1)
    big = np.iinfo(np.int64).max
    v_old = np.minimum(np.where(e2el[:, 0] >= 0, oldest[e2el[:, 0]], big),
                       np.where(e2el[:, 1] >= 0, oldest[np.maximum(e2el[:, 1], 0)], big))
    vals = v_old[el2ed]
    middle = ~((vals[:, 0] == vals[:, 1]) & (vals[:, 1] == vals[:, 2]))
    middle &= E.min(axis=1) >= mesh.n0
    adj = e2el[el2ed]  # (m, 3, 2)
    middle &= (adj >= 0).all(axis=(1, 2))
    mids = np.nonzero(middle)[0]
    if mids.size == 0:
        return _empty()
    a = adj[mids]
    nb = np.where(a[:, :, 0] == mids[:, None], a[:, :, 1], a[:, :, 0])
    quartets = np.column_stack([nb, mids])
    return AdmissibleSet(quartets, mids)


# ---------------------------------------------------------------------------
# Mark


def mark_filter(adm: AdmissibleSet, marked, policy: str = "any", n_elements: int = None) -> AdmissibleSet:
    """Keep quartets touching the marked elements (``any``) or entirely
    marked (``all``)."""
    if len(adm) == 0:
        return adm
    m = n_elements if n_elements is not None else int(adm.quartets.max()) + 1
    if not isinstance(marked, str):
        arr = np.asarray(marked)
        if arr.dtype != bool and arr.size:
            m = max(m, int(arr.max()) + 1)
    mask = mark_mask(marked, m)
    hit = mask[adm.quartets]
    if policy == "any":
        keep = hit.any(axis=1)
    elif policy == "all":
        keep = hit.all(axis=1)
    else:
        raise ValueError(f"unknown mark policy {policy!r}")
    return adm.subset(keep)


# ---------------------------------------------------------------------------
# Closure


def _irregular_info(mesh, geom: GeomData):
    """Per-element irregular-edge flag, hanging-node flag and boundary-node
    flag (nodes of edges that occur once, irregular triples counted as
    virtual elements)."""
    n = len(mesh.coordinates)
    m = len(_elements(mesh))
    index = EdgeIndex(geom.edge2nodes, n)
    has_irr = np.zeros(m, bool)
    cnt = (geom.edge2elements >= 0).sum(axis=1)
    hanging = np.zeros(n, bool)
    irr = mesh.irregular
    if len(irr):
        long = index.find(irr[:, 0], irr[:, 1])
        h1 = index.find(irr[:, 0], irr[:, 2])
        h2 = index.find(irr[:, 2], irr[:, 1])
        if (long < 0).any() or (h1 < 0).any() or (h2 < 0).any():
            raise MeshError("irregular table does not match the element edges")
        has_irr[geom.edge2elements[long, 0]] = True
        np.add.at(cnt, long, 1)
        np.add.at(cnt, h1, 1)
        np.add.at(cnt, h2, 1)
        hanging[irr[:, 2]] = True
    on_boundary = np.zeros(n, bool)
    on_boundary[geom.edge2nodes[cnt == 1].ravel()] = True
    return has_irr, hanging, on_boundary


def stencil_weights(nodes: np.ndarray, fixed: np.ndarray) -> np.ndarray:
    """Weights of stencil nodes: 2 if hanging, on the boundary or shared by
    two or more stencils, otherwise 1."""
    if nodes.size == 0:
        return np.zeros(nodes.shape, np.int64)
    share = np.bincount(nodes.ravel(), minlength=len(fixed))
    return np.where(fixed[nodes] | (share[nodes] >= 2), 2, 1)


def _weight_filter(adm: AdmissibleSet, nodes: np.ndarray, fixed: np.ndarray, limit: int):
    keep = np.ones(len(adm), bool)
    while True:
        w = stencil_weights(nodes[keep], fixed)
        bad = w.sum(axis=1) <= limit
        if not bad.any():
            return adm.subset(keep)
        idx = np.nonzero(keep)[0]
        keep[idx[bad]] = False


def q_closure(mesh: QuadMesh, geom: GeomData, adm: AdmissibleSet) -> AdmissibleSet:
    """Block quartets that would break 1-irregularity or the 3-neighbour
    rule."""
    if len(adm) == 0:
        return adm
    has_irr, hanging, on_boundary = _irregular_info(mesh, geom)
    fixed = hanging | on_boundary
    adm = adm.subset(~has_irr[adm.quartets].any(axis=1))
    if len(adm) == 0:
        return adm
    nodes = mesh.elements4[adm.quartets, 1]
    return _weight_filter(adm, nodes, fixed, 5)


def q_weight_sums(mesh: QuadMesh, geom: GeomData, adm: AdmissibleSet) -> np.ndarray:
    """Stencil weight sum of every quartet in ``adm`` (one closure pass)."""
    _, hanging, on_boundary = _irregular_info(mesh, geom)
    return stencil_weights(mesh.elements4[adm.quartets, 1], hanging | on_boundary).sum(axis=1)


def t_closure(mesh: TriMesh, geom: GeomData, adm: AdmissibleSet, two_neighbor_rule: bool = False) -> AdmissibleSet:
    """Block quartets with irregular edges; optionally enforce the
    2-neighbour rule on the parents."""
    if len(adm) == 0:
        return adm
    has_irr, hanging, on_boundary = _irregular_info(mesh, geom)
    fixed = hanging | on_boundary
    adm = adm.subset(~has_irr[adm.quartets].any(axis=1))
    if len(adm) == 0 or not two_neighbor_rule:
        return adm
    nodes = mesh.elements3[adm.middle]
    return _weight_filter(adm, nodes, fixed, 4)


# ---------------------------------------------------------------------------
# Update


def merge_boundary(boundary, removed: np.ndarray):
    """Join boundary edges ``(a, m), (m, b)`` around removed nodes ``m``."""
    if boundary is None or len(boundary) == 0:
        return boundary
    hit_end = removed[boundary[:, 1]]
    if not hit_end.any():
        return boundary
    b = boundary.copy()
    start_row = np.full(len(removed), -1, np.int64)
    start_row[b[:, 0]] = np.arange(len(b))
    rows = np.nonzero(hit_end)[0]
    partner = start_row[b[rows, 1]]
    if (partner < 0).any():
        raise MeshError("boundary chain broken at a removed node")
    b[rows, 1] = b[partner, 1]
    keep = np.ones(len(b), bool)
    keep[partner] = False
    return b[keep]


def compact_nodes(coordinates, element_arrays, boundary, other_arrays=()):
    """Drop coordinates no element references and reindex.

    Returns new coordinates, element arrays, other arrays, boundary and the
    mask of removed nodes. ``other_arrays`` (e.g. the irregular table) must
    not reference removed nodes.
    """
    n = len(coordinates)
    used = np.zeros(n, bool)
    for a in element_arrays:
        if len(a):
            used[a.ravel()] = True
    removed = ~used
    for a in other_arrays:
        if len(a) and removed[a.ravel()].any():
            raise MeshError("irregular table references a node of no element")
    boundary = merge_boundary(boundary, removed)
    newidx = np.cumsum(used) - 1

    def remap(a):
        return newidx[a] if len(a) else a

    bnd = None if boundary is None else remap(boundary)
    return (coordinates[used], [remap(a) for a in element_arrays],
            [remap(a) for a in other_arrays], bnd, removed)


def _count_unique_rows(keys: np.ndarray) -> np.ndarray:
    _, inv, cnt = np.unique(keys, return_inverse=True, return_counts=True)
    return cnt[inv]


def update_mesh(mesh, geom: GeomData, adm: AdmissibleSet):
    """Replace each quartet by its parent and tidy up the data structure.

    Quadrilateral meshes must be rotated oldest-first, as for
    :func:`q_admissible`.
    """
    quad = isinstance(mesh, QuadMesh)
    E = _elements(mesh)
    n = len(mesh.coordinates)
    if len(adm) == 0:
        return mesh.replace(**{("elements4" if quad else "elements3"): rotate_oldest_first(E)})
    Q = adm.quartets
    if quad:
        parents = E[Q, 0]
        mids = E[Q, 1]
    else:
        parents = E[Q[:, :3]].min(axis=2)
        M = E[adm.middle]
        mids = np.roll(M, -1, axis=1)
    elim = np.column_stack([parents.ravel(), np.roll(parents, -1, axis=1).ravel(), mids.ravel()])

    if geom is None:
        geom = provide_geometric_data(mesh)
    _, hanging, on_boundary = _irregular_info(mesh, geom)
    rows = np.vstack([mesh.irregular, elim])
    keys = np.minimum(rows[:, 0], rows[:, 1]) * n + np.maximum(rows[:, 0], rows[:, 1])
    once = _count_unique_rows(keys) == 1
    is_bnd = np.zeros(len(rows), bool)
    is_bnd[len(mesh.irregular):] = on_boundary[elim[:, 2]] & ~hanging[elim[:, 2]]
    irregular = rows[once & ~is_bnd]

    drop = np.zeros(len(E), bool)
    drop[Q.ravel()] = True
    new_E = np.vstack([E[~drop], parents])
    coords, (new_E,), (irregular,), bnd, removed = compact_nodes(
        mesh.coordinates, [new_E], mesh.boundary, [irregular])
    if removed[:mesh.n0].any():
        raise MeshError("coarsening removed an initial node")
    new_E = rotate_oldest_first(new_E)
    if quad:
        return QuadMesh(coords, new_E, irregular, bnd, mesh.n0)
    return TriMesh(coords, new_E, irregular, bnd, mesh.n0)


# ---------------------------------------------------------------------------


def coarsen_r(mesh, marked, policy: str = "any", two_neighbor_rule: bool = False):
    """One red coarsening step (Admissible, Mark, Closure, Update)."""
    mesh = _normalized(mesh)
    m = len(_elements(mesh))
    mask = mark_mask(marked, m)
    if not mask.any():
        return mesh
    geom = provide_geometric_data(mesh)
    if isinstance(mesh, QuadMesh):
        adm = q_admissible(mesh, geom)
        adm = mark_filter(adm, mask, policy, m)
        adm = q_closure(mesh, geom, adm)
    else:
        adm = t_admissible(mesh, geom)
        adm = mark_filter(adm, mask, policy, m)
        adm = t_closure(mesh, geom, adm, two_neighbor_rule)
    return update_mesh(mesh, geom, adm)


def _normalized(mesh):
    if isinstance(mesh, QuadMesh):
        return mesh.replace(elements4=rotate_oldest_first(mesh.elements4))
    return mesh.replace(elements3=rotate_oldest_first(mesh.elements3))


def qcoarsen_r(mesh: QuadMesh, marked, policy: str = "any") -> QuadMesh:
    return coarsen_r(mesh, marked, policy)


def tcoarsen_r(mesh: TriMesh, marked, policy: str = "any", two_neighbor_rule: bool = False) -> TriMesh:
    return coarsen_r(mesh, marked, policy, two_neighbor_rule)


__all__ = [
    "AdmissibleSet", "q_admissible", "t_admissible", "mark_filter", "q_closure", "t_closure",
    "stencil_weights", "q_weight_sums", "merge_boundary", "compact_nodes", "update_mesh", "coarsen_r", "qcoarsen_r", "tcoarsen_r",
]
