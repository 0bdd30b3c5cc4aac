"""Invariant checkers and shape metrics."""
from __future__ import annotations

import math

import numpy as np
from scipy.spatial import cKDTree

from .geometry import EdgeIndex, number_edges
from .mesh import MeshError, QualityReport, signed_areas

MIDPOINT_RTOL = 1e-12


def _used_nodes(mesh) -> np.ndarray:
    arrays = [e.ravel() for e in mesh.element_arrays() if len(e)]
    if not arrays:
        return np.zeros(0, np.int64)
    return np.unique(np.concatenate(arrays))


def midpoint_nodes(mesh, edges: np.ndarray, rtol: float = MIDPOINT_RTOL) -> np.ndarray:
    """For each edge ``(i, j)`` return the element node located at its
    midpoint, or ``-1``."""
    edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    out = np.full(len(edges), -1, np.int64)
    used = _used_nodes(mesh)
    if len(edges) == 0 or len(used) == 0:
        return out
    c = mesh.coordinates
    scale = max(1.0, float(np.abs(c[used]).max()))
    tree = cKDTree(c[used])
    mid = 0.5 * (c[edges[:, 0]] + c[edges[:, 1]])
    dist, pos = tree.query(mid, k=1)
    hit = dist <= rtol * scale
    out[hit] = used[pos[hit]]
    return out


def check_1_irregular(mesh):
    """Check that every element edge carries at most one hanging node.

    Returns
    -------
    ok : bool
    violations : list of (i, j)
        Offending edges, as node pairs.
    """
    n = len(mesh.coordinates)
    edge2nodes, _ = number_edges(mesh.element_arrays(), n)
    irr = np.asarray(mesh.irregular, dtype=np.int64).reshape(-1, 3)
    index = EdgeIndex(edge2nodes, n)
    bad = set()

    recorded = {}
    for i, j, k in irr.tolist():
        key = (min(i, j), max(i, j))
        if key in recorded and recorded[key] != k:
            bad.add(key)
        recorded[key] = k
    if len(irr):
        long_idx = index.find(irr[:, 0], irr[:, 1])
        for row in np.nonzero(long_idx < 0)[0]:
            i, j, _ = irr[row]
            bad.add((min(i, j), max(i, j)))
        for half in ((0, 2), (2, 1)):
            h = irr[:, list(half)]
            h_idx = index.find(h[:, 0], h[:, 1])
            for row in np.nonzero(h_idx < 0)[0]:
                i, j, _ = irr[row]
                bad.add((min(i, j), max(i, j)))
            for row, (a, b) in enumerate(h.tolist()):
                if (min(a, b), max(a, b)) in recorded:
                    i, j, _ = irr[row]
                    bad.add((min(i, j), max(i, j)))

    mids = midpoint_nodes(mesh, edge2nodes)
    for e in np.nonzero(mids >= 0)[0]:
        key = (int(edge2nodes[e, 0]), int(edge2nodes[e, 1]))
        if recorded.get(key) != int(mids[e]):
            bad.add(key)
    return (not bad, sorted(bad))


def check_conforming(mesh) -> bool:
    """True iff the mesh has no hanging nodes."""
    if len(mesh.irregular):
        return False
    edge2nodes, _ = number_edges(mesh.element_arrays(), len(mesh.coordinates))
    return bool((midpoint_nodes(mesh, edge2nodes) < 0).all())


def hanging_edge_counts(mesh) -> np.ndarray:
    """Number of irregular edges (edges carrying a hanging node) per element.

    Only defined for single-kind meshes.
    """
    (elements,) = mesh.element_arrays()
    n = len(mesh.coordinates)
    edge2nodes, (el2ed,) = number_edges([elements], n)
    flag = np.zeros(len(edge2nodes), bool)
    if len(mesh.irregular):
        idx = EdgeIndex(edge2nodes, n).find(mesh.irregular[:, 0], mesh.irregular[:, 1])
        flag[idx[idx >= 0]] = True
    return flag[el2ed].sum(axis=1) if len(el2ed) else np.zeros(0, np.int64)


def d_neighbor_violations(mesh, d: int) -> np.ndarray:
    """Elements with ``d`` or more red-refined neighbours (hanging edges)."""
    return np.nonzero(hanging_edge_counts(mesh) >= d)[0]


def _triangle_angles(coordinates, elements):
    p = coordinates[elements]
    ang = np.empty((len(elements), 3))
    for k in range(3):
        u = p[:, (k + 1) % 3] - p[:, k]
        v = p[:, (k + 2) % 3] - p[:, k]
        cosv = np.sum(u * v, 1) / (np.linalg.norm(u, axis=1) * np.linalg.norm(v, axis=1))
        ang[:, k] = np.arccos(np.clip(cosv, -1.0, 1.0))
    return ang


def quality_metrics(mesh) -> QualityReport:
    """Shape-regularity measures.

    Triangle measures (minimum angle, diameter over inradius with
    inradius ``2|T| / perimeter``) are ``nan`` if the mesh has no triangles;
    quadrilateral measures likewise.
    """
    c = mesh.coordinates
    tris = getattr(mesh, "elements3", np.zeros((0, 3), np.int64))
    quads = getattr(mesh, "elements4", np.zeros((0, 4), np.int64))
    for elements in (tris, quads):
        area = signed_areas(c, elements)
        if len(elements) and (area <= 0).any():
            raise MeshError(f"degenerate element {int(np.nonzero(area <= 0)[0][0])}")
    min_angle = ratio = edge_ratio = max_cos = math.nan
    if len(tris):
        min_angle = float(_triangle_angles(c, tris).min())
        p = c[tris]
        lengths = np.linalg.norm(p - np.roll(p, -1, axis=1), axis=2)
        inradius = 2.0 * signed_areas(c, tris) / lengths.sum(1)
        ratio = float((lengths.max(1) / inradius).max())
    if len(quads):
        p = c[quads]
        sides = np.roll(p, -1, axis=1) - p
        lengths = np.linalg.norm(sides, axis=2)
        edge_ratio = float((lengths.max(1) / lengths.min(1)).max())
        prev = -np.roll(sides, 1, axis=1)
        cosv = np.sum(sides * prev, axis=2) / (lengths * np.roll(lengths, 1, axis=1))
        max_cos = float(np.abs(cosv).max())
    return QualityReport(min_angle, ratio, edge_ratio, max_cos)


def similarity_classes(mesh, tol: float = 1e-9) -> set:
    """Distinct triangle shapes, as sorted angle triples rounded to ``tol``."""
    tris = getattr(mesh, "elements3", np.zeros((0, 3), np.int64))
    if len(tris) == 0:
        return set()
    ang = np.sort(_triangle_angles(mesh.coordinates, tris), axis=1)
    keys = np.round(ang / tol).astype(np.int64)
    return set(map(tuple, keys.tolist()))


__all__ = [
    "check_1_irregular", "check_conforming", "hanging_edge_counts", "d_neighbor_violations",
    "quality_metrics", "similarity_classes", "midpoint_nodes",
]
