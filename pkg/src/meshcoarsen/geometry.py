"""Edge numbering and element/edge adjacency."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mesh import MeshError, NonManifoldError


@dataclass(frozen=True, eq=False)
class GeomData:
    """Derived neighbourhood information.

    Attributes
    ----------
    edge2nodes : (ne, 2) int array
        Undirected edges, smaller node index first, sorted lexicographically.
    element2edges : (m, k) int array or list of arrays
        Edge indices per element in traversal order; edge ``l`` joins local
        nodes ``l`` and ``l+1``. For mixed meshes this is a list
        ``[element3edges, element4edges]``.
    edge2elements : (ne, 2) int array
        Adjacent element identifiers; ``-1`` marks an absent neighbour.
    boundary2edges : (nb,) int array
        Edge index of each boundary entry (empty if the mesh has no
        boundary data).
    """

    edge2nodes: np.ndarray
    element2edges: object
    edge2elements: np.ndarray
    boundary2edges: np.ndarray

    @property
    def n_edges(self) -> int:
        return len(self.edge2nodes)


def edge_keys(a, b, n: int) -> np.ndarray:
    a = np.asarray(a, dtype=np.int64)
    b = np.asarray(b, dtype=np.int64)
    return np.minimum(a, b) * n + np.maximum(a, b)


class EdgeIndex:
    """Lookup of undirected edges by node pair."""

    def __init__(self, edge2nodes: np.ndarray, n_nodes: int):
        self.n = max(int(n_nodes), 1)
        self.keys = edge_keys(edge2nodes[:, 0], edge2nodes[:, 1], self.n)

    def find(self, a, b) -> np.ndarray:
        """Edge indices for node pairs, ``-1`` if absent."""
        k = edge_keys(a, b, self.n)
        if len(self.keys) == 0:
            return np.full(k.shape, -1, dtype=np.int64)
        pos = np.searchsorted(self.keys, k)
        pos = np.minimum(pos, len(self.keys) - 1)
        return np.where(self.keys[pos] == k, pos, -1)


def _local_edges(elements: np.ndarray):
    k = elements.shape[1]
    a = elements
    b = np.roll(elements, -1, axis=1)
    return a.reshape(-1), b.reshape(-1), k


def number_edges(element_arrays, n_nodes: int):
    """Number the edges of several element arrays jointly.

    Returns ``edge2nodes`` and one ``element2edges`` array per input.
    """
    n = max(int(n_nodes), 1)
    parts = []
    for elements in element_arrays:
        elements = np.asarray(elements, dtype=np.int64)
        if len(elements) == 0:
            parts.append((np.zeros(0, np.int64), np.zeros(0, np.int64), elements.shape[1]))
            continue
        k = elements.shape[1]
        for i in range(1, k):
            dup = np.nonzero((elements == np.roll(elements, -i, axis=1)).any(1))[0]
            if dup.size:
                raise MeshError(f"element {int(dup[0])} repeats a node: {elements[dup[0]].tolist()}")
        parts.append(_local_edges(elements))
    a = np.concatenate([p[0] for p in parts]) if parts else np.zeros(0, np.int64)
    b = np.concatenate([p[1] for p in parts]) if parts else np.zeros(0, np.int64)
    keys = edge_keys(a, b, n)
    uniq, inv = np.unique(keys, return_inverse=True)
    edge2nodes = np.column_stack([uniq // n, uniq % n]).astype(np.int64)
    out = []
    start = 0
    for (pa, _, k) in parts:
        cnt = len(pa)
        out.append(inv[start:start + cnt].reshape(-1, k))
        start += cnt
    return edge2nodes, out


def create_edge2elements(element2edges, n_edges: int) -> np.ndarray:
    """Edge to element adjacency, ``(n_edges, 2)`` with ``-1`` sentinels."""
    return create_edge2elements_adv(element2edges, n_edges)[0]


def create_edge2elements_adv(element2edges, n_edges: int):
    """Like :func:`create_edge2elements`, additionally returning the local
    edge position of each adjacency (``-1`` where absent)."""
    e2e = np.asarray(element2edges, dtype=np.int64)
    if e2e.size == 0:
        return (np.full((n_edges, 2), -1, np.int64), np.full((n_edges, 2), -1, np.int64))
    m, k = e2e.shape
    flat = e2e.ravel()
    if flat.min() < 0 or flat.max() >= n_edges:
        raise MeshError("edge index out of range in element2edges")
    elem = np.repeat(np.arange(m), k)
    loc = np.tile(np.arange(k), m)
    order = np.argsort(flat, kind="stable")
    fs = flat[order]
    counts = np.bincount(flat, minlength=n_edges)
    if counts.max(initial=0) > 2:
        bad = int(np.argmax(counts))
        raise NonManifoldError(f"edge {bad} is shared by {int(counts[bad])} elements")
    first = np.ones(len(fs), dtype=bool)
    first[1:] = fs[1:] != fs[:-1]
    edge2el = np.full((n_edges, 2), -1, np.int64)
    edge2loc = np.full((n_edges, 2), -1, np.int64)
    edge2el[fs[first], 0] = elem[order][first]
    edge2loc[fs[first], 0] = loc[order][first]
    edge2el[fs[~first], 1] = elem[order][~first]
    edge2loc[fs[~first], 1] = loc[order][~first]
    return edge2el, edge2loc


def provide_geometric_data(mesh) -> GeomData:
    """Number the edges of ``mesh`` and derive adjacency information.

    The numbering is deterministic: edges are sorted by their node pair.
    For mixed meshes element identifiers run over triangles first.
    """
    arrays = mesh.element_arrays()
    n = len(mesh.coordinates)
    edge2nodes, el2ed = number_edges(arrays, n)
    ne = len(edge2nodes)
    if len(arrays) == 1:
        element2edges = el2ed[0]
        edge2el = create_edge2elements(element2edges, ne)
    else:
        element2edges = el2ed
        # pad triangles to a common width to reuse the adjacency builder
        m3 = len(el2ed[0])
        e2e = np.full((m3 + len(el2ed[1]), 4), -1, np.int64)
        e2e[:m3, :3] = el2ed[0]
        e2e[m3:, :] = el2ed[1]
        flat = e2e.ravel()
        valid = flat >= 0
        elem = np.repeat(np.arange(len(e2e)), 4)[valid]
        flat = flat[valid]
        counts = np.bincount(flat, minlength=ne)
        if counts.max(initial=0) > 2:
            bad = int(np.argmax(counts))
            raise NonManifoldError(f"edge {bad} is shared by {int(counts[bad])} elements")
        order = np.argsort(flat, kind="stable")
        fs = flat[order]
        first = np.ones(len(fs), bool)
        first[1:] = fs[1:] != fs[:-1]
        edge2el = np.full((ne, 2), -1, np.int64)
        edge2el[fs[first], 0] = elem[order][first]
        edge2el[fs[~first], 1] = elem[order][~first]
    if mesh.boundary is not None and len(mesh.boundary):
        idx = EdgeIndex(edge2nodes, n).find(mesh.boundary[:, 0], mesh.boundary[:, 1])
        if (idx < 0).any():
            bad = int(np.nonzero(idx < 0)[0][0])
            raise MeshError(f"boundary entry {bad} is not an element edge")
        boundary2edges = idx
    else:
        boundary2edges = np.zeros(0, np.int64)
    return GeomData(edge2nodes, element2edges, edge2el, boundary2edges)


__all__ = [
    "GeomData", "EdgeIndex", "edge_keys", "number_edges", "create_edge2elements",
    "create_edge2elements_adv", "provide_geometric_data",
]
