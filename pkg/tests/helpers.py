"""Shared test utilities: geometry lookups, a history-tree oracle, figure
fixtures and random refine/coarsen drivers."""
from __future__ import annotations

from collections import defaultdict

import numpy as np

from meshcoarsen.mesh import QuadMesh, TriMesh, normalize_oldest_first, structured_quad
from meshcoarsen.refine import qrefine_r, trefine_r


def element_polygons(mesh):
    """List of (k, 2) coordinate arrays, in element-id order."""
    out = []
    for elements in mesh.element_arrays():
        out.extend(mesh.coordinates[row] for row in elements)
    return out


def elements_at(mesh, points, tol=1e-12):
    """Element ids whose vertex centroid equals one of ``points``."""
    cen = np.array([p.mean(axis=0) for p in element_polygons(mesh)])
    ids = []
    for p in np.atleast_2d(points):
        hit = np.nonzero(np.abs(cen - p).max(axis=1) <= tol)[0]
        assert hit.size == 1, f"no unique element centered at {p}"
        ids.append(int(hit[0]))
    return ids


def quartet_centers(mesh, adm):
    """Vertex centroid of the union of each quartet, as sorted tuples."""
    polys = element_polygons(mesh)
    out = []
    for q in adm.quartets.tolist():
        pts = np.vstack([polys[i] for i in q])
        lo, hi = pts.min(axis=0), pts.max(axis=0)
        out.append(tuple(float(v) for v in np.round(0.5 * (lo + hi), 12)))
    return sorted(out)


def point_in_convex(poly: np.ndarray, p: np.ndarray, eps: float = 1e-12) -> bool:
    a, b = poly, np.roll(poly, -1, axis=0)
    cross = (b[:, 0] - a[:, 0]) * (p[1] - a[:, 1]) - (b[:, 1] - a[:, 1]) * (p[0] - a[:, 0])
    return bool((cross >= -eps).all())


def _key(poly):
    return frozenset(map(tuple, np.round(poly, 14).tolist()))


class HistoryTree:
    """Refinement history rebuilt from consecutive meshes.

    An element that is new in a mesh is attached as a child of the element
    of the previous mesh that contains its centroid. The tree is built
    without looking at node numbering, so it is independent of the storage
    layout exploited by the coarsening code.
    """

    def __init__(self, mesh):
        self.parent = []
        self.children = defaultdict(list)
        self.leaf = {}
        self.poly = []
        for poly in element_polygons(mesh):
            self.leaf[_key(poly)] = self._node(None, poly)

    def _node(self, parent, poly):
        self.parent.append(parent)
        self.poly.append(poly)
        nid = len(self.parent) - 1
        if parent is not None:
            self.children[parent].append(nid)
        return nid

    def advance(self, mesh):
        polys = element_polygons(mesh)
        keys = [_key(p) for p in polys]
        gone = [nid for k, nid in self.leaf.items() if k not in set(keys)]
        new_leaf = {}
        for k, poly in zip(keys, polys):
            if k in self.leaf:
                new_leaf[k] = self.leaf[k]
                continue
            c = poly.mean(axis=0)
            owners = [nid for nid in gone if point_in_convex(self.poly[nid], c)]
            assert len(owners) == 1, "centroid not inside exactly one refined element"
            new_leaf[k] = self._node(owners[0], poly)
        self.leaf = new_leaf

    def admissible(self, mesh) -> set:
        """All-leaf sibling quartets, as sets of element ids of ``mesh``."""
        ids = {k: i for i, k in enumerate(_key(p) for p in element_polygons(mesh))}
        leaf_node = {nid: k for k, nid in self.leaf.items()}
        out = set()
        for kids in self.children.values():
            if len(kids) == 4 and all(c in leaf_node for c in kids):
                out.add(frozenset(ids[leaf_node[c]] for c in kids))
        return out


# ---------------------------------------------------------------------------
# figure fixtures


def refine_at(mesh, refine, points):
    return refine(mesh, elements_at(mesh, points))


def fig_middlenode(blocked: bool) -> QuadMesh:
    mesh = qrefine_r(structured_quad(1, 1), "all")
    if blocked:
        mesh = refine_at(mesh, qrefine_r, [(0.75, 0.75)])
    return normalize_oldest_first(mesh)


def fig_middleelement() -> TriMesh:
    c = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
    mesh = TriMesh(c, [[2, 0, 3], [0, 2, 1]])
    mesh = trefine_r(mesh, "all")
    # the child at node (1, 1) of the lower right triangle
    child = [i for i, p in enumerate(element_polygons(mesh))
             if _key(p) == _key(np.array([[1.0, 1.0], [0.5, 0.5], [1.0, 0.5]]))]
    return trefine_r(mesh, child)


def fig_irregular() -> QuadMesh:
    mesh = qrefine_r(structured_quad(2, 1, 3.0, 1.5), "all")
    mesh = refine_at(mesh, qrefine_r, [(2.625, 1.125), (1.875, 1.125)])
    mesh = refine_at(mesh, qrefine_r, [(2.0625, 1.3125)])
    return normalize_oldest_first(mesh)


def fig_numbering(last: bool = True) -> QuadMesh:
    mesh = qrefine_r(structured_quad(3, 2, 4.5, 3.0), "all")
    pts = [(0.375, 2.625), (0.375, 0.375), (2.625, 0.375), (4.125, 0.375)]
    if last:
        pts.append((4.125, 2.625))
    mesh = refine_at(mesh, qrefine_r, pts)
    return normalize_oldest_first(mesh)


# ---------------------------------------------------------------------------
# random drivers


def random_marks(rng, n, lo=0.05, hi=0.5):
    return np.nonzero(rng.random(n) < rng.uniform(lo, hi))[0]


def random_interleaving(strategy, rng, steps=8, max_elements=3000, callback=None):
    """Apply ``steps`` random refine or coarsen operations.

    ``callback(op, before, after)`` is called after each operation.
    """
    mesh = strategy.initial()
    for _ in range(steps):
        before = mesh
        if mesh.n_elements > max_elements or rng.random() < 0.4:
            op = "coarsen"
            mesh = strategy.coarsen(mesh, random_marks(rng, mesh.n_elements, 0.2, 1.0),
                                    policy=str(rng.choice(["any", "all"])))
        else:
            op = "refine"
            mesh = strategy.refine(mesh, random_marks(rng, mesh.n_elements))
        if callback is not None:
            callback(op, before, mesh)
    return mesh
