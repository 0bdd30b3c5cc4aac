"""Mesh data model.

Meshes are immutable value objects holding numpy arrays. Node indices are
0-based; a smaller index means an older node. Elements are stored
counterclockwise.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional, Union

import numpy as np


class MeshError(ValueError):
    """Structural problem with a mesh (bad indices, repeated nodes, ...)."""


class NonManifoldError(MeshError):
    """An edge is shared by more than two elements."""


def _as_index_array(a, width: int, name: str) -> np.ndarray:
    if a is None:
        arr = np.zeros((0, width), dtype=np.int64)
    else:
        arr = np.asarray(a, dtype=np.int64)
        if arr.size == 0:
            arr = np.zeros((0, width), dtype=np.int64)
    if arr.ndim != 2 or arr.shape[1] != width:
        raise MeshError(f"{name} must have shape (n, {width}), got {arr.shape}")
    arr = np.array(arr, dtype=np.int64, copy=True)
    arr.flags.writeable = False
    return arr


def _as_coordinates(c) -> np.ndarray:
    arr = np.array(c, dtype=np.float64, copy=True)
    if arr.size == 0:
        arr = np.zeros((0, 2))
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise MeshError(f"coordinates must have shape (n, 2), got {arr.shape}")
    arr.flags.writeable = False
    return arr


def _freeze(obj, names):
    for name, width in names:
        object.__setattr__(obj, name, _as_index_array(getattr(obj, name), width, name))
    object.__setattr__(obj, "coordinates", _as_coordinates(obj.coordinates))
    if obj.boundary is not None:
        object.__setattr__(obj, "boundary", _as_index_array(obj.boundary, 2, "boundary"))
    if obj.n0 is None:
        object.__setattr__(obj, "n0", len(obj.coordinates))
    object.__setattr__(obj, "n0", int(obj.n0))
    if not 0 <= obj.n0 <= len(obj.coordinates):
        raise MeshError(f"n0={obj.n0} exceeds the number of coordinates")


@dataclass(frozen=True, eq=False)
class TriMesh:
    coordinates: np.ndarray
    elements3: np.ndarray
    irregular: np.ndarray = None
    boundary: Optional[np.ndarray] = None
    n0: Optional[int] = None
    n_green: int = 0

    def __post_init__(self):
        _freeze(self, [("elements3", 3), ("irregular", 3)])
        if not 0 <= self.n_green <= len(self.elements3) or self.n_green % 2:
            raise MeshError(f"invalid n_green={self.n_green}")

    @property
    def n_elements(self) -> int:
        return len(self.elements3)

    def element_arrays(self):
        return [self.elements3]

    def replace(self, **kw) -> "TriMesh":
        return replace(self, **kw)


@dataclass(frozen=True, eq=False)
class QuadMesh:
    coordinates: np.ndarray
    elements4: np.ndarray
    irregular: np.ndarray = None
    boundary: Optional[np.ndarray] = None
    n0: Optional[int] = None
    n_blue: int = 0

    def __post_init__(self):
        _freeze(self, [("elements4", 4), ("irregular", 3)])
        if not 0 <= self.n_blue <= len(self.elements4) or self.n_blue % 3:
            raise MeshError(f"invalid n_blue={self.n_blue}")

    @property
    def n_elements(self) -> int:
        return len(self.elements4)

    def element_arrays(self):
        return [self.elements4]

    def replace(self, **kw) -> "QuadMesh":
        return replace(self, **kw)


@dataclass(frozen=True, eq=False)
class MixedMesh:
    """Triangles and quadrilaterals (Q-RG meshes).

    Element identifiers run over ``elements3`` first, then ``elements4``.
    """

    coordinates: np.ndarray
    elements3: np.ndarray
    elements4: np.ndarray
    boundary: Optional[np.ndarray] = None
    n0: Optional[int] = None
    n_green4: int = 0

    def __post_init__(self):
        _freeze(self, [("elements3", 3), ("elements4", 4)])
        if not 0 <= self.n_green4 <= len(self.elements4) or self.n_green4 % 2:
            raise MeshError(f"invalid n_green4={self.n_green4}")

    @property
    def irregular(self) -> np.ndarray:
        return np.zeros((0, 3), dtype=np.int64)

    @property
    def n_elements(self) -> int:
        return len(self.elements3) + len(self.elements4)

    def element_arrays(self):
        return [self.elements3, self.elements4]

    def replace(self, **kw) -> "MixedMesh":
        return replace(self, **kw)


AnyMesh = Union[TriMesh, QuadMesh, MixedMesh]


@dataclass(frozen=True)
class QualityReport:
    min_angle: float
    max_diam_inradius_ratio: float
    max_edge_ratio: float
    max_abs_cos: float


# ---------------------------------------------------------------------------
# helpers


def signed_areas(coordinates: np.ndarray, elements: np.ndarray) -> np.ndarray:
    """Signed polygon area of every row of ``elements`` (shoelace formula)."""
    if len(elements) == 0:
        return np.zeros(0)
    x = coordinates[elements, 0]
    y = coordinates[elements, 1]
    xn = np.roll(x, -1, axis=1)
    yn = np.roll(y, -1, axis=1)
    return 0.5 * np.sum(x * yn - xn * y, axis=1)


def total_area(mesh: AnyMesh) -> float:
    return float(sum(signed_areas(mesh.coordinates, e).sum() for e in mesh.element_arrays()))


def rotate_oldest_first(elements: np.ndarray) -> np.ndarray:
    """Cyclically rotate each row so that its minimal entry comes first."""
    elements = np.asarray(elements)
    if len(elements) == 0:
        return elements.copy()
    k = elements.shape[1]
    shift = np.argmin(elements, axis=1)
    idx = (shift[:, None] + np.arange(k)[None, :]) % k
    return np.take_along_axis(elements, idx, axis=1)


def normalize_oldest_first(mesh):
    """Rotate every element so the oldest (minimal index) node is first."""
    if isinstance(mesh, TriMesh):
        return mesh.replace(elements3=rotate_oldest_first(mesh.elements3))
    if isinstance(mesh, QuadMesh):
        return mesh.replace(elements4=rotate_oldest_first(mesh.elements4))
    raise TypeError("normalize_oldest_first expects a TriMesh or QuadMesh")


def validate(mesh: AnyMesh, tol: float = 1e-12) -> None:
    """Check the type invariants, raising :class:`MeshError` on violation."""
    n = len(mesh.coordinates)
    arrays = [("element", e) for e in mesh.element_arrays()]
    arrays += [("irregular", mesh.irregular)]
    if mesh.boundary is not None:
        arrays.append(("boundary", mesh.boundary))
    for name, arr in arrays:
        if arr.size and (arr.min() < 0 or arr.max() >= n):
            bad = int(np.nonzero((arr < 0).any(1) | (arr >= n).any(1))[0][0])
            raise MeshError(f"{name} row {bad} references a node outside 0..{n - 1}")
    for elements in mesh.element_arrays():
        k = elements.shape[1]
        for a in range(k):
            for b in range(a + 1, k):
                dup = np.nonzero(elements[:, a] == elements[:, b])[0]
                if dup.size:
                    raise MeshError(f"element {int(dup[0])} repeats node {int(elements[dup[0], a])}")
        area = signed_areas(mesh.coordinates, elements)
        bad = np.nonzero(area <= 0)[0]
        if bad.size:
            raise MeshError(f"element {int(bad[0])} is not counterclockwise (area {area[bad[0]]:g})")
    irr = mesh.irregular
    if len(irr):
        c = mesh.coordinates
        scale = max(1.0, float(np.abs(c).max()))
        mid = 0.5 * (c[irr[:, 0]] + c[irr[:, 1]])
        off = np.abs(mid - c[irr[:, 2]]).max(axis=1)
        bad = np.nonzero(off > tol * scale * 10)[0]
        if bad.size:
            raise MeshError(f"irregular row {int(bad[0])}: hanging node is not the edge midpoint")


def canonical_elements(mesh: AnyMesh) -> set:
    """Elements as a set of rotation-normalized tuples of coordinates."""
    out = set()
    c = mesh.coordinates
    for elements in mesh.element_arrays():
        for row in rotate_oldest_first(elements):
            out.add(tuple(tuple(c[i]) for i in row))
    return out


def same_mesh(a: AnyMesh, b: AnyMesh) -> bool:
    """True if both meshes have identical coordinates and element sets."""
    if a.coordinates.shape != b.coordinates.shape:
        return False
    if not np.array_equal(a.coordinates, b.coordinates):
        return False
    return _element_sets(a) == _element_sets(b)


def _element_sets(mesh):
    tris = getattr(mesh, "elements3", np.zeros((0, 3), np.int64))
    quads = getattr(mesh, "elements4", np.zeros((0, 4), np.int64))
    return (set(map(tuple, rotate_oldest_first(tris).tolist())),
            set(map(tuple, rotate_oldest_first(quads).tolist())))


def unit_square_quad() -> QuadMesh:
    c = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
    return QuadMesh(c, [[0, 1, 2, 3]], boundary=[[0, 1], [1, 2], [2, 3], [3, 0]], n0=4)


def unit_square_tri() -> TriMesh:
    """Two triangles whose reference edges (positions 1-2) are the diagonal."""
    c = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
    return TriMesh(c, [[2, 0, 1], [0, 2, 3]], boundary=[[0, 1], [1, 2], [2, 3], [3, 0]], n0=4)


def structured_quad(nx: int, ny: int, lx: float = 1.0, ly: float = 1.0) -> QuadMesh:
    """Tensor grid of ``nx * ny`` quadrilaterals on ``[0,lx] x [0,ly]``."""
    xs = np.linspace(0.0, lx, nx + 1)
    ys = np.linspace(0.0, ly, ny + 1)
    X, Y = np.meshgrid(xs, ys)
    coords = np.column_stack([X.ravel(), Y.ravel()])
    idx = np.arange((nx + 1) * (ny + 1)).reshape(ny + 1, nx + 1)
    quads = np.column_stack([
        idx[:-1, :-1].ravel(), idx[:-1, 1:].ravel(), idx[1:, 1:].ravel(), idx[1:, :-1].ravel()
    ])
    bnd = []
    bnd += [[idx[0, i], idx[0, i + 1]] for i in range(nx)]
    bnd += [[idx[j, nx], idx[j + 1, nx]] for j in range(ny)]
    bnd += [[idx[ny, i + 1], idx[ny, i]] for i in reversed(range(nx))]
    bnd += [[idx[j + 1, 0], idx[j, 0]] for j in reversed(range(ny))]
    return QuadMesh(coords, quads, boundary=bnd, n0=len(coords))


def empty_irregular() -> np.ndarray:
    return np.zeros((0, 3), dtype=np.int64)


__all__ = [
    "MeshError", "NonManifoldError", "TriMesh", "QuadMesh", "MixedMesh", "QualityReport",
    "signed_areas", "total_area", "rotate_oldest_first", "normalize_oldest_first", "validate",
    "canonical_elements", "same_mesh", "unit_square_quad", "unit_square_tri", "structured_quad",
]
