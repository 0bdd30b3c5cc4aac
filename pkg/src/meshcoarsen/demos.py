"""Demo drivers: refinement along a moving circle and local coarsening."""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .mesh import same_mesh
from .strategies import get_strategy
from .svg import export_svg


def circle_marks(mesh, cx: float, cy: float, r: float) -> np.ndarray:
    """Ids of elements whose closure meets the circle line of radius ``r``.

    A convex element meets the circle iff its farthest vertex is at
    distance ``>= r`` and its nearest point is at distance ``<= r``.
    """
    out, offset = [], 0
    center = np.array([cx, cy])
    for elements in mesh.element_arrays():
        if len(elements):
            P = mesh.coordinates[elements] - center  # (m, k, 2)
            far = np.sqrt((P ** 2).sum(axis=2)).max(axis=1)
            near = _dist_to_polygon(P)
            out.append(offset + np.nonzero((far >= r) & (near <= r))[0])
        offset += len(elements)
    return np.concatenate(out) if out else np.zeros(0, np.int64)


def _dist_to_polygon(P: np.ndarray) -> np.ndarray:
    """Distance from the origin to each convex CCW polygon in ``P``."""
    A, B = P, np.roll(P, -1, axis=1)
    d = B - A
    t = np.clip(-(A * d).sum(axis=2) / np.maximum((d * d).sum(axis=2), 1e-300), 0.0, 1.0)
    proj = A + t[..., None] * d
    dist = np.sqrt((proj ** 2).sum(axis=2)).min(axis=1)
    inside = ((A[..., 0] * B[..., 1] - A[..., 1] * B[..., 0]) >= 0).all(axis=1)
    return np.where(inside, 0.0, dist)


def disk_marks(mesh, cx: float, cy: float, r: float) -> np.ndarray:
    """Ids of elements whose vertex centroid lies in the closed disk."""
    out, offset = [], 0
    for elements in mesh.element_arrays():
        if len(elements):
            cen = mesh.coordinates[elements].mean(axis=1)
            out.append(offset + np.nonzero(np.hypot(cen[:, 0] - cx, cen[:, 1] - cy) <= r)[0])
        offset += len(elements)
    return np.concatenate(out) if out else np.zeros(0, np.int64)


@dataclass
class DemoResult:
    """Meshes and per-step statistics of a demo run.

    ``records`` holds dicts with keys ``phase`` (``refine``/``coarsen``),
    ``step``, ``nodes``, ``elements`` and ``seconds``.
    """

    meshes: list
    refine_steps: int
    coarsen_steps: int
    records: list = field(default_factory=list)

    @property
    def final(self):
        return self.meshes[-1]


def demo_circle(strategy: str, steps: int, center=(0.3, 0.5), velocity=(0.05, 0.0), radius: float = 0.25,
                out_dir=None, max_coarsen: int = 1000) -> DemoResult:
    """Refine along a moving circle ``steps`` times, then coarsen with all
    elements marked until the mesh stops changing.

    The circle center after ``k`` steps is ``center + k * velocity``. If
    ``out_dir`` is given one SVG frame per mesh is written there.
    """
    s = get_strategy(strategy)
    mesh = s.initial()
    meshes = [mesh]
    rec = [dict(phase="initial", step=0, nodes=len(mesh.coordinates), elements=mesh.n_elements, seconds=0.0)]
    for k in range(steps):
        cx, cy = center[0] + k * velocity[0], center[1] + k * velocity[1]
        marked = circle_marks(mesh, cx, cy, radius)
        t = time.perf_counter()
        mesh = s.refine(mesh, marked)
        dt = time.perf_counter() - t
        meshes.append(mesh)
        rec.append(dict(phase="refine", step=k + 1, nodes=len(mesh.coordinates), elements=mesh.n_elements, seconds=dt))
    n_coarsen = 0
    if steps:
        for k in range(max_coarsen):
            t = time.perf_counter()
            new = s.coarsen(mesh, "all")
            dt = time.perf_counter() - t
            if same_mesh(new, mesh):
                break
            mesh = new
            n_coarsen += 1
            meshes.append(mesh)
            rec.append(dict(phase="coarsen", step=n_coarsen, nodes=len(mesh.coordinates),
                            elements=mesh.n_elements, seconds=dt))
    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        for i, m in enumerate(meshes):
            export_svg(m, out_dir / f"{s.name}_{i:03d}.svg")
    return DemoResult(meshes, steps, n_coarsen, rec)


def demo_local_coarsening(strategy: str, levels: int = 4, center=(0.5, 0.5), radius: float = 0.3,
                          coarsen_steps: int = 2, out=None):
    """Refine uniformly ``levels`` times, then coarsen ``coarsen_steps``
    times marking only elements with centroid in the disk.

    Returns the final mesh; writes an SVG to ``out`` when given.
    """
    s = get_strategy(strategy)
    mesh = s.initial()
    for _ in range(levels):
        mesh = s.refine(mesh, "all")
    for _ in range(coarsen_steps):
        marked = disk_marks(mesh, center[0], center[1], radius)
        if marked.size == 0:
            break
        mesh = s.coarsen(mesh, marked)
    if out is not None:
        export_svg(mesh, out)
    return mesh


__all__ = ["circle_marks", "disk_marks", "DemoResult", "demo_circle", "demo_local_coarsening"]
