"""Timing of all-marked coarsening steps."""
from __future__ import annotations

import csv
import gc
import statistics
import time
from pathlib import Path

import numpy as np

from .mesh import same_mesh
from .strategies import get_strategy

CSV_COLUMNS = ("step", "nodes", "elements", "seconds")


def bench_scaling(strategy: str, max_level: int, reps: int = 5, out=None) -> list[dict]:
    """Refine uniformly ``max_level`` times, then coarsen with every element
    marked until the mesh stops changing, timing each step.

    Each step is repeated ``reps`` times on the same input and the median
    wall-clock time (``time.perf_counter``) is reported. The garbage
    collector is paused while timing, as in :mod:`timeit`.

    Returns
    -------
    rows : list of dict
        One row per coarsening step with the columns of ``CSV_COLUMNS``;
        ``nodes`` and ``elements`` describe the step's input mesh.
    """
    if max_level < 0:
        raise ValueError("max_level must be non-negative")
    reps = max(int(reps), 1)
    s = get_strategy(strategy)
    mesh = s.initial()
    for _ in range(max_level):
        mesh = s.refine(mesh, "all")
    rows = []
    while True:
        times = []
        for _ in range(reps):
            gc_was_enabled = gc.isenabled()
            gc.disable()
            try:
                t = time.perf_counter()
                new = s.coarsen(mesh, "all")
                times.append(time.perf_counter() - t)
            finally:
                if gc_was_enabled:
                    gc.enable()
        if same_mesh(new, mesh):
            break
        rows.append(dict(step=len(rows) + 1, nodes=len(mesh.coordinates), elements=mesh.n_elements,
                         seconds=statistics.median(times)))
        mesh = new
    if out is not None:
        write_csv(rows, out)
    return rows


def write_csv(rows, out) -> None:
    with Path(out).open("w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=CSV_COLUMNS)
        w.writeheader()
        for r in rows:
            w.writerow({**r, "seconds": f"{r['seconds']:.6g}"})


def doubling_ratios(rows, min_nodes: int = 1000) -> np.ndarray:
    """Time growth per doubling of the node count between consecutive rows.

    For rows ``a`` (smaller) and ``b`` the value is
    ``(t_b / t_a) ** (1 / log2(n_b / n_a))``; linear scaling gives 2.
    Rows below ``min_nodes`` are ignored.
    """
    pts = sorted((r["nodes"], r["seconds"]) for r in rows if r["nodes"] >= min_nodes)
    out = []
    for (na, ta), (nb, tb) in zip(pts, pts[1:]):
        if nb > na:
            out.append((tb / ta) ** (1.0 / np.log2(nb / na)))
    return np.array(out)


__all__ = ["CSV_COLUMNS", "bench_scaling", "write_csv", "doubling_ratios"]
