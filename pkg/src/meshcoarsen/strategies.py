"""Registry of the seven refinement/coarsening strategies."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

from .coarsen_bisection import coarsen_nvb, coarsen_rgb
from .coarsen_red import qcoarsen_r, tcoarsen_r
from .coarsen_regular import coarsen_rb, coarsen_rg_quad, coarsen_rg_tri
from .mesh import MeshError, unit_square_quad, unit_square_tri
from .refine import qrefine_r, qrefine_rb, qrefine_rg, trefine_nvb, trefine_r, trefine_rg, trefine_rgb


@dataclass(frozen=True)
class Strategy:
    """Refine and coarsen operations of one strategy.

    Attributes
    ----------
    name : str
        Tag such as ``"t-r"`` or ``"q-rb"``.
    initial : callable
        Builds the default initial mesh (unit square).
    refine, coarsen : callable
        ``refine(mesh, marked)`` and ``coarsen(mesh, marked, policy)``.
    kind : str
        ``"r"``, ``"regular"`` or ``"bisection"``.
    """

    name: str
    initial: Callable
    refine: Callable
    coarsen: Callable
    kind: str
    quad: bool


def _t_coarsen_r(mesh, marked, policy="any"):
    return tcoarsen_r(mesh, marked, policy=policy)


def _nvb(mesh, marked, policy="any"):
    return coarsen_nvb(mesh, marked, policy=policy)


def _rgb(mesh, marked, policy="any"):
    return coarsen_rgb(mesh, marked, policy=policy)


STRATEGIES = {
    "t-r": Strategy("t-r", unit_square_tri, trefine_r, _t_coarsen_r, "r", False),
    "t-rg": Strategy("t-rg", unit_square_tri, trefine_rg, coarsen_rg_tri, "regular", False),
    "t-rgb": Strategy("t-rgb", unit_square_tri, trefine_rgb, _rgb, "bisection", False),
    "t-nvb": Strategy("t-nvb", unit_square_tri, trefine_nvb, _nvb, "bisection", False),
    "q-r": Strategy("q-r", unit_square_quad, qrefine_r, qcoarsen_r, "r", True),
    "q-rg": Strategy("q-rg", unit_square_quad, qrefine_rg, coarsen_rg_quad, "regular", True),
    "q-rb": Strategy("q-rb", unit_square_quad, qrefine_rb, coarsen_rb, "regular", True),
}


def get_strategy(name: str) -> Strategy:
    try:
        return STRATEGIES[name.lower()]
    except KeyError:
        raise MeshError(f"unknown strategy {name!r}; choose from {', '.join(STRATEGIES)}") from None


def coarsen_to_fixpoint(strategy: Strategy, mesh, max_steps: int = 1000):
    """Coarsen with every element marked until nothing changes.

    Returns
    -------
    mesh, steps : the fixpoint and the number of steps that changed the mesh.
    """
    from .mesh import same_mesh

    steps = 0
    for _ in range(max_steps):
        new = strategy.coarsen(mesh, "all")
        if same_mesh(new, mesh) and type(new) is type(mesh):
            return new, steps
        mesh = new
        steps += 1
    raise MeshError(f"no fixpoint after {max_steps} coarsening steps")


__all__ = ["Strategy", "STRATEGIES", "get_strategy", "coarsen_to_fixpoint"]
