"""Adaptive refinement and history-free coarsening of 2D triangular and
quadrilateral meshes.

Seven strategies are provided: red refinement with hanging nodes (``t-r``,
``q-r``), red-green (``t-rg``, ``q-rg``), red-blue (``q-rb``), newest vertex
bisection (``t-nvb``) and red-green-blue (``t-rgb``). Coarsening recovers
parent elements from the storage layout of the mesh alone.
"""
from .checks import (check_1_irregular, check_conforming, d_neighbor_violations, quality_metrics,
                     similarity_classes)
from .coarsen_bisection import coarsen_nvb, coarsen_rgb
from .coarsen_red import (AdmissibleSet, coarsen_r, mark_filter, q_admissible, q_closure, qcoarsen_r,
                          t_admissible, t_closure, tcoarsen_r, update_mesh)
from .coarsen_regular import (coarsen_rb, coarsen_rg_quad, coarsen_rg_tri, recoarsen_blue, recoarsen_green_quad,
                              recoarsen_green_tri, regularize_blue, regularize_green_quad, regularize_green_tri)
from .geometry import GeomData, create_edge2elements, create_edge2elements_adv, provide_geometric_data
from .io import MeshFileError, load_mesh, save_mesh
from .mesh import (MeshError, MixedMesh, NonManifoldError, QualityReport, QuadMesh, TriMesh,
                   normalize_oldest_first, same_mesh, structured_quad, total_area, unit_square_quad,
                   unit_square_tri, validate)
from .refine import qrefine_r, qrefine_rb, qrefine_rg, trefine_nvb, trefine_r, trefine_rg, trefine_rgb
from .strategies import STRATEGIES, coarsen_to_fixpoint, get_strategy

__version__ = "0.1.0"
