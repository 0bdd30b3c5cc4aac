import numpy as np
import pytest

from helpers import (HistoryTree, elements_at, fig_irregular, fig_middleelement, fig_middlenode, fig_numbering,
                     quartet_centers, random_marks)
from meshcoarsen.checks import check_1_irregular, d_neighbor_violations
from meshcoarsen.coarsen_red import (AdmissibleSet, coarsen_r, mark_filter, q_admissible, q_closure, q_weight_sums,
                                     qcoarsen_r, t_admissible, t_closure, tcoarsen_r, update_mesh)
from meshcoarsen.geometry import provide_geometric_data
from meshcoarsen.mesh import (QuadMesh, normalize_oldest_first, same_mesh, structured_quad, total_area,
                              unit_square_quad, unit_square_tri)
from meshcoarsen.refine import qrefine_r, trefine_r


def uniform(mesh, refine, k):
    for _ in range(k):
        mesh = refine(mesh, "all")
    return mesh


def fig_tree() -> QuadMesh:
    """Unit square quartered, lower left and upper right quarters refined,
    then the top right grandchild refined."""
    mesh = qrefine_r(unit_square_quad(), "all")
    mesh = qrefine_r(mesh, elements_at(mesh, [(0.25, 0.25), (0.75, 0.75)]))
    mesh = qrefine_r(mesh, elements_at(mesh, [(0.875, 0.875)]))
    return normalize_oldest_first(mesh)


class TestQAdmissible:
    def test_initial_mesh_is_empty(self):
        assert len(q_admissible(structured_quad(3, 2))) == 0

    def test_figure_middlenode(self):
        assert quartet_centers(fig_middlenode(False), q_admissible(fig_middlenode(False))) == [(0.5, 0.5)]
        assert quartet_centers(fig_middlenode(True), q_admissible(fig_middlenode(True))) == [(0.75, 0.75)]

    def test_two_uniform_levels_match_history(self):
        mesh = unit_square_quad()
        tree = HistoryTree(mesh)
        for _ in range(2):
            mesh = qrefine_r(mesh, "all")
            tree.advance(mesh)
        adm = q_admissible(mesh)
        assert len(adm) == 4 and adm.as_sets() == tree.admissible(mesh)

    def test_quartet_order(self):
        mesh = qrefine_r(unit_square_quad(), "all")
        adm = q_admissible(mesh)
        q = adm.quartets[0]
        E = mesh.elements4[q]
        assert E[0, 0] == 0 and adm.middle[0] == 8
        # consecutive children share the midpoint: next child's fourth node
        # is the current child's second node
        assert (E[np.r_[1:4, 0], 3] == E[:, 1]).all()


class TestTAdmissible:
    def test_initial_mesh_is_empty(self):
        assert len(t_admissible(unit_square_tri())) == 0

    def test_figure_middleelement(self):
        mesh = fig_middleelement()
        adm = t_admissible(mesh)
        middles = sorted(sorted(map(tuple, mesh.coordinates[mesh.elements3[i]].tolist())) for i in adm.middle)
        assert middles == [[(0.0, 0.5), (0.5, 0.5), (0.5, 1.0)], [(0.75, 0.5), (0.75, 0.75), (1.0, 0.75)]]

    def test_two_uniform_levels_match_history(self):
        mesh = unit_square_tri()
        tree = HistoryTree(mesh)
        mesh = trefine_r(mesh, [0])
        tree.advance(mesh)
        mesh = trefine_r(mesh, [0, 1, 2, 3])
        tree.advance(mesh)
        adm = t_admissible(mesh)
        # the 1-irregular closure also refines the second initial triangle
        assert len(adm) == 5 and adm.as_sets() == tree.admissible(mesh)

    def test_quartet_layout(self):
        mesh = trefine_r(unit_square_tri(), [0])
        adm = t_admissible(mesh)
        (q,) = adm.quartets.tolist()
        assert q[3] == adm.middle[0]


class TestMarkFilter:
    adm = AdmissibleSet(np.array([[0, 1, 2, 3], [4, 5, 6, 7]]), np.array([9, 10]))

    def test_empty_marks(self):
        assert len(mark_filter(self.adm, [], n_elements=8)) == 0

    def test_any_of(self):
        assert mark_filter(self.adm, [5], "any", 8).as_sets() == {frozenset({4, 5, 6, 7})}

    def test_all_of(self):
        assert len(mark_filter(self.adm, [0, 1, 2], "all", 8)) == 0
        assert len(mark_filter(self.adm, [0, 1, 2, 3], "all", 8)) == 1

    def test_bad_policy(self):
        with pytest.raises(ValueError):
            mark_filter(self.adm, [0], "most", 8)


class TestQClosure:
    def test_uniform_mesh_keeps_everything(self):
        mesh = uniform(unit_square_quad(), qrefine_r, 3)
        g = provide_geometric_data(mesh)
        adm = q_admissible(mesh, g)
        assert (q_weight_sums(mesh, g, adm) >= 8).all()
        assert len(q_closure(mesh, g, adm)) == len(adm) == 16

    def test_figure_numbering(self):
        mesh = fig_numbering(last=True)
        g = provide_geometric_data(mesh)
        adm = q_admissible(mesh, g)
        sums = dict(zip([quartet_centers(mesh, adm.subset(np.array([i])))[0] for i in range(len(adm))],
                        q_weight_sums(mesh, g, adm).tolist()))
        assert sums[(2.25, 2.25)] == 5
        kept = quartet_centers(mesh, q_closure(mesh, g, adm))
        assert kept == sorted([(0.375, 2.625), (0.375, 0.375), (2.625, 0.375), (4.125, 0.375), (4.125, 2.625)])

    def test_figure_numbering_right(self):
        mesh = fig_numbering(last=False)
        g = provide_geometric_data(mesh)
        adm = q_admissible(mesh, g)
        sums = dict(zip([quartet_centers(mesh, adm.subset(np.array([i])))[0] for i in range(len(adm))],
                        q_weight_sums(mesh, g, adm).tolist()))
        assert sums[(2.25, 2.25)] == 6 and sums[(3.75, 2.25)] == 7
        assert quartet_centers(mesh, q_closure(mesh, g, adm)) == quartet_centers(mesh, adm)

    def test_figure_irregular(self):
        mesh = fig_irregular()
        g = provide_geometric_data(mesh)
        adm = q_admissible(mesh, g)
        assert quartet_centers(mesh, adm) == [(0.75, 0.75), (2.0625, 1.3125), (2.625, 1.125)]
        assert quartet_centers(mesh, q_closure(mesh, g, adm)) == [(2.0625, 1.3125)]


def brute_closure(mesh, adm, limit, quad):
    """Closure by direct enumeration: blocked if an element owns an
    irregular edge; then iteratively drop quartets whose stencil weight
    sum is at most ``limit``."""
    irr_long = {frozenset(r[:2]) for r in mesh.irregular.tolist()}
    hanging = set(mesh.irregular[:, 2].tolist())
    E = mesh.elements4 if quad else mesh.elements3
    c = mesh.coordinates
    lo, hi = c.min(axis=0), c.max(axis=0)

    def on_boundary(v):
        return bool(np.isclose(c[v], lo).any() or np.isclose(c[v], hi).any())

    def owns_irregular(e):
        row = E[e].tolist()
        return any(frozenset((row[i], row[(i + 1) % len(row)])) in irr_long for i in range(len(row)))

    alive = [q for q in range(len(adm)) if not any(owns_irregular(e) for e in adm.quartets[q])]

    def stencil(q):
        if quad:
            return E[adm.quartets[q], 1].tolist()
        return E[adm.middle[q]].tolist()

    while True:
        count = {}
        for q in alive:
            for v in stencil(q):
                count[v] = count.get(v, 0) + 1
        drop = [q for q in alive
                if sum(2 if (v in hanging or on_boundary(v) or count[v] >= 2) else 1 for v in stencil(q)) <= limit]
        if not drop:
            return {frozenset(adm.quartets[q].tolist()) for q in alive}
        alive = [q for q in alive if q not in drop]


class TestClosureOracle:
    @pytest.mark.parametrize("seed", range(25))
    def test_q_closure(self, seed):
        rng = np.random.default_rng(seed)
        mesh = unit_square_quad()
        for _ in range(rng.integers(2, 5)):
            mesh = qrefine_r(mesh, random_marks(rng, mesh.n_elements, 0.2, 0.7))
        mesh = normalize_oldest_first(mesh)
        g = provide_geometric_data(mesh)
        adm = q_admissible(mesh, g)
        assert q_closure(mesh, g, adm).as_sets() == brute_closure(mesh, adm, 5, True)

    @pytest.mark.parametrize("seed", range(25))
    def test_t_closure(self, seed):
        rng = np.random.default_rng(seed)
        mesh = unit_square_tri()
        for _ in range(rng.integers(2, 5)):
            mesh = trefine_r(mesh, random_marks(rng, mesh.n_elements, 0.2, 0.7), two_neighbor_rule=True)
        mesh = normalize_oldest_first(mesh)
        g = provide_geometric_data(mesh)
        adm = t_admissible(mesh, g)
        assert t_closure(mesh, g, adm, True).as_sets() == brute_closure(mesh, adm, 4, False)
        assert t_closure(mesh, g, adm, False).as_sets() == brute_closure(mesh, adm, -1, False)

    def test_lone_quartet_removed(self):
        # a level-2 quartet whose parent's neighbours are refined further:
        # two stencil nodes are interior, not hanging and not shared
        removed = 0
        for seed in range(40):
            rng = np.random.default_rng(seed)
            mesh = unit_square_tri()
            for _ in range(3):
                mesh = trefine_r(mesh, random_marks(rng, mesh.n_elements, 0.3, 0.8), two_neighbor_rule=True)
            mesh = normalize_oldest_first(mesh)
            g = provide_geometric_data(mesh)
            adm = t_admissible(mesh, g)
            removed += len(t_closure(mesh, g, adm, False)) - len(t_closure(mesh, g, adm, True))
        assert removed > 0

    def test_t_closure_blocks_irregular_owner(self):
        mesh = fig_middleelement()
        g = provide_geometric_data(mesh)
        adm = t_admissible(mesh, g)
        kept = t_closure(mesh, g, adm)
        assert len(adm) == 2 and len(kept) == 1
        (m,) = kept.middle.tolist()
        assert sorted(map(tuple, mesh.coordinates[mesh.elements3[m]].tolist())) == [(0.75, 0.5), (0.75, 0.75), (1.0, 0.75)]


class TestUpdate:
    def test_empty_adm(self):
        mesh = qrefine_r(unit_square_quad(), "all")
        g = provide_geometric_data(mesh)
        out = update_mesh(mesh, g, q_admissible(mesh, g).subset(np.zeros(1, bool)))
        assert same_mesh(out, mesh)

    def test_single_quartet(self):
        mesh = qrefine_r(unit_square_quad(), "all")
        g = provide_geometric_data(mesh)
        out = update_mesh(mesh, g, q_admissible(mesh, g))
        assert same_mesh(out, unit_square_quad())
        assert out.boundary.tolist() == unit_square_quad().boundary.tolist()

    def test_tree_figure(self):
        mesh = fig_tree()
        g = provide_geometric_data(mesh)
        adm = q_admissible(mesh, g)
        assert quartet_centers(mesh, adm) == [(0.25, 0.25), (0.875, 0.875)]
        lower = adm.subset(np.array([quartet_centers(mesh, adm.subset(np.array([i])))[0] == (0.25, 0.25)
                                     for i in range(len(adm))]))
        out = update_mesh(mesh, g, lower)
        assert out.n_elements == mesh.n_elements - 3
        assert elements_at(out, [(0.25, 0.25)])
        assert check_1_irregular(out)[0]


class TestCoarsenR:
    @pytest.mark.parametrize("k", [1, 2, 3, 4])
    def test_step_count_quad(self, k):
        mesh = uniform(unit_square_quad(), qrefine_r, k)
        steps = 0
        while not same_mesh(mesh, unit_square_quad()):
            mesh = qcoarsen_r(mesh, "all")
            steps += 1
        assert steps == k

    @pytest.mark.parametrize("k", [1, 2, 3, 4])
    def test_step_count_tri(self, k):
        mesh = uniform(unit_square_tri(), trefine_r, k)
        steps = 0
        while not same_mesh(mesh, unit_square_tri()):
            mesh = tcoarsen_r(mesh, "all")
            steps += 1
        assert steps == k

    def test_empty_marks_identity(self):
        mesh = qrefine_r(qrefine_r(unit_square_quad(), "all"), [0])
        assert same_mesh(qcoarsen_r(mesh, []), mesh)
        tri = trefine_r(unit_square_tri(), "all")
        assert same_mesh(tcoarsen_r(tri, []), tri)

    def test_marked_out_of_range(self):
        with pytest.raises(IndexError):
            qcoarsen_r(qrefine_r(unit_square_quad(), "all"), [4])

    def test_dispatch(self):
        tri = trefine_r(unit_square_tri(), "all")
        assert same_mesh(coarsen_r(tri, "all"), unit_square_tri())
        quad = qrefine_r(unit_square_quad(), "all")
        assert same_mesh(coarsen_r(quad, "all"), unit_square_quad())

    def test_local_coarsening_keeps_invariants(self):
        mesh = uniform(unit_square_quad(), qrefine_r, 3)
        cen = mesh.coordinates[mesh.elements4].mean(axis=1)
        marked = np.nonzero(np.hypot(*(cen - 0.5).T) < 0.3)[0]
        out = qcoarsen_r(mesh, marked)
        assert out.n_elements < mesh.n_elements
        assert check_1_irregular(out)[0] and len(d_neighbor_violations(out, 3)) == 0
        assert total_area(out) == 1.0
