import numpy as np
import pytest

from odr_dro import analysis, apps, fixtures, linalg, reform
from odr_dro.errors import BoundUndefined, InputError


@pytest.fixture(scope="module")
def discrete_demo():
    return fixtures.discrete_choice_demo()


@pytest.fixture(scope="module")
def demo_solution(discrete_demo):
    inst = discrete_demo.instances[0]
    val, sol = reform.solve_full(inst)
    return inst, val, sol


class TestLowRankReduce:
    def test_demo_rank_two(self, demo_solution):
        inst, val, sol = demo_solution
        red, factors = analysis.low_rank_reduce(inst, sol)
        assert analysis.numerical_rank(red.q_big) == 2
        assert red.objective == pytest.approx(val, abs=1e-6 * (1 + abs(val)))
        assert np.allclose(factors.v.T @ factors.v, np.eye(3), atol=1e-9)
        assert linalg.min_eigenvalue(factors.y11) >= -1e-8

    def test_reduction_is_fixed_point(self, demo_solution):
        inst, _, sol = demo_solution
        red1, _ = analysis.low_rank_reduce(inst, sol)
        red2, _ = analysis.low_rank_reduce(inst, red1)
        assert red2.objective == pytest.approx(red1.objective, abs=1e-10)
        assert np.allclose(red2.q_big, red1.q_big, atol=1e-10)
        assert np.allclose(red2.q, red1.q, atol=1e-10)

    @pytest.mark.parametrize("gen,seed", [(apps.gen_newsvendor, 0),
                                          (apps.gen_newsvendor, 1),
                                          (apps.gen_cvar, 0),
                                          (apps.gen_cvar, 1)])
    def test_random_instances_preserved(self, gen, seed):
        inst = gen(6, seed)
        val, sol = reform.solve_full(inst)
        red, _ = analysis.low_rank_reduce(inst, sol)
        assert red.objective == pytest.approx(val, abs=1e-6 * (1 + abs(val)))
        assert red.objective <= sol.objective + 1e-9 * (1 + abs(sol.objective))
        assert reform.lmi_residuals_full(inst, red) >= -1e-7
        assert analysis.numerical_rank(red.q_big) <= inst.k


class TestFeasibleFromFactors:
    def test_demo_reproduces_value(self, demo_solution):
        inst, val, sol = demo_solution
        _, factors = analysis.low_rank_reduce(inst, sol)
        for m1 in (3, 4):
            obj = analysis.reduced_point_objective(inst, sol, factors, m1)
            assert obj == pytest.approx(val, abs=1e-6 * (1 + abs(val)))
            assert analysis.reduced_point_feasibility(inst, sol, factors, m1) >= -1e-7

    def test_width_equal_pieces_keeps_basis(self, demo_solution):
        inst, _, sol = demo_solution
        _, factors = analysis.low_rank_reduce(inst, sol)
        red, b = analysis.feasible_from_factors(inst, factors, 3)
        assert np.allclose(b, factors.v, atol=1e-10)
        assert red.q.shape == (3,)

    def test_width_below_pieces_rejected(self, demo_solution):
        inst, _, sol = demo_solution
        _, factors = analysis.low_rank_reduce(inst, sol)
        with pytest.raises(Exception):
            analysis.feasible_from_factors(inst, factors, 2)

    def test_random_instance(self):
        inst = apps.gen_newsvendor(10, 5)
        val, sol = reform.solve_full(inst)
        _, factors = analysis.low_rank_reduce(inst, sol)
        obj = analysis.reduced_point_objective(inst, sol, factors, 4)
        assert obj == pytest.approx(val, abs=1e-6 * (1 + abs(val)))
        assert analysis.reduced_point_feasibility(inst, sol, factors, 4) >= -1e-7


class TestGapBound:
    def test_spanning_map_closes_the_gap(self, demo_solution):
        # a map spanning the border vectors certifies the exact value, so the
        # bound dominates a zero measured gap
        inst, val, sol = demo_solution
        _, factors = analysis.low_rank_reduce(inst, sol)
        bv = reform.certify_lb(inst, factors.v)
        terms = analysis.gap_bound(inst, bv.b, bv.solution)
        measured = val - bv.value
        assert abs(measured) <= 1e-6 * (1 + abs(val))
        assert terms.bound >= measured - 1e-8

    def test_bound_dominates_measured_gap(self):
        rng = np.random.default_rng(2)
        for gen, seed in ((apps.gen_newsvendor, 0), (apps.gen_cvar, 1),
                          (apps.gen_newsvendor, 2), (apps.gen_cvar, 3)):
            inst = gen(8, seed)
            full, _ = reform.solve_full(inst)
            b = linalg.project_stiefel(rng.standard_normal((8, 2)))
            bv = reform.certify_lb(inst, b)
            terms = analysis.gap_bound(inst, bv.b, bv.solution)
            assert full - bv.value <= terms.bound + 1e-8
            assert np.all(terms.s_k > -1e-6 * (1 + abs(bv.solution.s)))

    def test_demo_inequality(self, discrete_demo):
        v = np.array([[0.7071, -0.5774, -0.1543], [0.0, 0.5774, -0.3086],
                      [0.0, 0.0, 0.9258], [0.7071, 0.5774, 0.1543]])
        inst = discrete_demo.instances[1]
        bv = reform.certify_lb(inst, v)
        terms = analysis.gap_bound(inst, bv.b, bv.solution)
        assert terms.bound >= 5.9882 - 5.1139

    def test_undefined_when_corner_nonpositive(self):
        inst = apps.gen_newsvendor(4, 0)
        bv = reform.certify_lb(inst, np.eye(4)[:, :2])
        red = bv.solution
        import dataclasses
        forced = dataclasses.replace(red, s=red.s - 1e6)
        with pytest.raises(BoundUndefined):
            analysis.gap_bound(inst, bv.b, forced)


class TestHeuristicDirection:
    def test_one_dimensional(self):
        inst = apps.gen_newsvendor(1, 0)
        b = analysis.heuristic_direction(inst, np.array([1.0]), 1)
        assert abs(abs(b[0, 0]) - 1.0) <= 1e-12

    def test_zero_direction_rejected(self):
        inst = apps.gen_newsvendor(3, 0)
        with pytest.raises(InputError):
            analysis.heuristic_direction(inst, np.zeros(3), 2)

    def test_scaling_invariance(self):
        inst = apps.gen_newsvendor(6, 1)
        d = inst.objective.pieces[1].d
        b1 = analysis.heuristic_direction(inst, d, 2)
        b2 = analysis.heuristic_direction(inst, 3.7 * d, 2)
        assert np.allclose(np.abs(b1), np.abs(b2), atol=1e-9)
        v1 = reform.certify_lb(inst, b1).value
        v2 = reform.certify_lb(inst, b2).value
        assert v2 == pytest.approx(v1, abs=1e-9 * (1 + abs(v1)))

    def test_first_column_captures_all_energy(self):
        inst = apps.gen_newsvendor(6, 2)
        from odr_dro.model import make_transform
        d = inst.objective.pieces[1].d
        r = make_transform(inst.ambiguity).half.T @ d
        b_star = analysis.heuristic_direction(inst, d, 2)
        captured = float(r @ b_star @ b_star.T @ r)
        assert captured == pytest.approx(float(r @ r), rel=1e-10)
        rng = np.random.default_rng(0)
        for _ in range(1000):
            b = np.linalg.qr(rng.standard_normal((6, 2)))[0]
            assert float(r @ b @ b.T @ r) <= captured + 1e-9

    def test_beats_leading_basis_on_average(self):
        # single-direction map aligned with the cost direction vs the plain
        # leading basis, small margin demanded only on the mean
        diffs = []
        for seed in range(5):
            inst = apps.gen_newsvendor(10, seed)
            d = inst.objective.pieces[1].d
            heur = reform.certify_lb(inst, analysis.heuristic_direction(inst, d, 2)).value
            pca = reform.certify_lb(inst, np.eye(10)[:, :2]).value
            diffs.append(heur - pca)
        assert np.mean(diffs) > 0


class TestGapMetrics:
    def test_all_zero(self):
        gm = analysis.gap_metrics(-3.0, -3.0, -3.0)
        assert gm.gap1 == pytest.approx(0.0)
        assert gm.gap2 == pytest.approx(0.0)
        assert gm.interval_gap == pytest.approx(0.0)

    def test_reference_gap_values(self):
        gm = analysis.gap_metrics(lower=-1318.79, upper=None, optimal=-1286.49)
        assert round(gm.gap1, 2) == 2.51
        gm2 = analysis.gap_metrics(lower=-1286.55, upper=-1272.91)
        assert round(gm2.interval_gap, 2) == 1.07

    def test_infinite_upper(self):
        gm = analysis.gap_metrics(lower=-5.0, upper=np.inf, optimal=-4.0)
        assert gm.gap2 is None
        assert gm.interval_gap == 100.0

    def test_zero_denominator(self):
        gm = analysis.gap_metrics(lower=-1.0, upper=1.0, optimal=0.0)
        assert gm.gap1 is None and gm.gap2 is None


class TestEigenWitness:
    """A rank-bounded PSD matrix violates the cap exactly when its leading
    eigenbasis projection does (the constructive witness direction)."""

    def test_both_directions(self):
        rng = np.random.default_rng(11)
        for _ in range(100):
            m = int(rng.integers(2, 8))
            m1 = int(rng.integers(1, m + 1))
            rank = int(rng.integers(1, m1 + 1))
            g = rng.standard_normal((m, rank))
            x = g @ g.T * rng.uniform(0.05, 2.0)
            f = linalg.sym_eig(x)
            bw = f.u[:, :m1]
            capped_full = linalg.min_eigenvalue(np.eye(m) - x) >= -1e-9
            capped_proj = linalg.min_eigenvalue(np.eye(m1) - bw.T @ x @ bw) >= -1e-9
            assert capped_full == capped_proj
