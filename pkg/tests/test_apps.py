import numpy as np
import pytest

from odr_dro import apps, model, reform
from odr_dro.errors import InputError


class TestPrices:
    def test_first_product(self):
        p = apps.standard_prices(3)
        assert p.c[0] == pytest.approx(0.5)
        assert p.v[0] == pytest.approx(0.75)
        assert p.g[0] == pytest.approx(0.25)

    def test_ordering_invariant(self):
        p = apps.standard_prices(50)
        assert np.all(p.v > p.c) and np.all(p.c > p.g) and np.all(p.g > 0)

    def test_bad_prices_rejected(self):
        with pytest.raises(InputError):
            apps.NewsvendorParams(c=np.array([1.0]), v=np.array([0.5]),
                                  g=np.array([0.1]))


class TestNewsvendorBuild:
    def test_piece_structure(self):
        inst = apps.gen_newsvendor(4, 0)
        p1, p2 = inst.objective.pieces
        prices = apps.standard_prices(4)
        assert np.allclose(p1.w, 0.0) and np.allclose(p1.d, 0.0)
        assert np.allclose(p1.w0, prices.c - prices.v) and p1.d0 == 0.0
        assert np.allclose(p2.w, 0.0)
        assert np.allclose(p2.d, prices.g - prices.v)
        assert np.allclose(p2.w0, prices.c - prices.g) and p2.d0 == 0.0

    def test_zero_order_zero_cost(self):
        # with no order, the salvage piece is nonpositive for any demand >= 0
        inst = apps.gen_newsvendor(3, 1)
        rng = np.random.default_rng(0)
        for _ in range(10):
            assert model.evaluate_f(inst, np.zeros(3), rng.uniform(0, 10, 3)) == 0.0

    def test_support_default_whole_space(self):
        assert apps.gen_newsvendor(3, 0).support.n_rows == 0

    def test_nonneg_demand_flag(self):
        inst = apps.gen_newsvendor(3, 0, nonneg_demand=True)
        assert inst.support.n_rows == 3

    def test_full_optimum_nonpositive(self):
        for seed in range(2):
            inst = apps.gen_newsvendor(6, seed)
            val, _ = reform.solve_full(inst)
            assert val <= 0.0


class TestCvarBuild:
    def test_dimensions(self):
        inst = apps.gen_cvar(5, 0)
        assert inst.n == 6               # (x, t)
        assert inst.support.n_rows == 10  # box rows

    def test_piece_formulas(self):
        alpha = 0.05
        inst = apps.gen_cvar(3, 1, alpha=alpha)
        p1, p2 = inst.objective.pieces
        assert p1.w0[3] == 1.0 and np.allclose(p1.w, 0.0)
        assert p2.w0[3] == pytest.approx(1.0 - 1.0 / alpha)
        assert np.allclose(p2.w[:, :3], np.eye(3) / alpha)

    def test_alpha_to_one_limit(self):
        inst = apps.build_cvar(apps.CvarParams(m=2, alpha=1.0 - 1e-9),
                               model.MomentAmbiguity(mu=np.zeros(2), sigma=np.eye(2),
                                                     gamma1=1.0, gamma2=2.0))
        assert abs(inst.objective.pieces[1].w0[2]) < 1e-8

    def test_alpha_out_of_range(self):
        with pytest.raises(InputError):
            apps.CvarParams(m=2, alpha=1.5)

    def test_mean_strictly_interior(self):
        inst = apps.gen_cvar(4, 3)
        slack = inst.support.b_vec - inst.support.a_mat @ inst.ambiguity.mu
        assert np.all(slack > 0)

    def test_symmetric_assets_symmetric_weights(self):
        amb = model.MomentAmbiguity(mu=np.array([1.0, 1.0]), sigma=np.eye(2),
                                    gamma1=1.0, gamma2=2.0)
        inst = apps.build_cvar(apps.CvarParams(m=2, alpha=0.05), amb)
        _, full = reform.solve_full(inst)
        assert full.x[0] == pytest.approx(0.5, abs=1e-6)
        assert full.x[1] == pytest.approx(0.5, abs=1e-6)

    def test_permutation_invariance(self):
        inst = apps.gen_cvar(4, 7)
        val, _ = reform.solve_full(inst)
        perm = np.array([2, 0, 3, 1])
        amb = inst.ambiguity
        amb_p = model.MomentAmbiguity(mu=amb.mu[perm],
                                      sigma=amb.sigma[np.ix_(perm, perm)],
                                      gamma1=amb.gamma1, gamma2=amb.gamma2)
        std = np.sqrt(np.diag(amb_p.sigma))
        support = model.SupportPolyhedron.box(amb_p.mu - 2 * std, amb_p.mu + 2 * std)
        inst_p = apps.build_cvar(apps.CvarParams(m=4, alpha=0.05), amb_p,
                                 support=support)
        val_p, _ = reform.solve_full(inst_p)
        assert val_p == pytest.approx(val, rel=1e-6, abs=1e-7)


class TestGenerators:
    def test_deterministic_instances(self, tmp_path):
        a = apps.gen_newsvendor(5, 42)
        b = apps.gen_newsvendor(5, 42)
        assert model.instance_to_dict(a) == model.instance_to_dict(b)
        c = apps.gen_cvar(5, 42)
        d = apps.gen_cvar(5, 42)
        assert model.instance_to_dict(c) == model.instance_to_dict(d)

    def test_seeds_differ(self):
        a = apps.gen_newsvendor(5, 1)
        b = apps.gen_newsvendor(5, 2)
        assert not np.array_equal(a.ambiguity.mu, b.ambiguity.mu)

    def test_correlation_core_unit_diagonal(self):
        inst = apps.gen_newsvendor(6, 5)
        sigma = inst.ambiguity.sigma
        std = np.sqrt(np.diag(sigma))
        core = sigma / np.outer(std, std)
        assert np.allclose(np.diag(core), 1.0, atol=1e-12)

    def test_moment_ranges(self):
        inst = apps.gen_newsvendor(30, 8)
        assert np.all(inst.ambiguity.mu >= 0) and np.all(inst.ambiguity.mu <= 10)
        cv = apps.gen_cvar(30, 8)
        assert np.all(cv.ambiguity.mu >= -5) and np.all(cv.ambiguity.mu <= 5)

    def test_generators_validate(self):
        for gen in (apps.gen_newsvendor, apps.gen_cvar):
            for seed in range(3):
                assert model.validate(gen(4, seed)) == []

    def test_label_provenance(self):
        inst = apps.gen_cvar(4, 9)
        assert "m=4" in inst.label and "seed=9" in inst.label
