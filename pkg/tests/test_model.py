import json

import numpy as np
import pytest

from odr_dro import apps, fixtures, model
from odr_dro.linalg import random_correlation, symmetrize


def diag_ambiguity(m, gamma1=1.0, gamma2=2.0):
    return model.MomentAmbiguity(mu=np.ones(m), sigma=np.eye(m),
                                 gamma1=gamma1, gamma2=gamma2)


class TestValidate:
    def test_demo_instances_ok(self):
        demo = fixtures.discrete_choice_demo()
        for inst in demo.instances:
            assert model.validate(inst) == []

    def test_cvar_demo_ok(self):
        assert model.validate(fixtures.cvar_box_demo()) == []

    def test_singular_sigma_rejected(self):
        amb = model.MomentAmbiguity(mu=np.zeros(2),
                                    sigma=np.array([[1.0, 1.0], [1.0, 1.0]]),
                                    gamma1=1.0, gamma2=2.0)
        inst = apps.build_newsvendor(apps.standard_prices(2), amb)
        diags = model.validate(inst)
        assert any("positive definite" in d for d in diags)

    def test_gamma2_below_one_rejected(self):
        amb = diag_ambiguity(2, gamma2=0.5)
        inst = apps.build_newsvendor(apps.standard_prices(2), amb)
        assert any("gamma2" in d for d in model.validate(inst))

    def test_gamma1_negative_rejected(self):
        amb = diag_ambiguity(2, gamma1=-0.1)
        inst = apps.build_newsvendor(apps.standard_prices(2), amb)
        assert any("gamma1" in d for d in model.validate(inst))

    def test_empty_decision_set_detected(self):
        # x >= 1 and x <= 0 simultaneously
        lmi0 = np.diag([-1.0, 0.0])
        lmi1 = np.diag([1.0, -1.0])
        dec = model.DecisionSet(lmi=(lmi0, lmi1))
        amb = diag_ambiguity(1)
        inst = model.DroInstance(
            ambiguity=amb, support=model.SupportPolyhedron.whole_space(1),
            objective=model.PiecewiseLinearObjective(
                pieces=(model.Piece(w=np.zeros((1, 1)), d=np.zeros(1),
                                    w0=np.zeros(1), d0=0.0),)),
            decisions=dec)
        assert any("feasible" in d for d in model.validate(inst))


class TestTransform:
    def test_identity(self):
        tr = model.make_transform(diag_ambiguity(4))
        assert np.allclose(tr.half @ tr.half.T, np.eye(4), atol=1e-10)

    def test_sorted_eigenvalues(self):
        amb = model.MomentAmbiguity(mu=np.zeros(3), sigma=np.diag([1.0, 3.0, 2.0]),
                                    gamma1=0.0, gamma2=1.0)
        tr = model.make_transform(amb)
        assert np.allclose(tr.factors.lam, [3.0, 2.0, 1.0])

    def test_random_reconstruction(self):
        rng = np.random.default_rng(0)
        std = rng.uniform(1.0, 2.0, 5)
        sigma = symmetrize(random_correlation(5, 3) * np.outer(std, std))
        amb = model.MomentAmbiguity(mu=np.zeros(5), sigma=sigma, gamma1=1.0, gamma2=2.0)
        tr = model.make_transform(amb)
        assert np.linalg.norm(tr.half @ tr.half.T - sigma) <= 1e-8 * np.linalg.norm(sigma)

    def test_non_pd_raises(self):
        amb = model.MomentAmbiguity(mu=np.zeros(2),
                                    sigma=np.array([[1.0, 1.0], [1.0, 1.0]]),
                                    gamma1=1.0, gamma2=2.0)
        with pytest.raises(Exception):
            model.make_transform(amb)


class TestEvaluateF:
    def test_newsvendor_hand_values(self):
        amb = model.MomentAmbiguity(mu=np.array([1.0]), sigma=np.eye(1),
                                    gamma1=1.0, gamma2=2.0)
        params = apps.NewsvendorParams(c=np.array([0.5]), v=np.array([0.75]),
                                       g=np.array([0.25]))
        inst = apps.build_newsvendor(params, amb)
        assert model.evaluate_f(inst, np.array([1.0]), np.array([2.0])) == pytest.approx(-0.25)
        assert model.evaluate_f(inst, np.array([1.0]), np.array([0.0])) == pytest.approx(0.25)

    def test_single_zero_piece(self):
        amb = diag_ambiguity(2)
        piece = model.Piece(w=np.zeros((2, 2)), d=np.zeros(2), w0=np.zeros(2), d0=0.0)
        inst = model.DroInstance(
            ambiguity=amb, support=model.SupportPolyhedron.whole_space(2),
            objective=model.PiecewiseLinearObjective(pieces=(piece,)),
            decisions=model.DecisionSet.nonneg_orthant(2))
        assert model.evaluate_f(inst, np.ones(2), np.array([5.0, -3.0])) == 0.0

    def test_cvar_origin(self):
        inst = fixtures.cvar_box_demo()
        x = np.array([1 / 3, 1 / 3, 1 / 3, 0.0])   # t = 0
        assert model.evaluate_f(inst, x, np.zeros(3)) == pytest.approx(0.0)

    def test_convexity_in_xi(self):
        rng = np.random.default_rng(1)
        inst = apps.gen_newsvendor(4, 0)
        for _ in range(100):
            x = rng.uniform(0, 5, 4)
            xi1, xi2 = rng.normal(size=4), rng.normal(size=4)
            lhs = model.evaluate_f(inst, x, 0.5 * (xi1 + xi2))
            rhs = 0.5 * (model.evaluate_f(inst, x, xi1) + model.evaluate_f(inst, x, xi2))
            assert lhs <= rhs + 1e-12


class TestTransformSupportConsistency:
    def test_facet_membership_matches(self):
        inst = apps.gen_cvar(4, 2)
        tr = model.make_transform(inst.ambiguity)
        a_mat, b_vec = inst.support.a_mat, inst.support.b_vec
        rng = np.random.default_rng(3)
        for _ in range(50):
            xi_iso = rng.normal(size=4)
            xi = tr.half @ xi_iso + inst.ambiguity.mu
            native = bool(np.all(a_mat @ xi <= b_vec + 1e-12))
            mapped = bool(np.all(a_mat @ (tr.half @ xi_iso) <= b_vec - a_mat @ inst.ambiguity.mu + 1e-12))
            assert native == mapped


class TestSerialization:
    def test_roundtrip_exact(self, tmp_path):
        inst = apps.gen_cvar(5, 9)
        path = tmp_path / "inst.json"
        model.save_instance(inst, str(path))
        loaded = model.load_instance(str(path))
        assert np.array_equal(loaded.ambiguity.mu, inst.ambiguity.mu)
        assert np.array_equal(loaded.ambiguity.sigma, inst.ambiguity.sigma)
        assert np.array_equal(loaded.support.a_mat, inst.support.a_mat)
        for p, q in zip(loaded.objective.pieces, inst.objective.pieces):
            assert np.array_equal(p.w, q.w) and np.array_equal(p.d, q.d)
            assert np.array_equal(p.w0, q.w0) and p.d0 == q.d0
        for a, b in zip(loaded.decisions.lmi, inst.decisions.lmi):
            assert np.array_equal(a, b)
        assert loaded.label == inst.label

    def test_serialized_bytes_stable(self, tmp_path):
        inst = apps.gen_newsvendor(4, 11)
        p1, p2 = tmp_path / "a.json", tmp_path / "b.json"
        model.save_instance(inst, str(p1))
        model.save_instance(apps.gen_newsvendor(4, 11), str(p2))
        assert p1.read_bytes() == p2.read_bytes()

    def test_schema_guard(self):
        with pytest.raises(Exception):
            model.instance_from_dict({"schema": "other/9"})

    def test_json_floats_roundtrip(self):
        inst = apps.gen_cvar(3, 5)
        data = json.loads(json.dumps(model.instance_to_dict(inst)))
        back = model.instance_from_dict(data)
        assert np.array_equal(back.ambiguity.sigma, inst.ambiguity.sigma)


class TestDecisionRows:
    def test_cvar_set_scalarizes(self):
        dec = apps.cvar_decision_set(3)
        rows = model.decision_rows(dec)
        assert rows is not None
        assert rows.ineq_a.shape == (3, 4)       # x_i >= 0
        assert rows.eq_a.shape == (1, 4)         # sum x = 1
        assert rows.eq_c[0] == -1.0

    def test_orthant(self):
        rows = model.decision_rows(model.DecisionSet.nonneg_orthant(4))
        assert rows.ineq_a.shape == (4, 4)
        assert rows.eq_a.shape == (0, 4)

    def test_nondiagonal_returns_none(self):
        lmi0 = np.eye(2)
        lmi1 = np.array([[0.0, 1.0], [1.0, 0.0]])
        assert model.decision_rows(model.DecisionSet(lmi=(lmi0, lmi1))) is None
