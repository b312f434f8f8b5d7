import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from odr_dro import linalg
from odr_dro.errors import DimensionError, InputError, RankError


def rand_sym(rng, n):
    m = rng.standard_normal((n, n))
    return m + m.T


class TestSymEig:
    def test_unordered_diagonal_sorted(self):
        f = linalg.sym_eig(np.diag([1.0, 3.0, 2.0]))
        assert np.allclose(f.lam, [3.0, 2.0, 1.0])

    def test_identity(self):
        f = linalg.sym_eig(np.eye(4))
        assert np.allclose(f.lam, np.ones(4))
        assert np.allclose(f.u @ f.u.T, np.eye(4), atol=1e-10)

    def test_reconstruction_random(self):
        rng = np.random.default_rng(0)
        a = rand_sym(rng, 5)
        f = linalg.sym_eig(a)
        err = np.linalg.norm(f.u @ np.diag(f.lam) @ f.u.T - a)
        assert err <= 1e-8 * np.linalg.norm(a)

    @pytest.mark.parametrize("n", [1, 2, 7, 23, 50])
    def test_roundtrip_dims(self, n):
        rng = np.random.default_rng(n)
        a = rand_sym(rng, n)
        f = linalg.sym_eig(a)
        assert np.all(np.diff(f.lam) <= 1e-12)
        err = np.linalg.norm(f.u @ np.diag(f.lam) @ f.u.T - a)
        assert err <= 1e-8 * np.linalg.norm(a)

    def test_nonfinite_rejected(self):
        with pytest.raises(InputError):
            linalg.sym_eig(np.array([[np.nan, 0.0], [0.0, 1.0]]))


class TestSvd:
    def test_tall_orthonormal(self):
        a = np.array([[1.0, 0.0], [0.0, 1.0], [0.0, 0.0]])
        f = linalg.svd(a)
        assert np.allclose(f.singular, [1.0, 1.0])

    def test_zero_matrix(self):
        f = linalg.svd(np.zeros((3, 2)))
        assert np.allclose(f.singular, 0.0)

    def test_reconstruction(self):
        rng = np.random.default_rng(1)
        a = rng.standard_normal((6, 3))
        f = linalg.svd(a)
        err = np.linalg.norm(f.left @ np.diag(f.singular) @ f.right.T - a)
        assert err <= 1e-8 * np.linalg.norm(a)
        assert np.allclose(f.left.T @ f.left, np.eye(3), atol=1e-10)
        assert np.allclose(f.right.T @ f.right, np.eye(3), atol=1e-10)


class TestMinEigenvalue:
    def test_diagonal(self):
        assert linalg.min_eigenvalue(np.diag([1.0, 3.0, 2.0])) == pytest.approx(1.0)

    def test_indefinite(self):
        assert linalg.min_eigenvalue(np.array([[0.0, 1.0], [1.0, 0.0]])) == pytest.approx(-1.0)

    def test_demo_body_matrix_is_psd(self):
        q = np.array(
            [
                [0.0911, -0.0558, -0.0354, -0.0558],
                [-0.0558, 0.1115, -0.0558, 0.1115],
                [-0.0354, -0.0558, 0.0911, -0.0558],
                [-0.0558, 0.1115, -0.0558, 0.1115],
            ]
        )
        assert linalg.min_eigenvalue(q) >= -5e-4  # entries rounded to 4 decimals


class TestGramSchmidtExtend:
    def test_single_vector_completes_basis(self):
        b = linalg.gram_schmidt_extend([np.array([1.0, 0.0, 0.0])], 3)
        assert b.shape == (3, 3)
        assert np.allclose(b[:, 0], [1.0, 0.0, 0.0])
        assert np.allclose(b.T @ b, np.eye(3), atol=1e-12)

    def test_plane_basis(self):
        b = linalg.gram_schmidt_extend(
            [np.array([1.0, 1.0, 0.0]), np.array([1.0, -1.0, 0.0])], 2
        )
        assert np.allclose(b.T @ b, np.eye(2), atol=1e-12)
        # span check: e3 orthogonal to both columns
        assert np.allclose(b[2, :], 0.0, atol=1e-12)

    def test_dependent_input_dropped(self):
        v = np.array([1.0, 2.0, 2.0])
        b = linalg.gram_schmidt_extend([v, 2 * v], 2)
        assert b.shape == (3, 2)
        assert abs(b[:, 1] @ v) <= 1e-10

    def test_target_too_large(self):
        with pytest.raises(DimensionError):
            linalg.gram_schmidt_extend([np.ones(2)], 3)

    @given(st.integers(min_value=0, max_value=2**32 - 1))
    @settings(max_examples=25, deadline=None)
    def test_orthonormal_property(self, seed):
        rng = np.random.default_rng(seed)
        m = int(rng.integers(2, 8))
        k = int(rng.integers(1, m + 1))
        vecs = [rng.standard_normal(m) for _ in range(int(rng.integers(1, k + 1)))]
        b = linalg.gram_schmidt_extend(vecs, k)
        assert np.allclose(b.T @ b, np.eye(k), atol=1e-10)


class TestProjectStiefel:
    def test_orthonormal_fixed_point(self):
        b = linalg.gram_schmidt_extend([np.array([1.0, 2.0, 3.0])], 2)
        assert np.allclose(linalg.project_stiefel(b), b, atol=1e-12)

    def test_scaled_identity_block(self):
        b = 2.0 * np.vstack([np.eye(2), np.zeros((2, 2))])
        assert np.allclose(linalg.project_stiefel(b), np.vstack([np.eye(2), np.zeros((2, 2))]))

    def test_random_projection_orthonormal(self):
        rng = np.random.default_rng(2)
        b = rng.standard_normal((6, 2))
        p = linalg.project_stiefel(b)
        assert np.allclose(p.T @ p, np.eye(2), atol=1e-10)

    def test_idempotent(self):
        rng = np.random.default_rng(3)
        b = rng.standard_normal((5, 3))
        p1 = linalg.project_stiefel(b)
        p2 = linalg.project_stiefel(p1)
        assert np.allclose(p1, p2, atol=1e-12)

    def test_rank_deficient(self):
        v = np.ones((4, 1))
        with pytest.raises(RankError):
            linalg.project_stiefel(np.hstack([v, v]))


class TestRandomCorrelation:
    def test_dimension_one(self):
        assert np.array_equal(linalg.random_correlation(1, 0), [[1.0]])

    def test_properties(self):
        a = linalg.random_correlation(5, 11)
        assert np.allclose(np.diag(a), 1.0, atol=1e-12)
        assert linalg.min_eigenvalue(a) >= -1e-10
        assert np.trace(a) == pytest.approx(5.0)

    def test_deterministic(self):
        a = linalg.random_correlation(7, 123)
        b = linalg.random_correlation(7, 123)
        assert np.array_equal(a, b)

    @pytest.mark.parametrize("n,seed", [(2, 0), (3, 5), (10, 42), (25, 9)])
    def test_many_sizes(self, n, seed):
        a = linalg.random_correlation(n, seed)
        assert np.allclose(np.diag(a), 1.0, atol=1e-12)
        assert linalg.min_eigenvalue(a) >= -1e-10


class TestSchurComplementLemma:
    """The three PSD predicates on a reduction map agree (block LMI,
    b b' <= I_m, b' b <= I_m1)."""

    def test_predicates_agree(self):
        rng = np.random.default_rng(4)
        for _ in range(200):
            m = int(rng.integers(1, 11))
            m1 = int(rng.integers(1, m + 1))
            b = rng.standard_normal((m, m1)) * rng.uniform(0.3, 1.5)
            block = np.block([[np.eye(m), b], [b.T, np.eye(m1)]])
            p1 = linalg.min_eigenvalue(block) >= -1e-9
            p2 = linalg.min_eigenvalue(np.eye(m) - b @ b.T) >= -1e-9
            p3 = linalg.min_eigenvalue(np.eye(m1) - b.T @ b) >= -1e-9
            assert p1 == p2 == p3


class TestCongruenceLemma:
    def test_psd_preserved_by_congruence(self):
        rng = np.random.default_rng(5)
        for _ in range(50):
            m = int(rng.integers(1, 8))
            n = int(rng.integers(1, 8))
            base = rng.standard_normal((m, m))
            y = rand_sym(rng, m)
            x = y + base @ base.T  # x >= y
            v = rng.standard_normal((m, n))
            assert linalg.min_eigenvalue(v.T @ (x - y) @ v) >= -1e-9
