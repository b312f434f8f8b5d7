"""Dense symmetric/rectangular linear-algebra kernels.

Everything downstream (model transforms, SDP assembly, ADMM updates,
bound constructions) is built on the handful of primitives in this module:
symmetric eigendecomposition, SVD, PSD tests, Gram-Schmidt basis extension,
nearest-orthonormal projection, and seeded random correlation matrices.

All functions are pure and operate on plain ``numpy`` arrays.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, InputError, RankError

# Residual-norm ratio below which a vector counts as dependent in
# gram_schmidt_extend.
GS_DROP_TOL = 1e-10

# Default absolute tolerance on the smallest eigenvalue of a unit-Frobenius
# scaled matrix for PSD tests.
PSD_TOL = 1e-8


@dataclass(frozen=True)
class SpectralFactors:
    """Eigendecomposition ``a = u @ diag(lam) @ u.T`` with ``lam`` nonincreasing."""

    u: np.ndarray
    lam: np.ndarray
    sqrt_lam: np.ndarray

    @property
    def dim(self) -> int:
        return self.lam.shape[0]


@dataclass(frozen=True)
class SvdFactors:
    """Thin SVD ``a = left @ diag(singular) @ right.T``, singular nonincreasing."""

    left: np.ndarray
    singular: np.ndarray
    right: np.ndarray


def _check_finite(a: np.ndarray, name: str) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if not np.all(np.isfinite(a)):
        raise InputError(f"{name} contains non-finite entries")
    return a


def symmetrize(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    return 0.5 * (a + a.T)


def sym_eig(a: np.ndarray) -> SpectralFactors:
    """Eigendecomposition of a symmetric matrix, eigenvalues sorted nonincreasing.

    Negative eigenvalues get ``sqrt_lam`` 0; callers that require a positive
    definite input should check beforehand.
    """
    a = _check_finite(a, "matrix")
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionError(f"expected square matrix, got shape {a.shape}")
    lam, u = np.linalg.eigh(symmetrize(a))
    # stable descending order keeps the LAPACK basis within tied eigenvalues
    order = np.argsort(-lam, kind="stable")
    lam = lam[order]
    u = u[:, order]
    return SpectralFactors(u=u, lam=lam, sqrt_lam=np.sqrt(np.maximum(lam, 0.0)))


def svd(a: np.ndarray) -> SvdFactors:
    """Thin SVD of a rectangular matrix."""
    a = _check_finite(a, "matrix")
    if a.ndim != 2:
        raise DimensionError(f"expected 2-d array, got shape {a.shape}")
    left, sing, right_t = np.linalg.svd(a, full_matrices=False)
    return SvdFactors(left=left, singular=sing, right=right_t.T)


def min_eigenvalue(a: np.ndarray) -> float:
    """Smallest eigenvalue of a symmetric matrix."""
    a = np.asarray(a, dtype=float)
    if a.shape == (0, 0):
        return np.inf
    return float(np.linalg.eigvalsh(symmetrize(a))[0])


def is_psd(a: np.ndarray, tol: float = PSD_TOL) -> bool:
    """PSD test with the matrix pre-scaled to unit Frobenius norm."""
    a = np.asarray(a, dtype=float)
    scale = np.linalg.norm(a)
    if scale == 0.0:
        return True
    return min_eigenvalue(a / scale) >= -tol


def gram_schmidt_extend(vectors, target_cols: int) -> np.ndarray:
    """Orthonormal basis containing span(vectors), extended to ``target_cols``.

    Near-dependent inputs (residual norm <= GS_DROP_TOL times the original
    norm) are dropped; the basis is completed with canonical directions
    e_1, e_2, ... so the result is deterministic.
    """
    vectors = [np.asarray(v, dtype=float).ravel() for v in vectors]
    if vectors:
        m = vectors[0].shape[0]
    else:
        raise DimensionError("need at least one vector to infer the dimension")
    if target_cols > m:
        raise DimensionError(f"target_cols={target_cols} exceeds dimension {m}")
    for v in vectors:
        if v.shape[0] != m:
            raise DimensionError("input vectors differ in length")
        _check_finite(v, "vector")

    cols: list[np.ndarray] = []

    def try_add(v: np.ndarray, drop_tol: float) -> None:
        norm0 = np.linalg.norm(v)
        if norm0 == 0.0:
            return
        r = v.copy()
        # two rounds of classical GS for numerical orthogonality
        for _ in range(2):
            for c in cols:
                r -= (c @ r) * c
        if np.linalg.norm(r) <= drop_tol * norm0:
            return
        cols.append(r / np.linalg.norm(r))

    for v in vectors:
        if len(cols) == m:
            break
        try_add(v, GS_DROP_TOL)
    if len(cols) > target_cols:
        raise DimensionError(
            f"inputs span {len(cols)} dimensions, more than target_cols={target_cols}"
        )
    for i in range(m):
        if len(cols) == target_cols:
            break
        try_add(np.eye(m)[:, i], 1e-6)
    if len(cols) != target_cols:  # pragma: no cover - cannot happen for target<=m
        raise RankError("failed to complete the orthonormal basis")
    return np.column_stack(cols)


def project_stiefel(b: np.ndarray) -> np.ndarray:
    """Nearest column-orthonormal matrix in Frobenius norm (polar factor)."""
    b = _check_finite(b, "matrix")
    if b.ndim != 2:
        raise DimensionError(f"expected 2-d array, got shape {b.shape}")
    f = svd(b)
    smax = f.singular[0] if f.singular.size else 0.0
    if smax == 0.0 or f.singular[-1] <= 1e-10 * smax:
        raise RankError("matrix is numerically rank-deficient; cannot project")
    return f.left @ f.right.T


def random_correlation(n: int, seed: int) -> np.ndarray:
    """Random correlation matrix: random spectrum scaled to trace n, unit
    diagonal enforced by Givens rotations (the Bendel-Mickey construction).

    Deterministic for a given seed; eigenvalues sum to n and the result is PSD.
    """
    if n < 1:
        raise DimensionError("n must be >= 1")
    if n == 1:
        return np.array([[1.0]])
    eig_ss, rot_ss = np.random.SeedSequence(seed).spawn(2)
    eig_rng = np.random.default_rng(eig_ss)
    rot_rng = np.random.default_rng(rot_ss)

    w = eig_rng.uniform(0.1, 1.0, size=n)
    lam = n * w / w.sum()

    g = rot_rng.standard_normal((n, n))
    q, r = np.linalg.qr(g)
    q = q * np.sign(np.diag(r))
    a = symmetrize(q @ np.diag(lam) @ q.T)

    # Rotate pairs (one diagonal entry below 1, one above) until the diagonal
    # is exactly 1. Each rotation fixes one entry, so n-1 sweeps suffice.
    for _ in range(2 * n):
        d = np.diag(a).copy()
        if np.all(np.abs(d - 1.0) <= 1e-13):
            break
        i = int(np.argmin(d))
        j = int(np.argmax(d))
        if d[i] > 1.0 - 1e-13 or d[j] < 1.0 + 1e-13:
            break
        aii, ajj, aij = a[i, i], a[j, j], a[i, j]
        disc = aij * aij - (aii - 1.0) * (ajj - 1.0)
        root = np.sqrt(max(disc, 0.0))
        t1 = (aij + root) / (ajj - 1.0)
        t2 = (aij - root) / (ajj - 1.0)
        t = t1 if abs(t1) <= abs(t2) else t2
        c = 1.0 / np.sqrt(1.0 + t * t)
        s = c * t
        gi = c * a[:, i] - s * a[:, j]
        gj = s * a[:, i] + c * a[:, j]
        a[:, i], a[:, j] = gi, gj
        gi = c * a[i, :] - s * a[j, :]
        gj = s * a[i, :] + c * a[j, :]
        a[i, :], a[j, :] = gi, gj
        a = symmetrize(a)
        a[i, i] = 1.0
    np.fill_diagonal(a, 1.0)
    return a
