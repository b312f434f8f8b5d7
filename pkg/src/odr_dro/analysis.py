"""Constructive bound theory: rank reduction of exact solutions, feasible
reduced points that reproduce the exact value, the a-priori gap bound for a
fixed reduction map, the single-direction heuristic map, and the relative gap
metrics used by the benchmark harness.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import linalg
from .errors import BoundUndefined, ContractError, DimensionError, InputError
from .model import DroInstance, make_transform
from .reform import FullSolution, ReducedSolution, lmi_residuals_full

RANK_TOL = 1e-6          # singular values below RANK_TOL * sigma_max do not count
FEAS_TOL = 1e-7


@dataclass(frozen=True)
class LowRankFactors:
    """Orthonormal basis v spanning the border vectors, with the exact
    solution's data expressed in that basis."""

    v: np.ndarray        # (m, K)
    y11: np.ndarray      # (K, K) PSD
    delta: np.ndarray    # (K,) coordinates of q
    nu: np.ndarray       # (K, K) columns are coordinates of the border vectors


@dataclass(frozen=True)
class GapBoundTerms:
    m_k: np.ndarray      # (K, m, m) residual outer products
    s_k: np.ndarray      # (K,) diagonal LMI corners
    p_cap: float
    s_cap: float
    bound: float


@dataclass(frozen=True)
class GapMetrics:
    gap1: float | None
    gap2: float | None
    interval_gap: float | None


def _border_vectors(instance: DroInstance, x, lam) -> np.ndarray:
    """g_k = F'(A' lam_k - y_k(x)) stacked as rows."""
    tr = make_transform(instance.ambiguity)
    a_t = instance.support.a_mat.T
    rows = []
    for k, p in enumerate(instance.objective.pieces):
        lam_k = lam[k] if lam.size else np.zeros(0)
        rows.append(tr.half.T @ ((a_t @ lam_k if lam_k.size else 0.0) - p.y_vec(x)))
    return np.stack(rows)


def numerical_rank(a: np.ndarray, tol: float = RANK_TOL) -> int:
    sing = np.linalg.svd(a, compute_uv=False)
    if sing.size == 0 or sing[0] == 0.0:
        return 0
    return int(np.sum(sing > tol * sing[0]))


def low_rank_reduce(instance: DroInstance,
                    sol: FullSolution) -> tuple[FullSolution, LowRankFactors]:
    """Rotate the second-moment part of an exact-form solution into the span
    of the border vectors, leaving (x, s, lam) unchanged.

    The reduced point stays feasible, has rank at most K, and never has a
    larger objective; for an optimal input the objective is preserved.
    """
    kk = instance.k
    if kk >= instance.m:
        raise DimensionError("rank reduction requires fewer pieces than dimensions")
    if lmi_residuals_full(instance, sol) < -FEAS_TOL:
        raise ContractError("input solution is not feasible within tolerance")
    g = _border_vectors(instance, sol.x, sol.lam)           # (K, m)
    v = linalg.gram_schmidt_extend(list(g), kk)             # (m, K)
    nu = (v.T @ g.T).T                                      # (K, K), rows nu_k
    delta = v.T @ sol.q
    y11 = v.T @ sol.q_big @ v
    q_new = v @ delta
    big_q_new = v @ y11 @ v.T
    gamma1, gamma2 = instance.ambiguity.gamma1, instance.ambiguity.gamma2
    objective = sol.s + gamma2 * np.trace(big_q_new) \
        + np.sqrt(gamma1) * np.linalg.norm(q_new)
    reduced = FullSolution(x=sol.x, s=sol.s, lam=sol.lam, q=q_new,
                           q_big=linalg.symmetrize(big_q_new), objective=objective)
    if objective > sol.objective + 1e-9 * (1.0 + abs(sol.objective)):
        raise ContractError("rank reduction increased the objective")
    if lmi_residuals_full(instance, reduced) < -FEAS_TOL:
        raise ContractError("rank reduction broke feasibility")
    return reduced, LowRankFactors(v=v, y11=linalg.symmetrize(y11),
                                   delta=delta, nu=nu)


def feasible_from_factors(instance: DroInstance, factors: LowRankFactors,
                          m1: int) -> tuple[ReducedSolution, np.ndarray]:
    """Feasible point of the fixed-map outer problem reproducing the exact
    value: map [v, completion], coordinates (delta; 0), block-diagonal body."""
    kk = instance.k
    if m1 < kk:
        raise DimensionError(f"m1={m1} must be at least the piece count {kk}")
    b = linalg.gram_schmidt_extend(list(factors.v.T), m1)
    q_r = np.concatenate([factors.delta, np.zeros(m1 - kk)])
    q_small = np.zeros((m1, m1))
    q_small[:kk, :kk] = factors.y11
    # x, s, lam are not stored in the factors; the caller pairs this with the
    # originating solution.  Stored here: the reduced decision variables.
    red = ReducedSolution(x=np.zeros(instance.n), s=np.nan,
                          lam=np.zeros((kk, instance.support.n_rows)),
                          q=q_r, q_small=q_small, u=np.zeros((kk, 0)),
                          u2=np.zeros((kk, 0)), objective=np.nan)
    return red, b


def reduced_point_objective(instance: DroInstance, sol: FullSolution,
                            factors: LowRankFactors, m1: int) -> float:
    """Objective of the constructed reduced point (equals the exact value)."""
    gamma1, gamma2 = instance.ambiguity.gamma1, instance.ambiguity.gamma2
    return sol.s + gamma2 * float(np.trace(factors.y11)) \
        + np.sqrt(gamma1) * float(np.linalg.norm(factors.delta))


def reduced_point_feasibility(instance: DroInstance, sol: FullSolution,
                              factors: LowRankFactors, m1: int) -> float:
    """Most negative LMI eigenvalue of the constructed reduced point at the
    completed map (0 when feasible)."""
    red, b = feasible_from_factors(instance, factors, m1)
    tr = make_transform(instance.ambiguity)
    fb = tr.half @ b
    worst = 0.0
    for k, p in enumerate(instance.objective.pieces):
        lam_k = sol.lam[k] if sol.lam.size else np.zeros(0)
        s_k = sol.s - p.y0(sol.x) - lam_k @ instance.support.b_vec \
            - p.y_vec(sol.x) @ instance.ambiguity.mu \
            + lam_k @ (instance.support.a_mat @ instance.ambiguity.mu)
        border = red.q + fb.T @ (instance.support.a_mat.T @ lam_k - p.y_vec(sol.x))
        block = np.block([[np.array([[s_k]]), 0.5 * border[None, :]],
                          [0.5 * border[:, None], red.q_small]])
        worst = min(worst, linalg.min_eigenvalue(block))
    return worst


def gap_bound(instance: DroInstance, b: np.ndarray,
              red: ReducedSolution) -> GapBoundTerms:
    """A-priori bound on (exact value - fixed-map lower bound) computed from
    the reduced optimum alone.

    The corners of the reduced PSD blocks are nonnegative at any feasible
    point, so a slightly negative computed corner is solver noise and is
    clamped to zero (the ``2 sqrt(P) - S`` branch remains valid there); a
    genuinely negative corner means the input was not a feasible reduced
    optimum and the bound is reported undefined.
    """
    b = np.atleast_2d(np.asarray(b, dtype=float))
    tr = make_transform(instance.ambiguity)
    gamma2 = instance.ambiguity.gamma2
    mu = instance.ambiguity.mu
    kk = instance.k
    m = instance.m
    m_k = np.zeros((kk, m, m))
    s_k = np.zeros(kk)
    p_cap = 0.0
    for k, p in enumerate(instance.objective.pieces):
        lam_k = red.lam[k] if red.lam.size else np.zeros(0)
        s_k[k] = red.s - p.y0(red.x) - lam_k @ instance.support.b_vec \
            - p.y_vec(red.x) @ mu \
            + lam_k @ (instance.support.a_mat @ mu)
        resid = b @ red.q + tr.half.T @ (instance.support.a_mat.T @ lam_k
                                         - p.y_vec(red.x))
        m_k[k] = np.outer(resid, resid)
        p_cap += (gamma2 / 4.0) * float(resid @ resid)
    s_cap = float(np.min(s_k))
    noise = 1e-6 * (1.0 + abs(red.s))
    if s_cap <= -noise or (p_cap <= 0.0 and s_cap < 0.0):
        raise BoundUndefined(f"gap bound undefined: smallest corner {s_cap:.3e} <= 0")
    s_eff = max(s_cap, 0.0)
    if np.sqrt(p_cap) < s_eff:
        bound = p_cap / s_eff
    else:
        bound = 2.0 * np.sqrt(p_cap) - s_eff
    return GapBoundTerms(m_k=m_k, s_k=s_k, p_cap=p_cap, s_cap=s_cap, bound=bound)


def heuristic_direction(instance: DroInstance, direction: np.ndarray,
                        m1: int) -> np.ndarray:
    """Reduction map whose first column maximizes the captured variability of
    direction' xi over all unit-trace projections; remaining columns complete
    the basis deterministically."""
    direction = np.asarray(direction, dtype=float).ravel()
    if np.linalg.norm(direction) == 0.0:
        raise InputError("direction must be nonzero")
    if not 1 <= m1 <= instance.m:
        raise DimensionError(f"m1={m1} out of range")
    tr = make_transform(instance.ambiguity)
    r = tr.half.T @ direction
    if np.linalg.norm(r) == 0.0:
        raise InputError("direction is annihilated by the transform")
    return linalg.gram_schmidt_extend([r / np.linalg.norm(r)], m1)


def gap_metrics(lower: float | None, upper: float | None,
                optimal: float | None = None) -> GapMetrics:
    """Relative gaps in percent; entries are None when undefined.

    gap1 = (optimal - lower) / |optimal|, gap2 = (upper - optimal) / |optimal|,
    interval = (upper - lower) / |upper|.  An infinite upper bound yields
    gap2 = None and interval = 100 (its limiting value).
    """
    gap1 = gap2 = interval = None
    if optimal is not None and lower is not None and np.isfinite(lower):
        gap1 = 100.0 * (optimal - lower) / abs(optimal) if optimal != 0.0 else None
    if optimal is not None and upper is not None and np.isfinite(upper):
        gap2 = 100.0 * (upper - optimal) / abs(optimal) if optimal != 0.0 else None
    if lower is not None and upper is not None:
        if np.isinf(upper) and np.isfinite(lower):
            interval = 100.0
        elif np.isfinite(upper) and upper != 0.0:
            interval = 100.0 * (upper - lower) / abs(upper)
    return GapMetrics(gap1=gap1, gap2=gap2, interval_gap=interval)
