"""Concrete instance builders and seeded generators: multiproduct newsvendor
and distributionally robust CVaR.

Generators draw each array from its own split of a single 64-bit seed stream
(PCG64), so instances are reproducible across platforms; the label field
records the generator parameters.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, InputError
from .linalg import random_correlation, symmetrize
from .model import (
    DecisionSet,
    DroInstance,
    MomentAmbiguity,
    Piece,
    PiecewiseLinearObjective,
    SupportPolyhedron,
)

DEFAULT_GAMMA1 = 1.0
DEFAULT_GAMMA2 = 2.0


@dataclass(frozen=True)
class NewsvendorParams:
    """Wholesale (c), retail (v), and salvage (g) prices per product."""

    c: np.ndarray
    v: np.ndarray
    g: np.ndarray

    def __post_init__(self):
        if not (self.c.shape == self.v.shape == self.g.shape):
            raise DimensionError("price vectors differ in length")
        if not (np.all(self.v > self.c) and np.all(self.c > self.g) and np.all(self.g > 0)):
            raise InputError("prices must satisfy v > c > g > 0 elementwise")

    @property
    def m(self) -> int:
        return self.c.shape[0]


def standard_prices(m: int) -> NewsvendorParams:
    """Price ladder c_i = 0.1(4+i), v_i = 0.15(4+i), g_i = 0.05(4+i), i = 1..m."""
    i = np.arange(1, m + 1, dtype=float)
    return NewsvendorParams(c=0.1 * (4 + i), v=0.15 * (4 + i), g=0.05 * (4 + i))


@dataclass(frozen=True)
class CvarParams:
    m: int
    alpha: float = 0.05
    half_width: float = 2.0   # support box at mu +- half_width * std

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise InputError(f"alpha must lie in (0, 1), got {self.alpha}")


def build_newsvendor(params: NewsvendorParams, ambiguity: MomentAmbiguity,
                     support: SupportPolyhedron | None = None,
                     label: str = "newsvendor") -> DroInstance:
    """Two-piece ordering-cost objective over the nonnegative orthant.

    Cost max{(c-v)'x, (c-g)'x + (g-v)'xi}; decision x is the order quantity.
    """
    m = params.m
    if ambiguity.m != m:
        raise DimensionError("ambiguity dimension != number of products")
    zero = np.zeros((m, m))
    pieces = (
        Piece(w=zero, d=np.zeros(m), w0=params.c - params.v, d0=0.0),
        Piece(w=zero, d=params.g - params.v, w0=params.c - params.g, d0=0.0),
    )
    return DroInstance(
        ambiguity=ambiguity,
        support=support or SupportPolyhedron.whole_space(m),
        objective=PiecewiseLinearObjective(pieces=pieces),
        decisions=DecisionSet.nonneg_orthant(m),
        label=label,
    )


def cvar_decision_set(m: int) -> DecisionSet:
    """Simplex weights plus a free threshold: {(x, t) : x >= 0, sum x = 1}.

    The equality is carried as a pair of opposite diagonal rows so the set
    stays in the generic LMI form.
    """
    n = m + 1
    tau = m + 2
    mats = [np.zeros((tau, tau)) for _ in range(n + 1)]
    mats[0][m, m] = -1.0
    mats[0][m + 1, m + 1] = 1.0
    for i in range(m):
        mats[i + 1][i, i] = 1.0
        mats[i + 1][m, m] = 1.0
        mats[i + 1][m + 1, m + 1] = -1.0
    return DecisionSet(lmi=tuple(symmetrize(m_) for m_ in mats))


def build_cvar(params: CvarParams, ambiguity: MomentAmbiguity,
               support: SupportPolyhedron | None = None,
               label: str = "cvar") -> DroInstance:
    """Worst-case CVaR of portfolio cost x' xi at level 1 - alpha.

    Decision vector is (x, t) with t the variational threshold; the two
    pieces are t and (1 - 1/alpha) t + (1/alpha) x' xi.
    """
    m = params.m
    if ambiguity.m != m:
        raise DimensionError("ambiguity dimension != number of assets")
    n = m + 1
    w2 = np.zeros((m, n))
    w2[:, :m] = np.eye(m) / params.alpha
    w0_1 = np.zeros(n)
    w0_1[m] = 1.0
    w0_2 = np.zeros(n)
    w0_2[m] = 1.0 - 1.0 / params.alpha
    pieces = (
        Piece(w=np.zeros((m, n)), d=np.zeros(m), w0=w0_1, d0=0.0),
        Piece(w=w2, d=np.zeros(m), w0=w0_2, d0=0.0),
    )
    if support is None:
        std = np.sqrt(np.diag(ambiguity.sigma))
        support = SupportPolyhedron.box(ambiguity.mu - params.half_width * std,
                                        ambiguity.mu + params.half_width * std)
    return DroInstance(
        ambiguity=ambiguity, support=support,
        objective=PiecewiseLinearObjective(pieces=pieces),
        decisions=cvar_decision_set(m), label=label,
    )


# ---------------------------------------------------------------------------
# seeded generators
# ---------------------------------------------------------------------------

def _seeded_moments(m: int, seed: int, mu_range: tuple[float, float]):
    kids = np.random.SeedSequence(seed).spawn(3)
    mu = np.random.default_rng(kids[0]).uniform(*mu_range, size=m)
    std = np.random.default_rng(kids[1]).uniform(1.0, 2.0, size=m)
    corr_seed = int(kids[2].generate_state(1)[0])
    corr = random_correlation(m, corr_seed)
    sigma = symmetrize(corr * np.outer(std, std))
    return mu, std, sigma


def gen_newsvendor(m: int, seed: int, gamma1: float = DEFAULT_GAMMA1,
                   gamma2: float = DEFAULT_GAMMA2,
                   nonneg_demand: bool = False) -> DroInstance:
    """Random newsvendor instance: mu ~ U[0,10], std ~ U[1,2], seeded
    correlation core; support defaults to the whole space."""
    mu, _, sigma = _seeded_moments(m, seed, (0.0, 10.0))
    amb = MomentAmbiguity(mu=mu, sigma=sigma, gamma1=gamma1, gamma2=gamma2)
    support = None
    if nonneg_demand:
        support = SupportPolyhedron(a_mat=-np.eye(m), b_vec=np.zeros(m))
    return build_newsvendor(
        standard_prices(m), amb, support=support,
        label=f"newsvendor m={m} seed={seed} gamma1={gamma1} gamma2={gamma2}",
    )


def gen_cvar(m: int, seed: int, alpha: float = 0.05,
             gamma1: float = DEFAULT_GAMMA1,
             gamma2: float = DEFAULT_GAMMA2) -> DroInstance:
    """Random CVaR instance: mu ~ U[-5,5], std ~ U[1,2], box support at
    mu +- 2 std, seeded correlation core."""
    mu, std, sigma = _seeded_moments(m, seed, (-5.0, 5.0))
    amb = MomentAmbiguity(mu=mu, sigma=sigma, gamma1=gamma1, gamma2=gamma2)
    params = CvarParams(m=m, alpha=alpha)
    support = SupportPolyhedron.box(mu - 2.0 * std, mu + 2.0 * std)
    return build_cvar(
        params, amb, support=support,
        label=f"cvar m={m} seed={seed} alpha={alpha} gamma1={gamma1} gamma2={gamma2}",
    )
