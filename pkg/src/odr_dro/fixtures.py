"""Small closed-form demonstration instances used by tests and the CLI.

Two fixtures:

* ``cvar_box_demo`` - a 3-asset CVaR instance with exact mean (gamma1 = 0,
  gamma2 = 1) and box support; the worst-case CVaR saturates the support
  bound of the best asset, so the exact value is 2 with threshold 2.
* ``discrete_choice_demo`` - a 4-dimensional piecewise-linear instance whose
  decision set pins three coordinates and lets the second take one of two
  values; the instance exhibits a rank-2 optimal second-moment matrix and a
  strict gap between the reduced lower bound and the exact value.  Because
  the candidate set is discrete, it is shipped as a list of fixed-decision
  instances to be enumerated.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .apps import CvarParams, build_cvar
from .model import (
    DecisionSet,
    DroInstance,
    MomentAmbiguity,
    Piece,
    PiecewiseLinearObjective,
    SupportPolyhedron,
)


def cvar_box_demo() -> DroInstance:
    amb = MomentAmbiguity(
        mu=np.array([1.0, 2.0, 3.0]),
        sigma=np.diag([1.0, 3.0, 2.0]),
        gamma1=0.0,
        gamma2=1.0,
    )
    support = SupportPolyhedron.box(np.array([0.0, 1.0, 2.0]),
                                    np.array([2.0, 3.0, 4.0]))
    return build_cvar(CvarParams(m=3, alpha=0.05), amb, support=support,
                      label="cvar box demo m=3")


def fixed_decision_set(x_fixed: np.ndarray) -> DecisionSet:
    """{x : x == x_fixed} as paired diagonal rows."""
    n = x_fixed.shape[0]
    tau = 2 * n
    mats = [np.zeros((tau, tau)) for _ in range(n + 1)]
    for i in range(n):
        mats[0][i, i] = -x_fixed[i]
        mats[0][n + i, n + i] = x_fixed[i]
        mats[i + 1][i, i] = 1.0
        mats[i + 1][n + i, n + i] = -1.0
    return DecisionSet(lmi=tuple(mats))


@dataclass(frozen=True)
class DiscreteChoiceDemo:
    """The 4-d fixture: one instance per decision candidate, plus the
    candidates themselves; solve by enumerating and taking the minimum."""

    candidates: tuple[np.ndarray, ...]
    instances: tuple[DroInstance, ...]

    @property
    def optimal_candidate_index(self) -> int:
        return 0   # x = (1, 1, 1, 1) attains the exact value


def discrete_choice_demo() -> DiscreteChoiceDemo:
    m = 4
    w1 = np.zeros((m, m))
    w1[0, 0] = 1.0
    w1[3, 3] = 1.0
    w2 = np.zeros((m, m))
    w2[1, 1] = 1.0
    w2[3, 3] = 2.0
    w3 = np.zeros((m, m))
    w3[2, 2] = 1.0
    w3[3, 3] = 1.0
    amb = MomentAmbiguity(mu=np.ones(m), sigma=np.eye(m), gamma1=1.0, gamma2=2.0)
    support = SupportPolyhedron.whole_space(m)
    candidates = (np.array([1.0, 1.0, 1.0, 1.0]), np.array([1.0, -7.0, 1.0, 1.0]))
    instances = []
    for x_fixed in candidates:
        pieces = tuple(
            Piece(w=w, d=np.zeros(m), w0=np.zeros(m), d0=0.0)
            for w in (w1, w2, w3)
        )
        instances.append(
            DroInstance(
                ambiguity=amb, support=support,
                objective=PiecewiseLinearObjective(pieces=pieces),
                decisions=fixed_decision_set(x_fixed),
                label=f"discrete choice demo x2={x_fixed[1]:g}",
            )
        )
    return DiscreteChoiceDemo(candidates=candidates, instances=tuple(instances))
