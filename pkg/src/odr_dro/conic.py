"""Cone-program data structures: cone specs, svec/smat, problems, solutions.

Standard form used throughout the package::

    minimize    c @ u
    subject to  E @ u == h_eq                (free-variable equalities)
                v := h_cone - G @ u  in  K   (cone slacks)

where ``u`` is the free variable vector and ``K`` is an ordered product of
nonnegative, second-order, and PSD blocks (PSD stored as svec with sqrt(2)
scaled off-diagonals).  The assembled pair ``A_eq = [[G, I], [E, 0]]``,
``b_eq = [h_cone; h_eq]`` over the stacked variable ``z = (u, v)`` is the
equality form exposed by :func:`dump_problem`.

Named slices in :attr:`ConicProblem.var_map` recover the modelling variables
(x, s, lambda, q, Q, ...) from the free vector ``u``.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
import scipy.sparse as sp

from .errors import DimensionError

SQRT2 = np.sqrt(2.0)


# ---------------------------------------------------------------------------
# svec / smat
# ---------------------------------------------------------------------------

def svec_len(n: int) -> int:
    return n * (n + 1) // 2


def svec_indices(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Row/column indices (i >= j, column-major over j) of svec coordinates."""
    rows = np.concatenate([np.arange(j, n) for j in range(n)]) if n else np.array([], dtype=int)
    cols = np.concatenate([np.full(n - j, j) for j in range(n)]) if n else np.array([], dtype=int)
    return rows, cols


def svec(a: np.ndarray) -> np.ndarray:
    """Symmetric vectorization with sqrt(2)-scaled off-diagonals.

    Preserves inner products: svec(A) @ svec(B) == sum_ij A_ij B_ij.
    """
    a = np.asarray(a, dtype=float)
    n = a.shape[0]
    if a.shape != (n, n):
        raise DimensionError(f"expected square matrix, got {a.shape}")
    i, j = svec_indices(n)
    scale = np.where(i == j, 1.0, SQRT2)
    return a[i, j] * scale


def smat(v: np.ndarray) -> np.ndarray:
    """Inverse of :func:`svec`."""
    v = np.asarray(v, dtype=float).ravel()
    p = v.shape[0]
    n = int((np.sqrt(8 * p + 1) - 1) / 2 + 0.5)
    if svec_len(n) != p:
        raise DimensionError(f"length {p} is not a triangular number")
    i, j = svec_indices(n)
    a = np.zeros((n, n))
    vals = v / np.where(i == j, 1.0, SQRT2)
    a[i, j] = vals
    a[j, i] = vals
    return a


# ---------------------------------------------------------------------------
# Cones
# ---------------------------------------------------------------------------

class BlockKind(Enum):
    NONNEG = "nonneg"
    SOC = "soc"
    PSD = "psd"


@dataclass(frozen=True)
class ConeBlock:
    """One cone factor.

    ``size`` is the order of the block (vector length for nonneg/soc, matrix
    side for psd); ``dim`` is the number of slack coordinates it occupies.
    """

    kind: BlockKind
    size: int
    name: str = ""

    def __post_init__(self):
        if self.size < 1:
            raise DimensionError("cone block size must be >= 1")
        if self.kind is BlockKind.SOC and self.size < 2:
            raise DimensionError("second-order block needs dimension >= 2")

    @property
    def dim(self) -> int:
        return svec_len(self.size) if self.kind is BlockKind.PSD else self.size


@dataclass(frozen=True)
class ConeSpec:
    blocks: tuple[ConeBlock, ...]

    @property
    def dim(self) -> int:
        return sum(b.dim for b in self.blocks)

    def offsets(self) -> list[int]:
        out, acc = [], 0
        for b in self.blocks:
            out.append(acc)
            acc += b.dim
        return out

    def slices(self) -> list[slice]:
        return [slice(o, o + b.dim) for o, b in zip(self.offsets(), self.blocks)]


# ---------------------------------------------------------------------------
# Problem / solution
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SolverTolerances:
    primal: float = 1e-8
    dual: float = 1e-8
    gap: float = 1e-8
    max_iter: int = 200


# Tolerances used by the modelling layers for production solves.  Double
# precision caps achievable residuals near 1e-7 on degenerate or larger SDPs
# (the Schur-complement conditioning grows like 1/mu); 2e-7 keeps statuses
# robust while staying 5x below the 1e-6 granularity of downstream checks.
WORKING_TOLERANCES = SolverTolerances(primal=2e-7, dual=2e-7, gap=2e-7)


class SolveStatus(Enum):
    OPTIMAL = "Optimal"
    PRIMAL_INFEASIBLE = "PrimalInfeasible"
    DUAL_INFEASIBLE = "DualInfeasible"
    ITER_LIMIT = "IterLimit"
    NUMERICAL_FAILURE = "NumericalFailure"


@dataclass
class ConicProblem:
    """Cone program in the module's standard form; see the module docstring."""

    c: np.ndarray                      # (f,) objective over free variables
    g_cone: sp.csr_matrix              # (p, f) cone rows: h_cone - g_cone @ u in K
    h_cone: np.ndarray                 # (p,)
    e_eq: sp.csr_matrix                # (me, f) free equalities e_eq @ u = h_eq
    h_eq: np.ndarray                   # (me,)
    cone: ConeSpec
    var_map: dict = field(default_factory=dict)
    name: str = ""

    def __post_init__(self):
        f = self.c.shape[0]
        if self.g_cone.shape != (self.cone.dim, f):
            raise DimensionError("g_cone shape inconsistent with cone/objective")
        if self.h_cone.shape[0] != self.cone.dim:
            raise DimensionError("h_cone length != cone dimension")
        if self.e_eq.shape[1] != f or self.e_eq.shape[0] != self.h_eq.shape[0]:
            raise DimensionError("equality block shape mismatch")
        seen: list[tuple[int, int]] = []
        for name, sl in self.var_map.items():
            if sl.start < 0 or sl.stop > f:
                raise DimensionError(f"slice for {name!r} out of range")
            for a, b in seen:
                if max(a, sl.start) < min(b, sl.stop):
                    raise DimensionError(f"slice for {name!r} overlaps another slice")
            seen.append((sl.start, sl.stop))

    @property
    def n_free(self) -> int:
        return self.c.shape[0]

    def extract(self, u: np.ndarray, name: str) -> np.ndarray:
        return np.asarray(u)[self.var_map[name]]

    def a_eq(self) -> sp.csr_matrix:
        """Equality form over the stacked variable z = (u, v)."""
        p, me = self.cone.dim, self.e_eq.shape[0]
        top = sp.hstack([self.g_cone, sp.identity(p, format="csr")], format="csr")
        if me == 0:
            return top
        bottom = sp.hstack([self.e_eq, sp.csr_matrix((me, p))], format="csr")
        return sp.vstack([top, bottom], format="csr")

    def b_eq(self) -> np.ndarray:
        return np.concatenate([self.h_cone, self.h_eq])


@dataclass
class ConicSolution:
    status: SolveStatus
    u: np.ndarray                      # free variables (certificate ray if infeasible)
    slack: np.ndarray                  # cone slacks v
    z_dual: np.ndarray                 # dual of the cone rows
    y_dual: np.ndarray                 # dual of the free equalities
    objective: float
    primal_residual: float
    dual_residual: float
    gap_residual: float
    complementarity: float
    iterations: int
    wall_time: float

    @property
    def optimal(self) -> bool:
        return self.status is SolveStatus.OPTIMAL


# ---------------------------------------------------------------------------
# Debug dump (documented sparse triplet format)
# ---------------------------------------------------------------------------

def dump_problem(problem: ConicProblem, path: str) -> None:
    """Write a ConicProblem to a text file for cross-checking with other tools.

    Format (all indices 0-based)::

        problem <name>
        nfree <f>   ncone <p>   neq_total <rows of A_eq>
        cone <kind> <size> <name>        # one line per block, in order
        objective                        # one "i value" line per nonzero of c
        a_eq                             # "i j value" triplets of [[G, I], [E, 0]]
        b_eq                             # one value per row
        end
    """
    a = problem.a_eq().tocoo()
    b = problem.b_eq()
    lines = [f"problem {problem.name}"]
    lines.append(
        f"nfree {problem.n_free} ncone {problem.cone.dim} neq_total {a.shape[0]}"
    )
    for blk in problem.cone.blocks:
        lines.append(f"cone {blk.kind.value} {blk.size} {blk.name}")
    lines.append("objective")
    for i in np.nonzero(problem.c)[0]:
        lines.append(f"{i} {problem.c[i]!r}")
    lines.append("a_eq")
    for i, j, v in zip(a.row, a.col, a.data):
        lines.append(f"{i} {j} {v!r}")
    lines.append("b_eq")
    for v in b:
        lines.append(f"{v!r}")
    lines.append("end")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def timed() -> float:
    return time.perf_counter()
