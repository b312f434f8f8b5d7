"""Problem description layer: moment ambiguity set, polyhedral support,
piecewise-linear objective, LMI decision set, and the eigen-transform that
maps the native random vector to its isotropic coordinates.

Instances are immutable after validation and serialize to a versioned JSON
schema with exact float round-trip (shortest-repr floats).
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from . import linalg
from .errors import DimensionError, InputError

SCHEMA = "odr-dro/1"


@dataclass(frozen=True)
class MomentAmbiguity:
    """Mean in an ellipsoid of radius gamma1 around mu; second moment of the
    centered vector bounded by gamma2 * sigma."""

    mu: np.ndarray
    sigma: np.ndarray
    gamma1: float
    gamma2: float

    @property
    def m(self) -> int:
        return self.mu.shape[0]


@dataclass(frozen=True)
class SupportPolyhedron:
    """{xi : a_mat @ xi <= b_vec}; zero rows means the whole space."""

    a_mat: np.ndarray
    b_vec: np.ndarray

    @classmethod
    def whole_space(cls, m: int) -> "SupportPolyhedron":
        return cls(a_mat=np.zeros((0, m)), b_vec=np.zeros(0))

    @classmethod
    def box(cls, lo: np.ndarray, hi: np.ndarray) -> "SupportPolyhedron":
        m = len(lo)
        return cls(a_mat=np.vstack([np.eye(m), -np.eye(m)]),
                   b_vec=np.concatenate([hi, -np.asarray(lo)]))

    @property
    def n_rows(self) -> int:
        return self.a_mat.shape[0]


@dataclass(frozen=True)
class Piece:
    """One affine piece: value w0 @ x + d0 + (w @ x + d) @ xi."""

    w: np.ndarray    # (m, n)
    d: np.ndarray    # (m,)
    w0: np.ndarray   # (n,)
    d0: float

    def y_vec(self, x: np.ndarray) -> np.ndarray:
        return self.w @ x + self.d

    def y0(self, x: np.ndarray) -> float:
        return float(self.w0 @ x + self.d0)


@dataclass(frozen=True)
class PiecewiseLinearObjective:
    pieces: tuple[Piece, ...]

    @property
    def k(self) -> int:
        return len(self.pieces)


@dataclass(frozen=True)
class DecisionSet:
    """{x : lmi[0] + sum_i x_i lmi[i] >= 0} with symmetric tau x tau matrices.

    Affine equalities are encoded as paired diagonal inequalities; the
    assembly layer detects such pairs and restores them as equalities.
    """

    lmi: tuple[np.ndarray, ...]   # (n+1) matrices: constant first

    @property
    def tau(self) -> int:
        return self.lmi[0].shape[0]

    @property
    def n(self) -> int:
        return len(self.lmi) - 1

    def matrix_at(self, x: np.ndarray) -> np.ndarray:
        out = self.lmi[0].copy()
        for xi, mat in zip(x, self.lmi[1:]):
            out = out + xi * mat
        return out

    def is_diagonal(self) -> bool:
        return all(np.count_nonzero(m - np.diag(np.diag(m))) == 0 for m in self.lmi)

    @classmethod
    def nonneg_orthant(cls, n: int) -> "DecisionSet":
        mats = [np.zeros((n, n))]
        for i in range(n):
            m = np.zeros((n, n))
            m[i, i] = 1.0
            mats.append(m)
        return cls(lmi=tuple(mats))


@dataclass(frozen=True)
class DroInstance:
    ambiguity: MomentAmbiguity
    support: SupportPolyhedron
    objective: PiecewiseLinearObjective
    decisions: DecisionSet
    label: str = ""

    @property
    def m(self) -> int:
        return self.ambiguity.m

    @property
    def n(self) -> int:
        return self.decisions.n

    @property
    def k(self) -> int:
        return self.objective.k


@dataclass(frozen=True)
class Transform:
    """xi = half @ xi_iso + mu with half @ half.T == sigma."""

    factors: linalg.SpectralFactors
    half: np.ndarray

    @property
    def m(self) -> int:
        return self.half.shape[0]


def make_transform(ambiguity: MomentAmbiguity) -> Transform:
    sigma = ambiguity.sigma
    f = linalg.sym_eig(sigma)
    if f.lam[-1] <= 1e-10 * np.trace(sigma) / ambiguity.m:
        raise InputError("covariance matrix is not positive definite")
    return Transform(factors=f, half=f.u * f.sqrt_lam)


def evaluate_f(instance: DroInstance, x: np.ndarray, xi: np.ndarray) -> float:
    """Pointwise objective: max over the affine pieces."""
    x = np.asarray(x, dtype=float)
    xi = np.asarray(xi, dtype=float)
    if x.shape[0] != instance.n or xi.shape[0] != instance.m:
        raise DimensionError("x or xi has the wrong length")
    return max(p.y0(x) + p.y_vec(x) @ xi for p in instance.objective.pieces)


# ---------------------------------------------------------------------------
# decision-set row analysis (shared with the assembly layer)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DecisionRows:
    """Scalarized diagonal decision set: inequality rows a @ x + c >= 0 and
    equality rows (recovered from exactly opposite pairs) a @ x + c == 0.

    ``ineq_idx`` holds the originating diagonal position of each inequality
    row; ``eq_idx`` the (positive, negative) positions of each recovered pair,
    so duals can be mapped back onto the diagonal of the matrix multiplier.
    """

    ineq_a: np.ndarray   # (r, n)
    ineq_c: np.ndarray   # (r,)
    eq_a: np.ndarray     # (e, n)
    eq_c: np.ndarray     # (e,)
    ineq_idx: np.ndarray
    eq_idx: np.ndarray   # (e, 2)


def decision_rows(decisions: DecisionSet) -> DecisionRows | None:
    """Scalarize a diagonal LMI; None when the LMI is genuinely matrix-valued."""
    if not decisions.is_diagonal():
        return None
    tau, n = decisions.tau, decisions.n
    a = np.stack([np.diag(m) for m in decisions.lmi[1:]], axis=1) if n else np.zeros((tau, 0))
    c = np.diag(decisions.lmi[0]).copy()
    used = np.zeros(tau, dtype=bool)
    ineq, eq = [], []
    for i in range(tau):
        if used[i]:
            continue
        if not np.any(a[i]) and c[i] == 0.0:
            used[i] = True
            continue
        partner = -1
        for j in range(i + 1, tau):
            if used[j]:
                continue
            if np.array_equal(a[j], -a[i]) and c[j] == -c[i]:
                partner = j
                break
        if partner >= 0:
            used[i] = used[partner] = True
            eq.append((a[i], c[i], i, partner))
        else:
            used[i] = True
            ineq.append((a[i], c[i], i))
    return DecisionRows(
        ineq_a=np.array([r[0] for r in ineq]).reshape(len(ineq), n),
        ineq_c=np.array([r[1] for r in ineq]),
        eq_a=np.array([r[0] for r in eq]).reshape(len(eq), n),
        eq_c=np.array([r[1] for r in eq]),
        ineq_idx=np.array([r[2] for r in ineq], dtype=int),
        eq_idx=np.array([(r[2], r[3]) for r in eq], dtype=int).reshape(len(eq), 2),
    )


# ---------------------------------------------------------------------------
# validation
# ---------------------------------------------------------------------------

def validate(instance: DroInstance) -> list[str]:
    """Check all invariants; returns a list of diagnostics (empty means ok).

    The decision-set check solves a small feasibility cone program maximizing
    the smallest achievable LMI eigenvalue; paired-equality encodings sit on
    the boundary, so feasibility at level >= -1e-7 is accepted.
    """
    out: list[str] = []
    amb, sup, obj, dec = (instance.ambiguity, instance.support,
                          instance.objective, instance.decisions)
    m = amb.m
    if amb.sigma.shape != (m, m):
        out.append(f"ambiguity: sigma shape {amb.sigma.shape} != ({m}, {m})")
        return out
    if not np.allclose(amb.sigma, amb.sigma.T, atol=0.0):
        out.append("ambiguity: sigma is not stored symmetric")
    if amb.gamma1 < 0:
        out.append(f"ambiguity: gamma1 = {amb.gamma1} < 0")
    if amb.gamma2 < 1:
        out.append(f"ambiguity: gamma2 = {amb.gamma2} < 1")
    min_eig = linalg.min_eigenvalue(amb.sigma)
    if min_eig <= 1e-10 * np.trace(amb.sigma) / m:
        out.append(f"ambiguity: sigma not positive definite (min eig {min_eig:.3e})")
    if sup.a_mat.shape[1] != m or sup.a_mat.shape[0] != sup.b_vec.shape[0]:
        out.append("support: row/column counts inconsistent")
    n = dec.n
    for idx, p in enumerate(obj.pieces):
        if p.w.shape != (m, n) or p.d.shape != (m,) or p.w0.shape != (n,):
            out.append(f"objective: piece {idx} has inconsistent shapes")
    if obj.k < 1:
        out.append("objective: needs at least one piece")
    for idx, mat in enumerate(dec.lmi):
        if mat.shape != (dec.tau, dec.tau):
            out.append(f"decisions: lmi[{idx}] has shape {mat.shape}")
        elif not np.allclose(mat, mat.T, atol=0.0):
            out.append(f"decisions: lmi[{idx}] not symmetric")
    if out:
        return out
    level = _decision_feasibility_level(dec)
    if level is None:
        out.append("decisions: feasibility solve failed")
    elif level < -1e-7:
        out.append(f"decisions: no feasible point (best LMI level {level:.3e})")
    return out


def _decision_feasibility_level(dec: DecisionSet) -> float | None:
    """max t s.t. lmi(x) >= t I, t <= 1 (t* >= 0 iff the set is nonempty)."""
    import scipy.sparse as sp

    from . import ipm
    from .conic import (
        WORKING_TOLERANCES,
        BlockKind,
        ConeBlock,
        ConeSpec,
        ConicProblem,
        svec,
    )

    n, tau = dec.n, dec.tau
    rows = decision_rows(dec)
    c = np.zeros(n + 1)
    c[n] = -1.0
    if rows is not None:
        r = rows.ineq_a.shape[0]
        g1 = np.hstack([-rows.ineq_a, np.ones((r, 1))])
        h1 = rows.ineq_c.copy()
        g2 = np.zeros((1, n + 1))
        g2[0, n] = 1.0
        g = np.vstack([g1, g2])
        h = np.concatenate([h1, [1.0]])
        e = np.hstack([rows.eq_a, np.zeros((rows.eq_a.shape[0], 1))])
        he = -rows.eq_c
        cone = ConeSpec((ConeBlock(BlockKind.NONNEG, r + 1, "feas"),))
        prob = ConicProblem(c=c, g_cone=sp.csr_matrix(g), h_cone=h,
                            e_eq=sp.csr_matrix(e), h_eq=he, cone=cone)
    else:
        p = svec(np.eye(tau)).shape[0]
        g = np.zeros((p + 1, n + 1))
        for i in range(n):
            g[:p, i] = -svec(dec.lmi[i + 1])
        g[:p, n] = svec(np.eye(tau))
        g[p, n] = 1.0
        h = np.concatenate([svec(dec.lmi[0]), [1.0]])
        cone = ConeSpec((ConeBlock(BlockKind.PSD, tau, "lmi"),
                         ConeBlock(BlockKind.NONNEG, 1, "cap")))
        prob = ConicProblem(c=c, g_cone=sp.csr_matrix(g), h_cone=h,
                            e_eq=sp.csr_matrix((0, n + 1)), h_eq=np.zeros(0),
                            cone=cone)
    sol = ipm.solve(prob, WORKING_TOLERANCES)
    if sol.status.value == "PrimalInfeasible":
        return -np.inf
    if not sol.optimal:
        return None
    return -sol.objective


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def instance_to_dict(instance: DroInstance) -> dict:
    return {
        "schema": SCHEMA,
        "label": instance.label,
        "m": instance.m,
        "n": instance.n,
        "gamma1": instance.ambiguity.gamma1,
        "gamma2": instance.ambiguity.gamma2,
        "mu": instance.ambiguity.mu.tolist(),
        "sigma": instance.ambiguity.sigma.tolist(),
        "support": {
            "a": instance.support.a_mat.tolist(),
            "b": instance.support.b_vec.tolist(),
        },
        "pieces": [
            {"w": p.w.tolist(), "d": p.d.tolist(), "w0": p.w0.tolist(), "d0": p.d0}
            for p in instance.objective.pieces
        ],
        "decision_lmi": [m_.tolist() for m_ in instance.decisions.lmi],
    }


def instance_from_dict(data: dict) -> DroInstance:
    if data.get("schema") != SCHEMA:
        raise InputError(f"unsupported schema {data.get('schema')!r}")
    m, n = data["m"], data["n"]
    amb = MomentAmbiguity(
        mu=np.array(data["mu"], dtype=float).reshape(m),
        sigma=np.array(data["sigma"], dtype=float).reshape(m, m),
        gamma1=float(data["gamma1"]),
        gamma2=float(data["gamma2"]),
    )
    sup = SupportPolyhedron(
        a_mat=np.array(data["support"]["a"], dtype=float).reshape(-1, m),
        b_vec=np.array(data["support"]["b"], dtype=float),
    )
    pieces = tuple(
        Piece(
            w=np.array(p["w"], dtype=float).reshape(m, n),
            d=np.array(p["d"], dtype=float).reshape(m),
            w0=np.array(p["w0"], dtype=float).reshape(n),
            d0=float(p["d0"]),
        )
        for p in data["pieces"]
    )
    lmi = tuple(np.array(m_, dtype=float) for m_ in data["decision_lmi"])
    return DroInstance(
        ambiguity=amb, support=sup,
        objective=PiecewiseLinearObjective(pieces=pieces),
        decisions=DecisionSet(lmi=lmi), label=data.get("label", ""),
    )


def save_instance(instance: DroInstance, path: str) -> None:
    with open(path, "w") as fh:
        json.dump(instance_to_dict(instance), fh, indent=1)
        fh.write("\n")


def load_instance(path: str) -> DroInstance:
    with open(path) as fh:
        return instance_from_dict(json.load(fh))
