"""Translate a DroInstance into concrete cone programs.

One assembler serves every formulation (the exact reformulation, the
truncated-eigenbasis reduction, the three fixed-reduction bound problems, and
the ADMM subproblems built on top of them); they differ only in the factor
multiplying the reduction map and in the equality block, so solution
extraction stays formulation-agnostic through the shared variable map.

Bound certification always re-projects the candidate reduction map onto the
Stiefel manifold and solves the fixed-map convex program exactly, so the
returned value is a valid bound regardless of how the map was produced.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from . import ipm, linalg
from .conic import (
    WORKING_TOLERANCES,
    BlockKind,
    ConeBlock,
    ConeSpec,
    ConicProblem,
    ConicSolution,
    SolverTolerances,
    svec,
    svec_len,
    smat,
)
from .errors import DimensionError, SolverError
from .model import DecisionRows, DroInstance, Transform, decision_rows, make_transform

PSD_FEAS_TOL = 1e-7


# ---------------------------------------------------------------------------
# affine expressions over the free variables
# ---------------------------------------------------------------------------

class Lin:
    """Affine vector expression: const + sum_t coeffs_t @ u[cols_t]."""

    __slots__ = ("size", "const", "terms")

    def __init__(self, size: int, const: np.ndarray | None = None,
                 terms: list | None = None):
        self.size = size
        self.const = np.zeros(size) if const is None else np.asarray(const, float)
        self.terms = terms or []

    @classmethod
    def constant(cls, vec) -> "Lin":
        vec = np.atleast_1d(np.asarray(vec, dtype=float))
        return cls(vec.shape[0], const=vec)

    @classmethod
    def of(cls, idx: np.ndarray, coeff: float = 1.0) -> "Lin":
        idx = np.atleast_1d(idx)
        return cls(idx.shape[0], terms=[(idx, coeff * np.eye(idx.shape[0]))])

    @classmethod
    def mat(cls, a: np.ndarray, idx: np.ndarray) -> "Lin":
        a = np.atleast_2d(np.asarray(a, dtype=float))
        return cls(a.shape[0], terms=[(np.atleast_1d(idx), a)])

    def __add__(self, other: "Lin") -> "Lin":
        if self.size != other.size:
            raise DimensionError("adding affine expressions of different sizes")
        return Lin(self.size, self.const + other.const, self.terms + other.terms)

    def __sub__(self, other: "Lin") -> "Lin":
        return self + (other * -1.0)

    def __mul__(self, scalar: float) -> "Lin":
        return Lin(self.size, scalar * self.const,
                   [(idx, scalar * a) for idx, a in self.terms])

    def shift(self, vec) -> "Lin":
        return Lin(self.size, self.const + np.asarray(vec, float), list(self.terms))

    @staticmethod
    def stack(parts: list["Lin"]) -> "Lin":
        size = sum(p.size for p in parts)
        out = Lin(size)
        off = 0
        for p in parts:
            out.const[off:off + p.size] = p.const
            for idx, a in p.terms:
                pad = np.zeros((size, a.shape[1]))
                pad[off:off + p.size, :] = a
                out.terms.append((idx, pad))
            off += p.size
        return out

    def value(self, u: np.ndarray) -> np.ndarray:
        out = self.const.copy()
        for idx, a in self.terms:
            out += a @ u[idx]
        return out


class Assembler:
    """Collects free variables, objective terms, cone rows, and equalities."""

    def __init__(self, name: str = ""):
        self.name = name
        self._nfree = 0
        self._var_map: dict[str, slice] = {}
        self._cost: list[tuple[np.ndarray, np.ndarray]] = []
        self._blocks: list[ConeBlock] = []
        self._g_trip: list[tuple[np.ndarray, np.ndarray, np.ndarray]] = []
        self._h: list[np.ndarray] = []
        self._cone_rows = 0
        self._e_trip: list[tuple[np.ndarray, np.ndarray, np.ndarray]] = []
        self._he: list[np.ndarray] = []
        self._eq_rows = 0

    def free(self, name: str, size: int) -> np.ndarray:
        sl = slice(self._nfree, self._nfree + size)
        if size > 0:
            self._var_map[name] = sl
        self._nfree += size
        return np.arange(sl.start, sl.stop)

    def cost(self, idx: np.ndarray, coeffs) -> None:
        self._cost.append((np.atleast_1d(idx), np.atleast_1d(np.asarray(coeffs, float))))

    def equal_zero(self, lin: Lin) -> None:
        """Append rows lin == 0 to the free-variable equalities."""
        base = self._eq_rows
        for idx, a in lin.terms:
            rows, cols = np.nonzero(a)
            self._e_trip.append((base + rows, idx[cols], a[rows, cols]))
        self._he.append(-lin.const)
        self._eq_rows += lin.size

    def _cone(self, kind: BlockKind, size: int, name: str, lin: Lin) -> None:
        # slack v = lin(u):  v = h - G u  =>  h = const, G = -coeffs
        base = self._cone_rows
        for idx, a in lin.terms:
            rows, cols = np.nonzero(a)
            self._g_trip.append((base + rows, idx[cols], -a[rows, cols]))
        self._h.append(lin.const)
        self._cone_rows += lin.size
        self._blocks.append(ConeBlock(kind, size, name))

    def nonneg(self, name: str, lin: Lin) -> None:
        self._cone(BlockKind.NONNEG, lin.size, name, lin)

    def soc(self, name: str, lin: Lin) -> None:
        self._cone(BlockKind.SOC, lin.size, name, lin)

    def psd(self, name: str, order: int, lin_svec: Lin) -> None:
        if lin_svec.size != svec_len(order):
            raise DimensionError("svec length inconsistent with PSD order")
        self._cone(BlockKind.PSD, order, name, lin_svec)

    def bordered_psd(self, name: str, alpha: Lin, r: Lin, body: Lin) -> None:
        """PSD constraint on [[alpha, r'/2], [r/2, smat(body)]].

        ``alpha`` is scalar affine, ``r`` the border vector (off-diagonal
        blocks are r/2), ``body`` the svec of the lower-right block.  In svec
        coordinates of the bordered matrix the border contributes r/sqrt(2).
        """
        parts = [alpha, r * (1.0 / np.sqrt(2.0)), body]
        self.psd(name, r.size + 1, Lin.stack(parts))

    def build(self) -> ConicProblem:
        f = self._nfree
        c = np.zeros(f)
        for idx, coeffs in self._cost:
            c[idx] += coeffs

        def to_csr(trips, rows, cols):
            if trips:
                ri = np.concatenate([t[0] for t in trips])
                ci = np.concatenate([t[1] for t in trips])
                vi = np.concatenate([t[2] for t in trips])
            else:
                ri = ci = vi = np.zeros(0)
            return sp.csr_matrix((vi, (ri, ci)), shape=(rows, cols))

        g = to_csr(self._g_trip, self._cone_rows, f)
        h = np.concatenate(self._h) if self._h else np.zeros(0)
        e = to_csr(self._e_trip, self._eq_rows, f)
        he = np.concatenate(self._he) if self._he else np.zeros(0)
        return ConicProblem(c=c, g_cone=g, h_cone=h, e_eq=e, h_eq=he,
                            cone=ConeSpec(tuple(self._blocks)),
                            var_map=self._var_map, name=self.name)


# ---------------------------------------------------------------------------
# shared building blocks
# ---------------------------------------------------------------------------

@dataclass
class _Context:
    instance: DroInstance
    transform: Transform
    rows: DecisionRows | None

    @property
    def f_half(self) -> np.ndarray:
        return self.transform.half


def _context(instance: DroInstance) -> _Context:
    return _Context(instance=instance, transform=make_transform(instance.ambiguity),
                    rows=decision_rows(instance.decisions))


def _alpha_k(ctx: _Context, k: int, s_idx, x_idx, lam_idx) -> Lin:
    """Scalar upper-left entry s - y0_k(x) - lam_k'b - y_k(x)'mu + lam_k'A mu."""
    inst = ctx.instance
    p = inst.objective.pieces[k]
    a_mat, b_vec = inst.support.a_mat, inst.support.b_vec
    mu = inst.ambiguity.mu
    lin = Lin.of(s_idx)
    coeff_x = -(p.w0 + p.w.T @ mu)
    if inst.n:
        lin = lin + Lin.mat(coeff_x[None, :], x_idx)
    if lam_idx is not None and lam_idx.size:
        lin = lin + Lin.mat((a_mat @ mu - b_vec)[None, :], lam_idx)
    return lin.shift([-p.d0 - p.d @ mu])


def _border_k(ctx: _Context, k: int, factor: np.ndarray, q_idx, x_idx, lam_idx) -> Lin:
    """Border vector q + factor' (A' lam_k - y_k(x)) in the reduced basis."""
    inst = ctx.instance
    p = inst.objective.pieces[k]
    lin = Lin.of(q_idx)
    if inst.n:
        lin = lin + Lin.mat(-factor.T @ p.w, x_idx)
    if lam_idx is not None and lam_idx.size:
        lin = lin + Lin.mat(factor.T @ inst.support.a_mat.T, lam_idx)
    return lin.shift(-factor.T @ p.d)


def _add_decision_set(asm: Assembler, ctx: _Context, x_idx) -> None:
    inst = ctx.instance
    if ctx.rows is not None:
        rows = ctx.rows
        if rows.ineq_a.shape[0]:
            asm.nonneg("xset", Lin.mat(rows.ineq_a, x_idx).shift(rows.ineq_c))
        for j in range(rows.eq_a.shape[0]):
            asm.equal_zero(Lin.mat(rows.eq_a[j][None, :], x_idx).shift([rows.eq_c[j]]))
    else:
        dec = inst.decisions
        coeffs = np.stack([svec(m_) for m_ in dec.lmi[1:]], axis=1)
        asm.psd("xset", dec.tau,
                Lin.mat(coeffs, x_idx).shift(svec(dec.lmi[0])))


def _add_lambda(asm: Assembler, inst: DroInstance):
    l = inst.support.n_rows
    if l == 0:
        return None
    lam_idx = asm.free("lambda", inst.k * l)
    asm.nonneg("lambda_cone", Lin.of(lam_idx))
    return lam_idx


def _lam_k(lam_idx, k: int, l: int):
    if lam_idx is None or l == 0:
        return None
    return lam_idx[k * l:(k + 1) * l]


def _add_norm_epigraph(asm: Assembler, gamma1: float, q_idx) -> None:
    """sqrt(gamma1) * ||q|| as an objective term; dropped when gamma1 is 0."""
    if gamma1 <= 0.0:
        return
    t_idx = asm.free("norm_t", 1)
    asm.cost(t_idx, [np.sqrt(gamma1)])
    asm.soc("norm_q", Lin.stack([Lin.of(t_idx), Lin.of(q_idx)]))


# ---------------------------------------------------------------------------
# primal-form builders
# ---------------------------------------------------------------------------

def build_full_sdp(instance: DroInstance) -> ConicProblem:
    """Exact reformulation: bordered PSD blocks of size m+1 over (s, q, Q)."""
    ctx = _context(instance)
    return _build_primal_reduced(ctx, factor=ctx.f_half, q_name="q",
                                 body_name="Q", name="full")


def build_pca_sdp(instance: DroInstance, m1: int) -> ConicProblem:
    """Truncated-eigenbasis reduction: keep the top-m1 components."""
    if not 1 <= m1 <= instance.m:
        raise DimensionError(f"m1={m1} out of range 1..{instance.m}")
    ctx = _context(instance)
    return _build_primal_reduced(ctx, factor=ctx.f_half[:, :m1], q_name="q_r",
                                 body_name="Q_r", name=f"pca-{m1}")


def build_lb_inner_fixed_b(instance: DroInstance, b: np.ndarray) -> ConicProblem:
    """Lower-bound inner problem at a fixed orthonormal reduction map."""
    ctx = _context(instance)
    b = np.atleast_2d(np.asarray(b, dtype=float))
    if b.shape[0] != instance.m:
        raise DimensionError("reduction map has wrong row count")
    return _build_primal_reduced(ctx, factor=ctx.f_half @ b, q_name="q_r",
                                 body_name="Q_r", name="lb-fixed")


def _build_primal_reduced(ctx: _Context, factor: np.ndarray, q_name: str,
                          body_name: str, name: str) -> ConicProblem:
    inst = ctx.instance
    m1 = factor.shape[1]
    gamma1, gamma2 = inst.ambiguity.gamma1, inst.ambiguity.gamma2
    asm = Assembler(name=f"{name}:{inst.label}")
    x_idx = asm.free("x", inst.n)
    s_idx = asm.free("s", 1)
    q_idx = asm.free(q_name, m1)
    vq_idx = asm.free(body_name, svec_len(m1))
    lam_idx = _add_lambda(asm, inst)
    asm.cost(s_idx, [1.0])
    asm.cost(vq_idx, gamma2 * svec(np.eye(m1)))
    _add_norm_epigraph(asm, gamma1, q_idx)
    l = inst.support.n_rows
    for k in range(inst.k):
        asm.bordered_psd(
            f"lmi{k}",
            _alpha_k(ctx, k, s_idx, x_idx, _lam_k(lam_idx, k, l)),
            _border_k(ctx, k, factor, q_idx, x_idx, _lam_k(lam_idx, k, l)),
            Lin.of(vq_idx),
        )
    _add_decision_set(asm, ctx, x_idx)
    return asm.build()


def build_ub_fixed_b(instance: DroInstance, b: np.ndarray) -> ConicProblem:
    """Upper-bound problem at a fixed orthonormal map: the border vector must
    lie in the range of the map (q stays full-dimensional)."""
    ctx = _context(instance)
    b = np.atleast_2d(np.asarray(b, dtype=float))
    m, m1 = b.shape
    if m != instance.m:
        raise DimensionError("reduction map has wrong row count")
    return _build_ub_family(ctx, b1=b, b2=np.zeros((m, 0)), body_order=m1,
                            name="ub-fixed")


def build_rlb_fixed_b(instance: DroInstance, b1: np.ndarray, b2: np.ndarray) -> ConicProblem:
    """Revisited lower bound at a fixed jointly-orthonormal pair [b1, b2]:
    only the b1 coordinates enter the PSD blocks."""
    ctx = _context(instance)
    b1 = np.asarray(b1, dtype=float).reshape(instance.m, -1)
    b2 = np.asarray(b2, dtype=float).reshape(instance.m, -1)
    if b1.shape[1] + b2.shape[1] != instance.k:
        raise DimensionError("total reduced columns must equal the piece count")
    return _build_ub_family(ctx, b1=b1, b2=b2, body_order=b1.shape[1],
                            name="rlb-fixed")


def _build_ub_family(ctx: _Context, b1: np.ndarray, b2: np.ndarray,
                     body_order: int, name: str) -> ConicProblem:
    inst = ctx.instance
    m = inst.m
    m1 = b1.shape[1]
    m2 = b2.shape[1]
    gamma1, gamma2 = inst.ambiguity.gamma1, inst.ambiguity.gamma2
    asm = Assembler(name=f"{name}:{inst.label}")
    x_idx = asm.free("x", inst.n)
    s_idx = asm.free("s", 1)
    q_idx = asm.free("q", m)
    vq_idx = asm.free("Q_r", svec_len(m1))
    u_idx = asm.free("u", inst.k * m1)
    u2_idx = asm.free("u2", inst.k * m2)
    lam_idx = _add_lambda(asm, inst)
    asm.cost(s_idx, [1.0])
    if vq_idx.size:
        asm.cost(vq_idx, gamma2 * svec(np.eye(m1)))
    _add_norm_epigraph(asm, gamma1, q_idx)
    l = inst.support.n_rows
    for k in range(inst.k):
        uk = u_idx[k * m1:(k + 1) * m1]
        asm.bordered_psd(
            f"lmi{k}",
            _alpha_k(ctx, k, s_idx, x_idx, _lam_k(lam_idx, k, l)),
            Lin.of(uk) if m1 else Lin(0),
            Lin.of(vq_idx) if vq_idx.size else Lin(0),
        )
        # q + F'(A' lam_k - y_k(x)) = b1 u_k + b2 u2_k
        border = _border_k(ctx, k, ctx.f_half, q_idx, x_idx, _lam_k(lam_idx, k, l))
        rhs = Lin(m)
        if m1:
            rhs = rhs + Lin.mat(b1, uk)
        if m2:
            rhs = rhs + Lin.mat(b2, u2_idx[k * m2:(k + 1) * m2])
        asm.equal_zero(border - rhs)
    _add_decision_set(asm, ctx, x_idx)
    return asm.build()


# ---------------------------------------------------------------------------
# bilinear-dual builder (fixed reduction map)
# ---------------------------------------------------------------------------

def build_lb_dual_fixed_b(instance: DroInstance, b: np.ndarray) -> ConicProblem:
    """Dual of the fixed-map lower-bound problem, stated in the multiplier
    variables (t_k, p_k, P_k, decision-set dual); returned as a minimization
    of the negated objective."""
    ctx = _context(instance)
    inst = instance
    b = np.atleast_2d(np.asarray(b, dtype=float))
    m1 = b.shape[1]
    fb = ctx.f_half @ b
    gamma1, gamma2 = inst.ambiguity.gamma1, inst.ambiguity.gamma2
    a_mat, b_vec = inst.support.a_mat, inst.support.b_vec
    mu = inst.ambiguity.mu
    l = inst.support.n_rows
    kk = inst.k

    asm = Assembler(name=f"lb-dual:{inst.label}")
    t_idx = asm.free("t", kk)
    p_idx = asm.free("p", kk * m1)
    vp_idx = asm.free("P", kk * svec_len(m1))
    pk = lambda k: p_idx[k * m1:(k + 1) * m1]
    vpk = lambda k: vp_idx[k * svec_len(m1):(k + 1) * svec_len(m1)]

    # objective (maximize): sum_k t_k d0_k + (t_k mu + fb p_k) @ d_k - dual(X)
    for k in range(kk):
        p = inst.objective.pieces[k]
        asm.cost(t_idx[k:k + 1], [-(p.d0 + p.d @ mu)])
        if m1:
            asm.cost(pk(k), -(fb.T @ p.d))

    # stationarity in x: sum_k [t_k w0_k + (t_k mu + fb p_k)' W_k] = X-dual row
    station = Lin(inst.n)
    for k in range(kk):
        p = inst.objective.pieces[k]
        station = station + Lin.mat((p.w0 + p.w.T @ mu)[:, None], t_idx[k:k + 1])
        if m1:
            station = station + Lin.mat(p.w.T @ fb, pk(k))

    if ctx.rows is not None:
        rows = ctx.rows
        r = rows.ineq_a.shape[0]
        e = rows.eq_a.shape[0]
        zd_idx = asm.free("z_ineq", r)
        we_idx = asm.free("z_eq", e)
        if r:
            asm.nonneg("z_cone", Lin.of(zd_idx))
            asm.cost(zd_idx, rows.ineq_c)
            station = station - Lin.mat(rows.ineq_a.T, zd_idx)
        if e:
            asm.cost(we_idx, rows.eq_c)
            station = station - Lin.mat(rows.eq_a.T, we_idx)
    else:
        dec = inst.decisions
        vz_idx = asm.free("Z", svec_len(dec.tau))
        asm.psd("z_cone", dec.tau, Lin.of(vz_idx))
        asm.cost(vz_idx, svec(dec.lmi[0]))
        coeffs = np.stack([svec(m_) for m_ in dec.lmi[1:]], axis=0)
        station = station - Lin.mat(coeffs, vz_idx)
    if inst.n:
        asm.equal_zero(station)

    # sum t_k = 1
    asm.equal_zero(Lin.mat(np.ones((1, kk)), t_idx).shift([-1.0]))

    # norm constraint on sum p_k
    if m1:
        sum_p = Lin.mat(np.tile(np.eye(m1), (1, kk)), p_idx)
        if gamma1 > 0:
            asm.soc("norm_p", Lin.stack([Lin.constant([np.sqrt(gamma1)]), sum_p]))
        else:
            asm.equal_zero(sum_p)

    # gamma2 I - sum P_k >= 0
    if m1:
        lin = Lin.constant(gamma2 * svec(np.eye(m1)))
        for k in range(kk):
            lin = lin - Lin.of(vpk(k))
        asm.psd("cap_P", m1, lin)

    # support rows: -(t_k (A mu - b) + A fb p_k) >= 0
    if l:
        for k in range(kk):
            lin = Lin.mat(-(a_mat @ mu - b_vec)[:, None], t_idx[k:k + 1])
            if m1:
                lin = lin + Lin.mat(-(a_mat @ fb), pk(k))
            asm.nonneg(f"support{k}", lin)

    # moment-matrix duals [[t_k, p_k'], [p_k, P_k]] >= 0
    for k in range(kk):
        asm.bordered_psd(f"mdual{k}", Lin.of(t_idx[k:k + 1]),
                         Lin.of(pk(k)) * 2.0 if m1 else Lin(0),
                         Lin.of(vpk(k)) if m1 else Lin(0))
    return asm.build()


# ---------------------------------------------------------------------------
# solving and extraction
# ---------------------------------------------------------------------------

def solve_problem(problem: ConicProblem,
                  tol: SolverTolerances = WORKING_TOLERANCES) -> ConicSolution:
    sol = ipm.solve(problem, tol)
    if not sol.optimal:
        raise SolverError(
            f"solve of {problem.name!r} ended with {sol.status.value} "
            f"(pres={sol.primal_residual:.2e} dres={sol.dual_residual:.2e} "
            f"gap={sol.gap_residual:.2e})"
        )
    # every accepted solve satisfies strong duality and complementarity at a
    # level set by the requested tolerance (1e-6 at the working defaults)
    scale = max(1e-6, 10.0 * tol.gap) * (1.0 + abs(sol.objective))
    dual_obj = -(problem.h_cone @ sol.z_dual
                 + (problem.h_eq @ sol.y_dual if problem.h_eq.size else 0.0))
    if abs(sol.objective - dual_obj) > scale or sol.complementarity > scale:
        raise SolverError(
            f"solve of {problem.name!r} violates duality/complementarity "
            f"(gap={abs(sol.objective - dual_obj):.2e}, "
            f"compl={sol.complementarity:.2e})"
        )
    return sol


@dataclass
class FullSolution:
    x: np.ndarray
    s: float
    lam: np.ndarray          # (K, l)
    q: np.ndarray            # (m,)
    q_big: np.ndarray        # (m, m)
    objective: float


@dataclass
class ReducedSolution:
    x: np.ndarray
    s: float
    lam: np.ndarray
    q: np.ndarray            # q_r (m1,) for the reduced family, q (m,) for ub/rlb
    q_small: np.ndarray      # (m1, m1)
    u: np.ndarray            # (K, m1) border coordinates, empty otherwise
    u2: np.ndarray           # (K, K - m1) for the revisited form
    objective: float


@dataclass
class DualCertificate:
    t: np.ndarray            # (K,)
    p: np.ndarray            # (K, m1)
    big_p: np.ndarray        # (K, m1, m1)
    z: np.ndarray            # (tau, tau) decision-set dual (diagonal when scalarized)
    omega: np.ndarray        # (K, m) split variables b @ p_k
    objective: float


def _lam_matrix(problem: ConicProblem, u: np.ndarray, kk: int, l: int) -> np.ndarray:
    if l == 0:
        return np.zeros((kk, 0))
    return problem.extract(u, "lambda").reshape(kk, l)


def extract_full(instance: DroInstance, problem: ConicProblem,
                 sol: ConicSolution) -> FullSolution:
    u = sol.u
    return FullSolution(
        x=problem.extract(u, "x"),
        s=float(problem.extract(u, "s")[0]),
        lam=_lam_matrix(problem, u, instance.k, instance.support.n_rows),
        q=problem.extract(u, "q"),
        q_big=smat(problem.extract(u, "Q")),
        objective=sol.objective,
    )


def extract_reduced(instance: DroInstance, problem: ConicProblem,
                    sol: ConicSolution) -> ReducedSolution:
    u = sol.u
    vm = problem.var_map
    kk = instance.k
    if "q_r" in vm:
        q = problem.extract(u, "q_r")
        q_small = smat(problem.extract(u, "Q_r"))
        uu = np.zeros((kk, 0))
        u2 = np.zeros((kk, 0))
    else:
        q = problem.extract(u, "q")
        q_small = smat(problem.extract(u, "Q_r")) if "Q_r" in vm else np.zeros((0, 0))
        uu = problem.extract(u, "u").reshape(kk, -1) if "u" in vm else np.zeros((kk, 0))
        u2 = problem.extract(u, "u2").reshape(kk, -1) if "u2" in vm else np.zeros((kk, 0))
    return ReducedSolution(
        x=problem.extract(u, "x"),
        s=float(problem.extract(u, "s")[0]),
        lam=_lam_matrix(problem, u, kk, instance.support.n_rows),
        q=q, q_small=q_small, u=uu, u2=u2, objective=sol.objective,
    )


def extract_dual(instance: DroInstance, b: np.ndarray, problem: ConicProblem,
                 sol: ConicSolution) -> DualCertificate:
    u = sol.u
    kk = instance.k
    b = np.atleast_2d(b)
    m1 = b.shape[1]
    t = problem.extract(u, "t")
    p = problem.extract(u, "p").reshape(kk, m1) if m1 else np.zeros((kk, 0))
    ps = svec_len(m1)
    vp = problem.extract(u, "P") if m1 else np.zeros(0)
    big_p = np.stack([smat(vp[k * ps:(k + 1) * ps]) for k in range(kk)]) \
        if m1 else np.zeros((kk, 0, 0))
    # the certificate constraints are homogeneous apart from the weight
    # normalization, so rescaling pins sum(t) to 1 exactly
    total = float(np.sum(t))
    if total > 0:
        t, p, big_p = t / total, p / total, big_p / total
    if "Z" in problem.var_map:
        z = smat(problem.extract(u, "Z"))
    else:
        # scalarized form: place duals on the original diagonal positions; a
        # recovered equality's free dual splits into its positive/negative
        # parts on the two paired rows.
        rows = decision_rows(instance.decisions)
        diag = np.zeros(instance.decisions.tau)
        if "z_ineq" in problem.var_map:
            zd = problem.extract(u, "z_ineq")
            diag[rows.ineq_idx] = zd
        if "z_eq" in problem.var_map:
            we = problem.extract(u, "z_eq")
            for (i, j), w_val in zip(rows.eq_idx, we):
                diag[i] = max(w_val, 0.0)
                diag[j] = max(-w_val, 0.0)
        z = np.diag(diag)
    if total > 0:
        z = z / total
    omega = (b @ p.T).T if m1 else np.zeros((kk, instance.m))
    return DualCertificate(t=t, p=p, big_p=big_p, z=z, omega=omega,
                           objective=-sol.objective)


# ---------------------------------------------------------------------------
# feasibility checks on extracted solutions
# ---------------------------------------------------------------------------

def lmi_residuals_full(instance: DroInstance, sol: FullSolution) -> float:
    """Most negative eigenvalue across the exact-form PSD blocks (0 if PSD)."""
    ctx = _context(instance)
    worst = 0.0
    for k in range(instance.k):
        p = instance.objective.pieces[k]
        lam_k = sol.lam[k] if sol.lam.size else np.zeros(0)
        s_k = sol.s - p.y0(sol.x) - lam_k @ instance.support.b_vec \
            - p.y_vec(sol.x) @ instance.ambiguity.mu \
            + lam_k @ (instance.support.a_mat @ instance.ambiguity.mu)
        border = sol.q + ctx.f_half.T @ (instance.support.a_mat.T @ lam_k - p.y_vec(sol.x))
        block = np.block([[np.array([[s_k]]), 0.5 * border[None, :]],
                          [0.5 * border[:, None], sol.q_big]])
        worst = min(worst, linalg.min_eigenvalue(block))
    return worst


# ---------------------------------------------------------------------------
# certification
# ---------------------------------------------------------------------------

@dataclass
class BoundValue:
    value: float
    b: np.ndarray
    solution: ReducedSolution
    wall_time: float
    iterations: int


def certify_lb(instance: DroInstance, b: np.ndarray,
               tol: SolverTolerances = WORKING_TOLERANCES) -> BoundValue:
    """Valid lower bound from any full-column-rank map: project onto the
    Stiefel manifold, then solve the fixed-map outer problem exactly."""
    b_proj = linalg.project_stiefel(np.atleast_2d(np.asarray(b, dtype=float)))
    problem = build_lb_inner_fixed_b(instance, b_proj)
    sol = solve_problem(problem, tol)
    red = extract_reduced(instance, problem, sol)
    return BoundValue(value=sol.objective, b=b_proj, solution=red,
                      wall_time=sol.wall_time, iterations=sol.iterations)


def certify_ub(instance: DroInstance, b: np.ndarray,
               tol: SolverTolerances = WORKING_TOLERANCES) -> BoundValue:
    """Valid upper bound from any full-column-rank map (projected first)."""
    b_proj = linalg.project_stiefel(np.atleast_2d(np.asarray(b, dtype=float)))
    problem = build_ub_fixed_b(instance, b_proj)
    sol = solve_problem(problem, tol)
    red = extract_reduced(instance, problem, sol)
    return BoundValue(value=sol.objective, b=b_proj, solution=red,
                      wall_time=sol.wall_time, iterations=sol.iterations)


def certify_rlb(instance: DroInstance, b1: np.ndarray, b2: np.ndarray,
                tol: SolverTolerances = WORKING_TOLERANCES) -> BoundValue:
    """Exact solve of the revisited-bound problem at a fixed pair.

    The revisited bound equals the exact value when the pair is optimized
    (and collapses to the upper-bound problem at full reduced width); at an
    arbitrary fixed pair it carries no one-sided guarantee, unlike
    certify_lb/certify_ub.
    """
    b1 = np.asarray(b1, dtype=float).reshape(instance.m, -1)
    b2 = np.asarray(b2, dtype=float).reshape(instance.m, -1)
    joint = linalg.project_stiefel(np.hstack([b1, b2])) \
        if (b1.size + b2.size) else np.zeros((instance.m, 0))
    b1p, b2p = joint[:, :b1.shape[1]], joint[:, b1.shape[1]:]
    problem = build_rlb_fixed_b(instance, b1p, b2p)
    sol = solve_problem(problem, tol)
    red = extract_reduced(instance, problem, sol)
    return BoundValue(value=sol.objective, b=joint, solution=red,
                      wall_time=sol.wall_time, iterations=sol.iterations)


def solve_full(instance: DroInstance,
               tol: SolverTolerances = WORKING_TOLERANCES) -> tuple[float, FullSolution]:
    problem = build_full_sdp(instance)
    sol = solve_problem(problem, tol)
    return sol.objective, extract_full(instance, problem, sol)


def solve_discrete(instances, solve_one) -> tuple[float, int]:
    """Enumerate fixed-decision instances, return (best value, best index)."""
    best_val, best_idx = np.inf, -1
    for idx, inst in enumerate(instances):
        val = solve_one(inst)
        if val < best_val:
            best_val, best_idx = val, idx
    return best_val, best_idx
