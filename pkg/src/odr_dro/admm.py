"""Alternating optimization of the reduction map with the cone variables.

Three runners share one loop shape: a conic subproblem in the model variables
with the map frozen (quadratic coupling penalties carried as second-order-cone
epigraphs), a closed-form map update (orthogonal Procrustes, or an
unconstrained Sylvester solve in the lifted variant), and a multiplier step.

Every runner finishes with a certified bound: the final map is projected (or,
for the upper-bound family, rebuilt from the span of the final split
variables so the fixed-map equality system stays feasible) and the fixed-map
convex program is solved exactly.  Validity of the lower/upper certificates
is therefore independent of how far the alternation converged.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from . import linalg
from .conic import WORKING_TOLERANCES, SolverTolerances, svec, svec_len, timed
from .errors import DimensionError, SolverError
from .model import DroInstance, decision_rows
from .reform import (
    Assembler,
    BoundValue,
    Lin,
    _add_decision_set,
    _add_lambda,
    _add_norm_epigraph,
    _alpha_k,
    _border_k,
    _context,
    _lam_k,
    certify_lb,
    certify_rlb,
    certify_ub,
    solve_problem,
)


# Subproblem solves tolerate a looser target than certification: the
# alternation is robust to inexact inner solves (the coupling penalty blocks
# stall near 1e-6 in double precision), while the final fixed-map certificate
# is always solved at the working tolerances.
SUBPROBLEM_TOLERANCES = SolverTolerances(primal=2e-6, dual=2e-6, gap=2e-6)


@dataclass
class AdmmConfig:
    rho: float = 10.0
    tol_primal: float = 1e-6
    tol_dual: float = 1e-6
    max_iter: int = 500
    init_b: np.ndarray | None = None     # defaults to the leading-basis map
    adaptive_rho: bool = True
    trace_path: str | None = None
    solver_tol: SolverTolerances = SUBPROBLEM_TOLERANCES

    def __post_init__(self):
        if self.rho <= 0 or self.tol_primal <= 0 or self.tol_dual <= 0:
            raise DimensionError("penalty and tolerances must be positive")
        if self.max_iter < 1:
            raise DimensionError("max_iter must be >= 1")


@dataclass
class AdmmState:
    b: np.ndarray                       # current map (m x width)
    beta: np.ndarray                    # (K, m) multipliers of the split
    rho: float
    iteration: int = 0
    primal_residual: float = np.inf
    dual_residual: float = np.inf
    residual_history: list = field(default_factory=list)
    # lifted variant only
    c_mat: np.ndarray | None = None
    lam_u1: np.ndarray | None = None
    lam_u2: np.ndarray | None = None


@dataclass
class AdmmReport:
    method: str
    certified_bound: float
    raw_objective_at_exit: float
    iterations: int
    primal_residual: float
    dual_residual: float
    iteration_times: list
    converged: bool
    b_final: np.ndarray
    certificate: BoundValue
    wall_time: float


def _solve_subproblem(problem, tol: SolverTolerances):
    """Solve an alternation subproblem, retrying once at a 4x looser target.

    The alternation only needs inexact inner solves; a marginal stall above
    the nominal target should not abort the run.  Certification solves never
    go through this path.
    """
    try:
        return solve_problem(problem, tol)
    except SolverError:
        looser = SolverTolerances(primal=4 * tol.primal, dual=4 * tol.dual,
                                  gap=4 * tol.gap, max_iter=tol.max_iter)
        return solve_problem(problem, looser)


def multiplier_step(beta: np.ndarray, rho: float,
                    resid: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """One dual ascent step; the returned stored residual is recomputed from
    the update so it equals (beta_new - beta_old) / rho exactly."""
    beta_new = beta + rho * resid
    return beta_new, (beta_new - beta) / rho


def procrustes_update(m_mat: np.ndarray) -> np.ndarray:
    """argmax of <m_mat, B> over matrices with orthonormal columns.

    Rank-deficient inputs are completed deterministically (left/right factors
    extended over the canonical basis), so ties resolve reproducibly.
    """
    m_mat = np.atleast_2d(np.asarray(m_mat, dtype=float))
    if not np.all(np.isfinite(m_mat)):
        raise DimensionError("update matrix contains non-finite entries")
    m, m1 = m_mat.shape
    f = linalg.svd(m_mat)
    smax = f.singular[0] if f.singular.size else 0.0
    rank = int(np.sum(f.singular > 1e-12 * smax)) if smax > 0 else 0
    if rank == m1:
        return f.left @ f.right.T
    left = linalg.gram_schmidt_extend(list(f.left[:, :rank].T) if rank else
                                      [np.eye(m)[:, 0]], m1)
    right = linalg.gram_schmidt_extend(list(f.right[:, :rank].T) if rank else
                                       [np.eye(m1)[:, 0]], m1)
    if rank:
        left[:, :rank] = f.left[:, :rank]
        right[:, :rank] = f.right[:, :rank]
    return left @ right.T


def _penalty_blocks(asm: Assembler, name: str, w_lin: Lin, rho: float) -> None:
    """Add rho/2 * ||w||^2 to the objective through one epigraph cone."""
    t_idx = asm.free(f"{name}_epi", 1)
    asm.cost(t_idx, [rho])
    top = Lin.of(t_idx).shift([1.0])
    mid = Lin.of(t_idx).shift([-1.0])
    asm.soc(f"{name}_cone", Lin.stack([top, mid, w_lin * np.sqrt(2.0)]))


def _span_certification_map(u_tilde: np.ndarray, b_admm: np.ndarray,
                            width: int) -> np.ndarray:
    """Orthonormal map whose span contains the split vectors exactly,
    completed from the alternation's map and rotated back toward it."""
    m = b_admm.shape[0]
    cols: list[np.ndarray] = []

    def try_add(v):
        if len(cols) >= width:
            return
        r = np.asarray(v, dtype=float).copy()
        norm0 = np.linalg.norm(r)
        if norm0 == 0.0:
            return
        for _ in range(2):
            for c in cols:
                r -= (c @ r) * c
        if np.linalg.norm(r) > 1e-9 * norm0:
            cols.append(r / np.linalg.norm(r))

    for v in u_tilde:
        try_add(v)
    for j in range(b_admm.shape[1]):
        try_add(b_admm[:, j])
    for i in range(m):
        if len(cols) == width:
            break
        try_add(np.eye(m)[:, i])
    basis = np.column_stack(cols[:width])
    # rotate within the span toward the alternation's map
    fsvd = linalg.svd(basis.T @ b_admm)
    rot = fsvd.left @ fsvd.right.T
    return basis @ rot


# ---------------------------------------------------------------------------
# subproblem builders
# ---------------------------------------------------------------------------

def _build_ub_subproblem(instance: DroInstance, b: np.ndarray,
                         beta: np.ndarray, rho: float, m1_body: int):
    """Split form of the upper-bound family: the border equality ties the
    free vector u_tilde_k, and the penalty couples it to b @ u_k."""
    ctx = _context(instance)
    inst = instance
    m = inst.m
    width = b.shape[1]
    gamma1, gamma2 = inst.ambiguity.gamma1, inst.ambiguity.gamma2
    asm = Assembler(name=f"ub-admm:{inst.label}")
    x_idx = asm.free("x", inst.n)
    s_idx = asm.free("s", 1)
    q_idx = asm.free("q", m)
    vq_idx = asm.free("Q_r", svec_len(m1_body))
    u_idx = asm.free("u", inst.k * width)
    ut_idx = asm.free("u_tilde", inst.k * m)
    lam_idx = _add_lambda(asm, inst)
    asm.cost(s_idx, [1.0])
    if vq_idx.size:
        asm.cost(vq_idx, gamma2 * svec(np.eye(m1_body)))
    _add_norm_epigraph(asm, gamma1, q_idx)
    l = inst.support.n_rows
    for k in range(inst.k):
        uk = u_idx[k * width:(k + 1) * width]
        utk = ut_idx[k * m:(k + 1) * m]
        asm.bordered_psd(
            f"lmi{k}",
            _alpha_k(ctx, k, s_idx, x_idx, _lam_k(lam_idx, k, l)),
            Lin.of(uk[:m1_body]) if m1_body else Lin(0),
            Lin.of(vq_idx) if vq_idx.size else Lin(0),
        )
        border = _border_k(ctx, k, ctx.f_half, q_idx, x_idx, _lam_k(lam_idx, k, l))
        asm.equal_zero(border - Lin.of(utk))
        # beta_k @ (u_tilde_k - b u_k) + rho/2 ||.||^2
        asm.cost(utk, beta[k])
        asm.cost(uk, -(b.T @ beta[k]))
        _penalty_blocks(asm, f"pen{k}", Lin.of(utk) - Lin.mat(b, uk), rho)
    _add_decision_set(asm, ctx, x_idx)
    return asm.build()


def _build_lb_subproblem(instance: DroInstance, b: np.ndarray,
                         beta: np.ndarray, rho: float):
    """Split form of the bilinear dual: omega_k stands in for b @ p_k in every
    constraint, with the penalty tying them together."""
    ctx = _context(instance)
    inst = instance
    m = inst.m
    m1 = b.shape[1]
    fh = ctx.f_half
    gamma1, gamma2 = inst.ambiguity.gamma1, inst.ambiguity.gamma2
    a_mat, b_vec = inst.support.a_mat, inst.support.b_vec
    mu = inst.ambiguity.mu
    l = inst.support.n_rows
    kk = inst.k

    asm = Assembler(name=f"lb-admm:{inst.label}")
    t_idx = asm.free("t", kk)
    p_idx = asm.free("p", kk * m1)
    vp_idx = asm.free("P", kk * svec_len(m1))
    om_idx = asm.free("omega", kk * m)
    pk = lambda k: p_idx[k * m1:(k + 1) * m1]
    vpk = lambda k: vp_idx[k * svec_len(m1):(k + 1) * svec_len(m1)]
    omk = lambda k: om_idx[k * m:(k + 1) * m]

    # negated dual objective
    for k in range(kk):
        p = inst.objective.pieces[k]
        asm.cost(t_idx[k:k + 1], [-(p.d0 + p.d @ mu)])
        asm.cost(omk(k), -(fh.T @ p.d))

    station = Lin(inst.n)
    for k in range(kk):
        p = inst.objective.pieces[k]
        station = station + Lin.mat((p.w0 + p.w.T @ mu)[:, None], t_idx[k:k + 1])
        station = station + Lin.mat(p.w.T @ fh, omk(k))
    rows = decision_rows(inst.decisions)
    if rows is not None:
        r, e = rows.ineq_a.shape[0], rows.eq_a.shape[0]
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
    asm.equal_zero(Lin.mat(np.ones((1, kk)), t_idx).shift([-1.0]))

    sum_p = Lin.mat(np.tile(np.eye(m1), (1, kk)), p_idx)
    if gamma1 > 0:
        asm.soc("norm_p", Lin.stack([Lin.constant([np.sqrt(gamma1)]), sum_p]))
    else:
        asm.equal_zero(sum_p)
    cap = Lin.constant(gamma2 * svec(np.eye(m1)))
    for k in range(kk):
        cap = cap - Lin.of(vpk(k))
    asm.psd("cap_P", m1, cap)
    if l:
        for k in range(kk):
            lin = Lin.mat(-(a_mat @ mu - b_vec)[:, None], t_idx[k:k + 1]) \
                + Lin.mat(-(a_mat @ fh), omk(k))
            asm.nonneg(f"support{k}", lin)
    for k in range(kk):
        asm.bordered_psd(f"mdual{k}", Lin.of(t_idx[k:k + 1]),
                         Lin.of(pk(k)) * 2.0, Lin.of(vpk(k)))
        # penalty on omega_k - b p_k (maximization -> negated objective)
        asm.cost(omk(k), beta[k])
        asm.cost(pk(k), -(b.T @ beta[k]))
        _penalty_blocks(asm, f"pen{k}", Lin.of(omk(k)) - Lin.mat(b, pk(k)), rho)
    return asm.build()


# ---------------------------------------------------------------------------
# runners
# ---------------------------------------------------------------------------

def _init_b(instance: DroInstance, width: int, cfg: AdmmConfig) -> np.ndarray:
    if cfg.init_b is not None:
        b0 = np.atleast_2d(np.asarray(cfg.init_b, dtype=float))
        if b0.shape != (instance.m, width):
            raise DimensionError("init_b has the wrong shape")
        return linalg.project_stiefel(b0)
    return np.eye(instance.m)[:, :width]


def _trace_writer(cfg: AdmmConfig):
    if cfg.trace_path is None:
        return None
    fh = open(cfg.trace_path, "w")
    fh.write("iter,objective,primal_residual,dual_residual,rho\n")
    return fh


def _balance_rho(state: AdmmState, cfg: AdmmConfig) -> None:
    if not cfg.adaptive_rho:
        return
    pr, dr = state.primal_residual, state.dual_residual
    if not (np.isfinite(pr) and np.isfinite(dr)):
        return
    if pr > 10.0 * max(dr, 1e-16) and state.rho < 1e6:
        state.rho *= 2.0
    elif dr > 10.0 * max(pr, 1e-16) and state.rho > 1e-3:
        state.rho /= 2.0


def _run_ub_family(instance: DroInstance, width: int, m1_body: int,
                   cfg: AdmmConfig, method: str) -> AdmmReport:
    t0 = timed()
    state = AdmmState(b=_init_b(instance, width, cfg),
                      beta=np.zeros((instance.k, instance.m)), rho=cfg.rho)
    trace = _trace_writer(cfg)
    times: list[float] = []
    raw = np.nan
    u_tilde = np.zeros((instance.k, instance.m))
    converged = False
    try:
        for it in range(cfg.max_iter):
            ts = timed()
            problem = _build_ub_subproblem(instance, state.b, state.beta,
                                           state.rho, m1_body)
            try:
                sol = _solve_subproblem(problem, cfg.solver_tol)
            except SolverError:
                if it == 0:
                    raise
                break   # abort with a partial report; certification still runs
            u = problem.extract(sol.u, "u").reshape(instance.k, width)
            u_tilde = problem.extract(sol.u, "u_tilde").reshape(instance.k, instance.m)
            raw = _ub_raw_objective(instance, problem, sol, m1_body)
            b_old = state.b
            state.b = procrustes_update(
                (state.beta + state.rho * u_tilde).T @ u
            )
            resid = u_tilde - u @ state.b.T
            state.beta, stored = multiplier_step(state.beta, state.rho, resid)
            state.primal_residual = float(np.max(np.linalg.norm(stored, axis=1)))
            state.dual_residual = float(np.linalg.norm(state.b - b_old))
            state.iteration = it + 1
            state.residual_history.append(
                (state.primal_residual, state.dual_residual))
            times.append(timed() - ts)
            if trace:
                trace.write(f"{it},{raw!r},{state.primal_residual!r},"
                            f"{state.dual_residual!r},{state.rho!r}\n")
            if (state.primal_residual <= cfg.tol_primal
                    and state.dual_residual <= cfg.tol_dual):
                converged = True
                break
            _balance_rho(state, cfg)
    finally:
        if trace:
            trace.close()
    b_cert = _span_certification_map(u_tilde, state.b, width)
    if method == "odr-rlb":
        cert = certify_rlb(instance, b_cert[:, :m1_body], b_cert[:, m1_body:],
                           WORKING_TOLERANCES)
    else:
        cert = certify_ub(instance, b_cert, WORKING_TOLERANCES)
    return AdmmReport(
        method=method, certified_bound=cert.value, raw_objective_at_exit=raw,
        iterations=state.iteration, primal_residual=state.primal_residual,
        dual_residual=state.dual_residual, iteration_times=times,
        converged=converged, b_final=state.b, certificate=cert,
        wall_time=timed() - t0,
    )


def _ub_raw_objective(instance, problem, sol, m1_body) -> float:
    from .conic import smat
    gamma1, gamma2 = instance.ambiguity.gamma1, instance.ambiguity.gamma2
    s = float(problem.extract(sol.u, "s")[0])
    q = problem.extract(sol.u, "q")
    out = s + np.sqrt(gamma1) * float(np.linalg.norm(q))
    if m1_body:
        out += gamma2 * float(np.trace(smat(problem.extract(sol.u, "Q_r"))))
    return out


def run_ub(instance: DroInstance, m1: int, cfg: AdmmConfig | None = None) -> AdmmReport:
    """Upper-bound alternation with closed-form orthogonal map updates."""
    if not 1 <= m1 <= instance.m:
        raise DimensionError(f"m1={m1} out of range")
    return _run_ub_family(instance, m1, m1, cfg or AdmmConfig(), "odr-ub")


def run_rlb(instance: DroInstance, m1: int, cfg: AdmmConfig | None = None) -> AdmmReport:
    """Revisited-bound alternation: the map has one column per piece but only
    the first m1 coordinates enter the PSD blocks."""
    if not 0 <= m1 <= instance.k:
        raise DimensionError(f"m1={m1} must lie in 0..K")
    if instance.k > instance.m:
        raise DimensionError("width exceeds the ambient dimension")
    return _run_ub_family(instance, instance.k, m1, cfg or AdmmConfig(), "odr-rlb")


def run_lb(instance: DroInstance, m1: int, cfg: AdmmConfig | None = None) -> AdmmReport:
    """Lower-bound alternation on the bilinear dual with the omega split."""
    if not 1 <= m1 <= instance.m:
        raise DimensionError(f"m1={m1} out of range")
    cfg = cfg or AdmmConfig()
    t0 = timed()
    state = AdmmState(b=_init_b(instance, m1, cfg),
                      beta=np.zeros((instance.k, instance.m)), rho=cfg.rho)
    trace = _trace_writer(cfg)
    times: list[float] = []
    raw = np.nan
    converged = False
    try:
        for it in range(cfg.max_iter):
            ts = timed()
            problem = _build_lb_subproblem(instance, state.b, state.beta, state.rho)
            try:
                sol = _solve_subproblem(problem, cfg.solver_tol)
            except SolverError:
                if it == 0:
                    raise
                break   # abort with a partial report; certification still runs
            p = problem.extract(sol.u, "p").reshape(instance.k, m1)
            omega = problem.extract(sol.u, "omega").reshape(instance.k, instance.m)
            raw = _lb_raw_objective(instance, problem, sol)
            b_old = state.b
            state.b = procrustes_update((state.beta + state.rho * omega).T @ p)
            resid = omega - p @ state.b.T
            state.beta, stored = multiplier_step(state.beta, state.rho, resid)
            state.primal_residual = float(np.max(np.linalg.norm(stored, axis=1)))
            state.dual_residual = float(np.linalg.norm(state.b - b_old))
            state.iteration = it + 1
            state.residual_history.append(
                (state.primal_residual, state.dual_residual))
            times.append(timed() - ts)
            if trace:
                trace.write(f"{it},{raw!r},{state.primal_residual!r},"
                            f"{state.dual_residual!r},{state.rho!r}\n")
            if (state.primal_residual <= cfg.tol_primal
                    and state.dual_residual <= cfg.tol_dual):
                converged = True
                break
            _balance_rho(state, cfg)
    finally:
        if trace:
            trace.close()
    cert = certify_lb(instance, state.b, WORKING_TOLERANCES)
    return AdmmReport(
        method="odr-lb", certified_bound=cert.value, raw_objective_at_exit=raw,
        iterations=state.iteration, primal_residual=state.primal_residual,
        dual_residual=state.dual_residual, iteration_times=times,
        converged=converged, b_final=state.b, certificate=cert,
        wall_time=timed() - t0,
    )


def _lb_raw_objective(instance, problem, sol) -> float:
    """Dual objective at the subproblem point (penalties removed)."""
    mu = instance.ambiguity.mu
    from .model import decision_rows as _rows
    from .reform import _context as _ctx
    ctx = _ctx(instance)
    t = problem.extract(sol.u, "t")
    omega = problem.extract(sol.u, "omega").reshape(instance.k, instance.m)
    out = 0.0
    for k, p in enumerate(instance.objective.pieces):
        out += t[k] * (p.d0 + p.d @ mu) + (ctx.f_half @ omega[k]) @ p.d
    rows = _rows(instance.decisions)
    if rows is not None:
        if "z_ineq" in problem.var_map:
            out -= problem.extract(sol.u, "z_ineq") @ rows.ineq_c
        if "z_eq" in problem.var_map:
            out -= problem.extract(sol.u, "z_eq") @ rows.eq_c
    else:
        from .conic import smat as _smat
        z = _smat(problem.extract(sol.u, "Z"))
        out -= float(np.sum(z * instance.decisions.lmi[0]))
    return out


# ---------------------------------------------------------------------------
# lifted variant
# ---------------------------------------------------------------------------

def run_ub_lifted(instance: DroInstance, m1: int,
                  cfg: AdmmConfig | None = None) -> AdmmReport:
    """Lifted upper-bound alternation: an extra copy of the map and a product
    variable pinned to the identity turn the map step into an unconstrained
    quadratic (a Sylvester equation), at the price of weaker exploration."""
    if not 1 <= m1 <= instance.m:
        raise DimensionError(f"m1={m1} out of range")
    cfg = cfg or AdmmConfig()
    t0 = timed()
    m = instance.m
    state = AdmmState(b=_init_b(instance, m1, cfg),
                      beta=np.zeros((instance.k, m)), rho=cfg.rho,
                      c_mat=_init_b(instance, m1, cfg),
                      lam_u1=np.zeros((m1, m1)), lam_u2=np.zeros((m, m1)))
    trace = _trace_writer(cfg)
    times: list[float] = []
    raw = np.nan
    u_tilde = np.zeros((instance.k, m))
    converged = False
    try:
        for it in range(cfg.max_iter):
            ts = timed()
            problem = _build_ub_subproblem(instance, state.b, state.beta,
                                           state.rho, m1)
            try:
                sol = _solve_subproblem(problem, cfg.solver_tol)
            except SolverError:
                if it == 0:
                    raise
                break   # abort with a partial report; certification still runs
            u = problem.extract(sol.u, "u").reshape(instance.k, m1)
            u_tilde = problem.extract(sol.u, "u_tilde").reshape(instance.k, m)
            raw = _ub_raw_objective(instance, problem, sol, m1)
            b = state.b
            rho = state.rho
            # closed-form copy update: rho (b b' + I) c = b lam1' + 2 rho b - lam2
            lhs = b @ b.T + np.eye(m)
            rhs = (b @ state.lam_u1.T - state.lam_u2) / rho + 2.0 * b
            state.c_mat = np.linalg.solve(lhs, rhs)
            c = state.c_mat
            # map update: (c c') B + B (sum u u' + I) = RHS / rho
            uu = sum(np.outer(u[k], u[k]) for k in range(instance.k))
            rhs_b = ((state.beta + rho * u_tilde).T @ u
                     + c @ state.lam_u1 + state.lam_u2 + 2.0 * rho * c) / rho
            b_new = sla.solve_sylvester(c @ c.T, uu + np.eye(m1), rhs_b)
            b_old = state.b
            state.b = b_new
            resid = u_tilde - u @ b_new.T
            state.beta, _ = multiplier_step(state.beta, rho, resid)
            state.lam_u1 = state.lam_u1 + rho * (np.eye(m1) - c.T @ b_new)
            state.lam_u2 = state.lam_u2 + rho * (c - b_new)
            state.primal_residual = float(max(
                np.max(np.linalg.norm(resid, axis=1)),
                np.linalg.norm(np.eye(m1) - c.T @ b_new),
                np.linalg.norm(c - b_new),
            ))
            state.dual_residual = float(np.linalg.norm(state.b - b_old))
            state.iteration = it + 1
            times.append(timed() - ts)
            if trace:
                trace.write(f"{it},{raw!r},{state.primal_residual!r},"
                            f"{state.dual_residual!r},{state.rho!r}\n")
            if (state.primal_residual <= cfg.tol_primal
                    and state.dual_residual <= cfg.tol_dual):
                converged = True
                break
            _balance_rho(state, cfg)
    finally:
        if trace:
            trace.close()
    b_cert = _span_certification_map(u_tilde, linalg.project_stiefel(state.b)
                                     if np.linalg.matrix_rank(state.b) == m1
                                     else _init_b(instance, m1, cfg), m1)
    cert = certify_ub(instance, b_cert, WORKING_TOLERANCES)
    return AdmmReport(
        method="odr-ub-lifted", certified_bound=cert.value,
        raw_objective_at_exit=raw, iterations=state.iteration,
        primal_residual=state.primal_residual, dual_residual=state.dual_residual,
        iteration_times=times, converged=converged, b_final=state.b,
        certificate=cert, wall_time=timed() - t0,
    )


def lifted_map_objective(b, u, u_tilde, beta, c, lam_u1, lam_u2, rho) -> float:
    """Map-step objective of the lifted variant (used to test the closed form)."""
    val = 0.0
    for k in range(u.shape[0]):
        r = u_tilde[k] - b @ u[k]
        val += beta[k] @ r + 0.5 * rho * (r @ r)
    m1 = b.shape[1]
    bt = np.eye(m1) - c.T @ b
    val += float(np.sum(lam_u1 * bt)) + 0.5 * rho * float(np.sum(bt * bt))
    cb = c - b
    val += float(np.sum(lam_u2 * cb)) + 0.5 * rho * float(np.sum(cb * cb))
    return val
