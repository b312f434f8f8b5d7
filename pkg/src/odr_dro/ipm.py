"""Primal-dual interior-point solver for linear cone programs.

Homogeneous self-dual embedding with Nesterov-Todd scaling and a Mehrotra
predictor-corrector, over products of nonnegative, second-order, and PSD
cones with free variables and free-variable equalities handled directly by
the embedding.  The KKT system is reduced to a dense Schur complement
``[[G' H^-1 G, E'], [E, 0]]`` with static regularization; solves are
iteratively refined against the exact (operator-applied) system.

The algorithm is deterministic: no randomness, so identical problems and
tolerances produce identical iterate paths.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from .conic import (
    BlockKind,
    ConeSpec,
    ConicProblem,
    ConicSolution,
    SolveStatus,
    SolverTolerances,
    svec_indices,
    timed,
)

_STEP = 0.99
_REG = 1e-9
_MIN_STEP = 1e-12


# ---------------------------------------------------------------------------
# per-block cone operations (svec coordinates for PSD)
# ---------------------------------------------------------------------------

def _identity(cone: ConeSpec) -> np.ndarray:
    parts = []
    for blk in cone.blocks:
        if blk.kind is BlockKind.NONNEG:
            parts.append(np.ones(blk.size))
        elif blk.kind is BlockKind.SOC:
            e = np.zeros(blk.size)
            e[0] = 1.0
            parts.append(e)
        else:
            parts.append(_svec_eye(blk.size))
    return np.concatenate(parts)


def _svec_eye(n: int) -> np.ndarray:
    i, j = svec_indices(n)
    return (i == j).astype(float)


def _degree(cone: ConeSpec) -> int:
    deg = 0
    for blk in cone.blocks:
        deg += 1 if blk.kind is BlockKind.SOC else blk.size
    return deg


def _smat_batch(cols: np.ndarray, n: int) -> np.ndarray:
    """(p, k) svec columns -> (k, n, n) symmetric matrices."""
    i, j = svec_indices(n)
    scale = np.where(i == j, 1.0, 1.0 / np.sqrt(2.0))
    vals = cols.T * scale  # (k, p)
    out = np.zeros((cols.shape[1], n, n))
    out[:, i, j] = vals
    out[:, j, i] = vals
    return out


def _svec_batch(mats: np.ndarray) -> np.ndarray:
    """(k, n, n) symmetric matrices -> (p, k) svec columns."""
    n = mats.shape[1]
    i, j = svec_indices(n)
    scale = np.where(i == j, 1.0, np.sqrt(2.0))
    return (mats[:, i, j] * scale).T


def _soc_jnorm_sq(x: np.ndarray) -> float:
    return float(x[0] * x[0] - x[1:] @ x[1:])


class _Scaling:
    """Nesterov-Todd scaling for one iterate pair (s, z).

    For every block, ``lam = W(z) = W^{-T}(s)`` is the scaled point.
    """

    def __init__(self, cone: ConeSpec, s: np.ndarray, z: np.ndarray):
        self.cone = cone
        self.data: list[tuple] = []
        lam_parts = []
        for blk, sl in zip(cone.blocks, cone.slices()):
            sb, zb = s[sl], z[sl]
            if blk.kind is BlockKind.NONNEG:
                w = np.sqrt(sb / zb)
                lam = np.sqrt(sb * zb)
                self.data.append((w,))
            elif blk.kind is BlockKind.SOC:
                js2, jz2 = _soc_jnorm_sq(sb), _soc_jnorm_sq(zb)
                if js2 <= 0.0 or jz2 <= 0.0:
                    raise np.linalg.LinAlgError("iterate left the cone interior")
                jn_s = np.sqrt(js2)
                jn_z = np.sqrt(jz2)
                a = sb / jn_s
                b = zb / jn_z
                jb = b.copy()
                jb[1:] *= -1.0
                gamma = np.sqrt((1.0 + a @ b) / 2.0)
                wbar = (a + jb) / (2.0 * gamma)
                v = wbar.copy()
                v[0] += 1.0
                v /= np.sqrt(2.0 * (1.0 + wbar[0]))
                eta = np.sqrt(jn_s / jn_z)
                self.data.append((eta, v, wbar))
                lam = self._soc_w_apply(eta, v, zb)
            else:
                smat_s = _smat_batch(sb[:, None], blk.size)[0]
                smat_z = _smat_batch(zb[:, None], blk.size)[0]
                ls = np.linalg.cholesky(smat_s)
                lz = np.linalg.cholesky(smat_z)
                u_, sig, vt = np.linalg.svd(lz.T @ ls)
                isq = 1.0 / np.sqrt(sig)
                r = ls @ vt.T * isq
                rinv = (isq[:, None] * u_.T) @ lz.T
                self.data.append((r, rinv, sig))
                lam = np.zeros(blk.dim)
                i, j = svec_indices(blk.size)
                lam[i == j] = sig
            lam_parts.append(lam)
        self.lam = np.concatenate(lam_parts)

    # -- elementary appliers ------------------------------------------------

    @staticmethod
    def _soc_w_apply(eta: float, v: np.ndarray, x: np.ndarray) -> np.ndarray:
        jx = x.copy()
        jx[1:] *= -1.0
        return eta * (2.0 * v * (v @ x) - jx)

    @staticmethod
    def _soc_winv_apply(eta: float, v: np.ndarray, x: np.ndarray) -> np.ndarray:
        jv = v.copy()
        jv[1:] *= -1.0
        jx = x.copy()
        jx[1:] *= -1.0
        return (2.0 * jv * (jv @ x) - jx) / eta

    def w_apply_z(self, x: np.ndarray) -> np.ndarray:
        """W x (scaling of a dual-side vector)."""
        out = np.empty_like(x)
        for blk, sl, d in zip(self.cone.blocks, self.cone.slices(), self.data):
            xb = x[sl]
            if blk.kind is BlockKind.NONNEG:
                out[sl] = d[0] * xb
            elif blk.kind is BlockKind.SOC:
                out[sl] = self._soc_w_apply(d[0], d[1], xb)
            else:
                r = d[0]
                m = _smat_batch(xb[:, None], blk.size)[0]
                out[sl] = _svec_batch((r.T @ m @ r)[None, :, :])[:, 0]
        return out

    def winv_t_apply_s(self, x: np.ndarray) -> np.ndarray:
        """W^{-T} x (scaling of a primal-slack-side vector)."""
        out = np.empty_like(x)
        for blk, sl, d in zip(self.cone.blocks, self.cone.slices(), self.data):
            xb = x[sl]
            if blk.kind is BlockKind.NONNEG:
                out[sl] = xb / d[0]
            elif blk.kind is BlockKind.SOC:
                out[sl] = self._soc_winv_apply(d[0], d[1], xb)
            else:
                rinv = d[1]
                m = _smat_batch(xb[:, None], blk.size)[0]
                out[sl] = _svec_batch((rinv @ m @ rinv.T)[None, :, :])[:, 0]
        return out

    def wt_apply(self, x: np.ndarray) -> np.ndarray:
        """W^T x."""
        out = np.empty_like(x)
        for blk, sl, d in zip(self.cone.blocks, self.cone.slices(), self.data):
            xb = x[sl]
            if blk.kind is BlockKind.NONNEG:
                out[sl] = d[0] * xb
            elif blk.kind is BlockKind.SOC:
                out[sl] = self._soc_w_apply(d[0], d[1], xb)
            else:
                r = d[0]
                m = _smat_batch(xb[:, None], blk.size)[0]
                out[sl] = _svec_batch((r @ m @ r.T)[None, :, :])[:, 0]
        return out

    def winv_apply_z(self, x: np.ndarray) -> np.ndarray:
        """W^{-1} x (inverse scaling back to the dual side)."""
        out = np.empty_like(x)
        for blk, sl, d in zip(self.cone.blocks, self.cone.slices(), self.data):
            xb = x[sl]
            if blk.kind is BlockKind.NONNEG:
                out[sl] = xb / d[0]
            elif blk.kind is BlockKind.SOC:
                out[sl] = self._soc_winv_apply(d[0], d[1], xb)
            else:
                rinv = d[1]
                m = _smat_batch(xb[:, None], blk.size)[0]
                out[sl] = _svec_batch((rinv.T @ m @ rinv)[None, :, :])[:, 0]
        return out

    def hinv_columns(self, g: sp.csr_matrix) -> np.ndarray:
        """(W^T W)^{-1} G as a dense matrix, block by block."""
        out = np.empty(g.shape)
        gc = g.tocsc()
        for blk, sl, d in zip(self.cone.blocks, self.cone.slices(), self.data):
            gb = np.asarray(gc[sl, :].todense())
            if blk.kind is BlockKind.NONNEG:
                w = d[0]
                out[sl, :] = gb / (w * w)[:, None]
            elif blk.kind is BlockKind.SOC:
                eta, _, wbar = d
                q = wbar.copy()
                q[1:] *= -1.0
                jgb = gb.copy()
                jgb[1:, :] *= -1.0
                out[sl, :] = (2.0 * np.outer(q, q @ gb) - jgb) / (eta * eta)
            else:
                rinv = d[1]
                tinv = rinv.T @ rinv
                mats = _smat_batch(gb, blk.size)
                out[sl, :] = _svec_batch(tinv @ mats @ tinv)
        return out

    def hinv_vec(self, x: np.ndarray) -> np.ndarray:
        out = np.empty_like(x)
        for blk, sl, d in zip(self.cone.blocks, self.cone.slices(), self.data):
            xb = x[sl]
            if blk.kind is BlockKind.NONNEG:
                w = d[0]
                out[sl] = xb / (w * w)
            elif blk.kind is BlockKind.SOC:
                eta, _, wbar = d
                q = wbar.copy()
                q[1:] *= -1.0
                jx = xb.copy()
                jx[1:] *= -1.0
                out[sl] = (2.0 * q * (q @ xb) - jx) / (eta * eta)
            else:
                rinv = d[1]
                tinv = rinv.T @ rinv
                m = _smat_batch(xb[:, None], blk.size)[0]
                out[sl] = _svec_batch((tinv @ m @ tinv)[None])[:, 0]
        return out


# ---------------------------------------------------------------------------
# Jordan algebra helpers
# ---------------------------------------------------------------------------

def _jordan_prod(cone: ConeSpec, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    for blk, sl in zip(cone.blocks, cone.slices()):
        xb, yb = x[sl], y[sl]
        if blk.kind is BlockKind.NONNEG:
            out[sl] = xb * yb
        elif blk.kind is BlockKind.SOC:
            out[sl] = np.concatenate(
                [[xb @ yb], xb[0] * yb[1:] + yb[0] * xb[1:]]
            )
        else:
            mx = _smat_batch(xb[:, None], blk.size)[0]
            my = _smat_batch(yb[:, None], blk.size)[0]
            out[sl] = _svec_batch((0.5 * (mx @ my + my @ mx))[None])[:, 0]
    return out


def _jordan_solve(cone: ConeSpec, lam: np.ndarray, d: np.ndarray) -> np.ndarray:
    """Solve lam o x = d for x (lam interior)."""
    out = np.empty_like(d)
    for blk, sl in zip(cone.blocks, cone.slices()):
        lb, db = lam[sl], d[sl]
        if blk.kind is BlockKind.NONNEG:
            out[sl] = db / lb
        elif blk.kind is BlockKind.SOC:
            det = lb[0] * lb[0] - lb[1:] @ lb[1:]
            x0 = (lb[0] * db[0] - lb[1:] @ db[1:]) / det
            out[sl] = np.concatenate([[x0], (db[1:] - x0 * lb[1:]) / lb[0]])
        else:
            n = blk.size
            i, j = svec_indices(n)
            lam_diag = lb[i == j]
            denom = 0.5 * (lam_diag[i] + lam_diag[j])
            out[sl] = db / denom
    return out


def _max_step(cone: ConeSpec, lam: np.ndarray, d: np.ndarray) -> float:
    """sup { a >= 0 : lam + a d in K } for interior lam (inf if unbounded)."""
    best = np.inf
    for blk, sl in zip(cone.blocks, cone.slices()):
        lb, db = lam[sl], d[sl]
        if blk.kind is BlockKind.NONNEG:
            neg = db < 0
            if np.any(neg):
                best = min(best, float(np.min(-lb[neg] / db[neg])))
        elif blk.kind is BlockKind.SOC:
            a = db[0] * db[0] - db[1:] @ db[1:]
            b = 2.0 * (lb[0] * db[0] - lb[1:] @ db[1:])
            c = lb[0] * lb[0] - lb[1:] @ lb[1:]
            roots = []
            if abs(a) < 1e-14:
                if b < 0:
                    roots.append(-c / b)
            else:
                disc = b * b - 4.0 * a * c
                if disc >= 0.0:
                    sq = np.sqrt(disc)
                    roots.extend([(-b - sq) / (2 * a), (-b + sq) / (2 * a)])
            pos = [r for r in roots if r > 0.0]
            if pos:
                best = min(best, min(pos))
            if db[0] < 0:
                best = min(best, -lb[0] / db[0])
        else:
            n = blk.size
            i, j = svec_indices(n)
            lam_diag = lb[i == j]
            dm = _smat_batch(db[:, None], n)[0]
            isq = 1.0 / np.sqrt(lam_diag)
            emin = float(np.linalg.eigvalsh(isq[:, None] * dm * isq[None, :])[0])
            if emin < 0:
                best = min(best, -1.0 / emin)
    return best


# ---------------------------------------------------------------------------
# main solver
# ---------------------------------------------------------------------------

@dataclass
class _Work:
    g: sp.csr_matrix
    gt: sp.csr_matrix
    e: sp.csr_matrix
    et: sp.csr_matrix
    h: np.ndarray
    he: np.ndarray
    c: np.ndarray


def _norm(x: np.ndarray) -> float:
    return float(np.linalg.norm(x)) if x.size else 0.0


def solve(problem: ConicProblem, tol: SolverTolerances | None = None) -> ConicSolution:
    """Solve a ConicProblem; see ConicSolution for status semantics."""
    t0 = timed()
    tol = tol or SolverTolerances()
    cone = problem.cone
    w = _Work(
        g=problem.g_cone.tocsr(),
        gt=problem.g_cone.T.tocsr(),
        e=problem.e_eq.tocsr(),
        et=problem.e_eq.T.tocsr(),
        h=problem.h_cone,
        he=problem.h_eq,
        c=problem.c,
    )
    f = problem.n_free
    me = w.he.shape[0]
    deg = _degree(cone)
    e_vec = _identity(cone)

    u = np.zeros(f)
    y = np.zeros(me)
    s = e_vec.copy()
    z = e_vec.copy()
    tau, kappa = 1.0, 1.0

    norm_h = max(1.0, _norm(w.h), _norm(w.he))
    norm_c = max(1.0, _norm(w.c))

    best = None  # (score, it, u, y, z, s, pres, dres, relgap, pobj)

    def build_solution(status, it, uu, yy, zz, ss, pres, dres, gapres, compl, obj):
        return ConicSolution(
            status=status, u=uu, slack=ss, z_dual=zz, y_dual=yy, objective=obj,
            primal_residual=pres, dual_residual=dres, gap_residual=gapres,
            complementarity=compl, iterations=it, wall_time=timed() - t0,
        )

    def finish_from_best(status, it):
        """Return the best iterate seen; promote to Optimal if it qualifies."""
        if best is not None:
            _, bit, bu, by, bz, bs, bp, bd, bg, bo = best
            if bp <= tol.primal and bd <= tol.dual and bg <= tol.gap:
                compl = _complementarity(cone, bs, bz)
                return build_solution(
                    SolveStatus.OPTIMAL, it, bu, by, bz, bs, bp, bd, bg, compl, bo
                )
            return build_solution(
                status, it, bu, by, bz, bs, bp, bd, bg,
                _complementarity(cone, bs, bz), bo,
            )
        return build_solution(
            status, it, u / tau, y / tau, z / tau, s / tau,
            np.nan, np.nan, np.nan, np.nan, np.nan,
        )

    pres = dres = relgap = np.nan
    for it in range(tol.max_iter):
        # the embedding is homogeneous: renormalize so tau = 1
        if tau != 1.0:
            u, y, z, s = u / tau, y / tau, z / tau, s / tau
            kappa /= tau
            tau = 1.0
        # residuals of the homogeneous model
        rx = w.gt @ z + (w.et @ y if me else 0.0) + w.c * tau
        ry = (w.e @ u - w.he * tau) if me else np.zeros(0)
        rz = w.g @ u + s - w.h * tau
        cx = float(w.c @ u)
        hz = float(w.h @ z) + (float(w.he @ y) if me else 0.0)
        rt = kappa + cx + hz

        gap = float(s @ z) + tau * kappa
        mu = gap / (deg + 1)
        pobj = cx / tau
        dobj = -hz / tau
        pres = max(_norm(ry), _norm(rz)) / (tau * norm_h)
        dres = _norm(rx) / (tau * norm_c)
        gap_sz = float(s @ z) / (tau * tau)
        relgap = max(gap_sz, abs(pobj - dobj)) / max(1.0, abs(pobj))

        score = max(pres / tol.primal, dres / tol.dual, relgap / tol.gap)
        if np.isfinite(score) and (best is None or score < best[0]):
            best = (score, it, u / tau, y / tau, z / tau, s / tau,
                    pres, dres, relgap, pobj)

        if pres <= tol.primal and dres <= tol.dual and relgap <= tol.gap:
            compl = _complementarity(cone, s / tau, z / tau)
            return build_solution(
                SolveStatus.OPTIMAL, it, u / tau, y / tau, z / tau, s / tau,
                pres, dres, relgap, compl, pobj,
            )
        if hz < 0.0:
            scale = -1.0 / hz
            if _norm(w.gt @ z + (w.et @ y if me else 0.0)) * scale <= tol.primal:
                return build_solution(
                    SolveStatus.PRIMAL_INFEASIBLE, it, u * scale, y * scale,
                    z * scale, s * scale, pres, dres, relgap, np.nan, np.inf,
                )
        if cx < 0.0:
            scale = -1.0 / cx
            ray_res = max(_norm(w.g @ u + s), _norm(w.e @ u) if me else 0.0)
            if ray_res * scale <= tol.dual:
                return build_solution(
                    SolveStatus.DUAL_INFEASIBLE, it, u * scale, y * scale,
                    z * scale, s * scale, pres, dres, relgap, np.nan, -np.inf,
                )

        # scaling and KKT factorization
        try:
            sc = _Scaling(cone, s, z)
        except np.linalg.LinAlgError:
            return finish_from_best(SolveStatus.NUMERICAL_FAILURE, it)
        lam = sc.lam
        hig = sc.hinv_columns(w.g)
        m_mat = np.asarray((w.gt @ hig))
        kdim = f + me
        kkt = np.zeros((kdim, kdim))
        kkt[:f, :f] = m_mat + _REG * np.eye(f)
        if me:
            edense = np.asarray(w.e.todense())
            kkt[f:, :f] = edense
            kkt[:f, f:] = edense.T
            kkt[f:, f:] = -_REG * np.eye(me)
        try:
            lu = sla.lu_factor(kkt)
        except (np.linalg.LinAlgError, ValueError):
            return finish_from_best(SolveStatus.NUMERICAL_FAILURE, it)

        def kkt_solve(r1, r2):
            rhs = np.concatenate([r1, r2]) if me else r1
            sol = sla.lu_solve(lu, rhs)
            # refine against the exact (operator-applied, unregularized) system
            prev_res = np.inf
            for _ in range(6):
                du, dy = sol[:f], sol[f:]
                op_du = w.gt @ sc.hinv_vec(w.g @ du)
                res1 = r1 - (op_du + (w.et @ dy if me else 0.0))
                res2 = (r2 - w.e @ du) if me else np.zeros(0)
                res = np.concatenate([res1, res2]) if me else res1
                rn = _norm(res)
                if not np.isfinite(rn) or rn >= 0.5 * prev_res:
                    break
                prev_res = rn
                sol = sol + sla.lu_solve(lu, res)
            return sol[:f], sol[f:]

        # tau-column solve (shared by both directions)
        ghih = hig.T @ w.h
        u2, y2 = kkt_solve(ghih - w.c, w.he)
        z2 = sc.hinv_vec(w.g @ u2 - w.h)

        def direction(bx, by, bz, bt, ds_lam, dkap):
            dtld = _jordan_solve(cone, lam, ds_lam)
            wtd = sc.wt_apply(dtld)
            bz_t = bz - wtd
            u1, y1 = kkt_solve(bx + hig.T @ bz_t, by)
            z1 = sc.hinv_vec(w.g @ u1 - bz_t)
            denom = float(w.c @ u2) + (float(w.he @ y2) if me else 0.0) \
                + float(w.h @ z2) - kappa / tau
            numer = bt - dkap / tau - float(w.c @ u1) \
                - (float(w.he @ y1) if me else 0.0) - float(w.h @ z1)
            if abs(denom) < 1e-300:
                raise FloatingPointError("singular tau equation")
            dtau = numer / denom
            du = u1 + dtau * u2
            dy = (y1 + dtau * y2) if me else y1
            ds = bz - w.g @ du + w.h * dtau
            # recover dz through W^{-1} (better conditioned than H^{-1})
            dz = sc.winv_apply_z(dtld - sc.winv_t_apply_s(ds))
            dkappa = (dkap - kappa * dtau) / tau
            return du, dy, dz, ds, dtau, dkappa

        try:
            # affine (predictor) direction
            da = direction(-rx, -ry, -rz, -rt, -_jordan_prod(cone, lam, lam),
                           -tau * kappa)
            du_a, dy_a, dz_a, ds_a, dtau_a, dkap_a = da
            ds_sc_a = sc.winv_t_apply_s(ds_a)
            dz_sc_a = sc.w_apply_z(dz_a)
            alpha_a = min(
                _max_step(cone, lam, ds_sc_a),
                _max_step(cone, lam, dz_sc_a),
                (-tau / dtau_a) if dtau_a < 0 else np.inf,
                (-kappa / dkap_a) if dkap_a < 0 else np.inf,
                1.0,
            )
            gap_a = float((s + alpha_a * ds_a) @ (z + alpha_a * dz_a)) \
                + (tau + alpha_a * dtau_a) * (kappa + alpha_a * dkap_a)
            sigma = min(0.995, max(0.0, gap_a / gap) ** 3)

            # combined (corrector) direction
            ds_lam = sigma * mu * e_vec - _jordan_prod(cone, lam, lam) \
                - _jordan_prod(cone, ds_sc_a, dz_sc_a)
            dkap = sigma * mu - tau * kappa - dtau_a * dkap_a
            eta = 1.0 - sigma
            dc = direction(-eta * rx, -eta * ry, -eta * rz, -eta * rt,
                           ds_lam, dkap)
        except (FloatingPointError, np.linalg.LinAlgError):
            return finish_from_best(SolveStatus.NUMERICAL_FAILURE, it)
        du, dy, dz, ds, dtau, dkappa = dc
        if not all(np.all(np.isfinite(v)) for v in (du, dz, ds)) or not np.isfinite(dtau):
            return finish_from_best(SolveStatus.NUMERICAL_FAILURE, it)

        alpha = min(
            _max_step(cone, lam, sc.winv_t_apply_s(ds)),
            _max_step(cone, lam, sc.w_apply_z(dz)),
            (-tau / dtau) if dtau < 0 else np.inf,
            (-kappa / dkappa) if dkappa < 0 else np.inf,
        )
        alpha = min(1.0, _STEP * alpha)
        if alpha < _MIN_STEP:
            return finish_from_best(SolveStatus.NUMERICAL_FAILURE, it)
        u = u + alpha * du
        if me:
            y = y + alpha * dy
        z = z + alpha * dz
        s = s + alpha * ds
        tau += alpha * dtau
        kappa += alpha * dkappa

    return finish_from_best(SolveStatus.ITER_LIMIT, tol.max_iter)


def _complementarity(cone: ConeSpec, s: np.ndarray, z: np.ndarray) -> float:
    worst = 0.0
    for sl in cone.slices():
        worst = max(worst, abs(float(s[sl] @ z[sl])))
    return worst
