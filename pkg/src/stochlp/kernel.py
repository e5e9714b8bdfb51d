"""Self-contained LP and diagonal-QP solver.

The LP method is a bounded-variable revised simplex with a composite
(infeasibility-minimizing) phase 1, an explicit basis inverse with periodic
refactorization, and Bland's rule engaged after a degeneracy stall.  The QP
method is a primal-dual interior point specialized to diagonal Hessians.

Dual sign convention, used unchanged by every consumer in this package:
for a minimization instance the row multipliers ``y`` satisfy

    reduced costs  z = c - A^T y,   z_j >= 0 at lower bounds, <= 0 at upper,

so the dual of an active ``>=`` row is ``>= 0`` and of an active ``<=`` row
is ``<= 0``.  The dual objective is ``y^T rhs + sum_j z_j * (bound of j)``
over nonbasic variables.  For maximization instances the kernel negates the
objective internally and negates ``y`` and ``z`` on the way out, so the
reported multipliers are shadow prices of the declared objective.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.sparse as sp

from .errors import NumericalBreakdown, UnsupportedQuadratic
from .model import LPInstance

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
ITERATION_LIMIT = "iteration_limit"

# nonbasic-at-lower, nonbasic-at-upper, basic, nonbasic-free-at-zero
_AT_LB, _AT_UB, _BASIC, _FREE = 0, 1, 2, 3


@dataclass
class KernelConfig:
    feas_tol: float = 1e-8
    opt_tol: float = 1e-8
    max_iterations: int = 50000
    pivot_rule: str = "dantzig"    # dantzig (Bland after a stall) | bland
    stall_limit: int = 50          # degenerate pivots before Bland's rule engages
    refactor_every: int = 60
    ipm_max_iterations: int = 100

    def __post_init__(self):
        if self.feas_tol <= 0 or self.opt_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.pivot_rule not in ("dantzig", "bland"):
            raise ValueError(f"unknown pivot rule {self.pivot_rule!r}")


DEFAULT_CONFIG = KernelConfig()


@dataclass
class Basis:
    """Opaque warm-start token: basic column indices and nonbasic statuses."""

    basic: np.ndarray
    vstat: np.ndarray


@dataclass
class LPSolution:
    status: str
    x: np.ndarray = None
    objective: float = np.nan
    duals: np.ndarray = None
    reduced_costs: np.ndarray = None
    farkas: np.ndarray = None      # row certificate when infeasible
    basis: Basis = None
    iterations: int = 0
    extras: dict = field(default_factory=dict)

    @property
    def is_optimal(self):
        return self.status == OPTIMAL


def _dense(A):
    return A.toarray() if sp.issparse(A) else np.asarray(A, dtype=float)


def _slack_bounds(sense):
    # a_i x + s_i = rhs_i
    if sense == "<=":
        return 0.0, np.inf
    if sense == ">=":
        return -np.inf, 0.0
    return 0.0, 0.0


class _Tableau:
    """Equality-form working problem: [A | I] z = b with bounds on z."""

    def __init__(self, lp: LPInstance):
        A = _dense(lp.A)
        m, n = A.shape
        self.m, self.n = m, n
        self.N = n + m
        self.A = np.hstack([A, np.eye(m)])
        self.b = lp.rhs.astype(float).copy()
        self.lb = np.concatenate([lp.lb, np.zeros(m)])
        self.ub = np.concatenate([lp.ub, np.zeros(m)])
        for i, s in enumerate(lp.row_senses):
            lo, hi = _slack_bounds(s)
            self.lb[n + i] = lo
            self.ub[n + i] = hi
        self.c = np.concatenate([lp.c, np.zeros(m)])


def _initial_point(tab, warm):
    """Pick a starting basis: the warm token when usable, else the slack basis."""
    N, m = tab.N, tab.m
    if warm is not None and isinstance(warm, Basis) and warm.basic.size == m \
            and warm.vstat.size == N:
        basic = warm.basic.astype(int).copy()
        vstat = warm.vstat.astype(np.int8).copy()
        try:
            Binv = np.linalg.inv(tab.A[:, basic])
            return basic, vstat, Binv
        except np.linalg.LinAlgError:
            pass
    basic = np.arange(tab.n, tab.N)
    vstat = np.empty(N, dtype=np.int8)
    for j in range(tab.n):
        lo, hi = tab.lb[j], tab.ub[j]
        if np.isinf(lo) and np.isinf(hi):
            vstat[j] = _FREE
        elif np.isinf(lo):
            vstat[j] = _AT_UB
        elif np.isinf(hi):
            vstat[j] = _AT_LB
        else:
            vstat[j] = _AT_LB if abs(lo) <= abs(hi) else _AT_UB
    vstat[tab.n:] = _BASIC
    return basic, vstat, np.eye(m)


def _nonbasic_values(tab, vstat):
    xv = np.zeros(tab.N)
    at_lb = vstat == _AT_LB
    at_ub = vstat == _AT_UB
    xv[at_lb] = tab.lb[at_lb]
    xv[at_ub] = tab.ub[at_ub]
    return xv


def _simplex(tab, cfg, warm=None):
    """Core bounded simplex.  Returns dict with status and final state."""
    feas, dtol = cfg.feas_tol, cfg.opt_tol
    basic, vstat, Binv = _initial_point(tab, warm)
    A, b, lb, ub, c = tab.A, tab.b, tab.lb, tab.ub, tab.c
    N, m = tab.N, tab.m

    xv = _nonbasic_values(tab, vstat)
    nonbasic_mask = vstat != _BASIC
    x_B = Binv @ (b - A[:, nonbasic_mask] @ xv[nonbasic_mask])

    fixed = lb == ub
    bland = cfg.pivot_rule == "bland"
    stall = 0
    last_obj = np.inf
    since_refactor = 0

    def refactor():
        nonlocal Binv, x_B, since_refactor
        try:
            Binv = np.linalg.inv(A[:, basic])
        except np.linalg.LinAlgError:
            raise NumericalBreakdown("singular basis during refactorization") from None
        nb = vstat != _BASIC
        x_B = Binv @ (b - A[:, nb] @ xv[nb])
        since_refactor = 0

    for it in range(cfg.max_iterations):
        lo_B, hi_B = lb[basic], ub[basic]
        below = x_B < lo_B - feas
        above = x_B > hi_B + feas
        phase1 = bool(below.any() or above.any())

        if phase1:
            w = above.astype(float) - below.astype(float)
            y = w @ Binv
            z = -(y @ A)
            obj = np.sum(x_B[above] - hi_B[above]) + np.sum(lo_B[below] - x_B[below])
        else:
            y = c[basic] @ Binv
            z = c - y @ A
            obj = c[basic] @ x_B + c[vstat == _AT_LB] @ xv[vstat == _AT_LB] \
                + c[vstat == _AT_UB] @ xv[vstat == _AT_UB]

        # pricing
        viol = np.zeros(N)
        sel = (vstat == _AT_LB) & ~fixed
        viol[sel] = np.maximum(0.0, -z[sel])
        sel = vstat == _AT_UB
        viol[sel] = np.maximum(0.0, z[sel])
        sel = vstat == _FREE
        viol[sel] = np.abs(z[sel])
        viol[viol <= dtol] = 0.0

        if not viol.any():
            if phase1:
                return {"status": INFEASIBLE, "farkas": y.copy(), "basic": basic,
                        "vstat": vstat, "x_B": x_B, "xv": xv, "iterations": it,
                        "infeasibility": obj}
            return {"status": OPTIMAL, "basic": basic, "vstat": vstat, "x_B": x_B,
                    "xv": xv, "y": y, "z": z, "iterations": it}

        if bland:
            j = int(np.flatnonzero(viol)[0])
        else:
            j = int(np.argmax(viol))
        if vstat[j] == _AT_LB or (vstat[j] == _FREE and z[j] < 0):
            direction = 1.0
        else:
            direction = -1.0

        d = Binv @ A[:, j]
        rate = -direction * d

        # ratio test: blocking step for each basic variable
        t_best = np.inf
        if vstat[j] != _FREE and np.isfinite(lb[j]) and np.isfinite(ub[j]):
            t_best = ub[j] - lb[j]
        leave = -1
        leave_to = _AT_LB
        piv_tol = 1e-11
        up = rate > piv_tol
        dn = rate < -piv_tol
        cand = np.flatnonzero(up | dn)
        t_cand = np.full(cand.size, np.inf)
        bound_cand = np.zeros(cand.size, dtype=np.int8)
        for k, i in enumerate(cand):
            if rate[i] > 0:
                if x_B[i] < lo_B[i] - feas:
                    tgt, bound_cand[k] = lo_B[i], _AT_LB       # rises back to its lower bound
                elif x_B[i] > hi_B[i] + feas:
                    continue                                    # already above, moving away
                else:
                    tgt, bound_cand[k] = hi_B[i], _AT_UB
            else:
                if x_B[i] > hi_B[i] + feas:
                    tgt, bound_cand[k] = hi_B[i], _AT_UB        # falls back to its upper bound
                elif x_B[i] < lo_B[i] - feas:
                    continue                                    # already below, moving away
                else:
                    tgt, bound_cand[k] = lo_B[i], _AT_LB
            if np.isfinite(tgt):
                t_cand[k] = max(0.0, (tgt - x_B[i]) / rate[i])

        if cand.size:
            kmin = int(np.argmin(t_cand))
            t_row = t_cand[kmin]
            if t_row < t_best - 1e-12:
                near = np.flatnonzero(t_cand <= t_row + 1e-10)
                if bland:
                    kpick = near[int(np.argmin(basic[cand[near]]))]
                else:
                    kpick = near[int(np.argmax(np.abs(d[cand[near]])))]
                leave = int(cand[kpick])
                leave_to = bound_cand[kpick]
                t_best = t_cand[kpick]

        if not np.isfinite(t_best):
            if phase1:
                raise NumericalBreakdown("phase-1 reported an unbounded improving ray")
            return {"status": UNBOUNDED, "basic": basic, "vstat": vstat, "x_B": x_B,
                    "xv": xv, "iterations": it, "ray_col": j, "ray_dir": direction}

        # stall / anti-cycling bookkeeping
        if obj >= last_obj - 1e-12 * (1.0 + abs(last_obj)):
            stall += 1
            if stall > cfg.stall_limit:
                bland = True
        else:
            stall = 0
            bland = cfg.pivot_rule == "bland"
        last_obj = obj

        start = xv[j] if vstat[j] != _FREE else 0.0
        x_B = x_B + t_best * rate
        if leave < 0:
            # bound flip, basis unchanged
            vstat[j] = _AT_UB if vstat[j] == _AT_LB else _AT_LB
            xv[j] = ub[j] if vstat[j] == _AT_UB else lb[j]
            continue

        pivot = d[leave]
        if abs(pivot) < 1e-11:
            refactor()
            continue
        out_col = basic[leave]
        vstat[out_col] = leave_to
        xv[out_col] = lb[out_col] if leave_to == _AT_LB else ub[out_col]
        basic[leave] = j
        vstat[j] = _BASIC
        x_B[leave] = start + direction * t_best
        row = Binv[leave] / pivot
        Binv -= np.outer(d, row)
        Binv[leave] = row
        since_refactor += 1
        if since_refactor >= cfg.refactor_every:
            refactor()

    return {"status": ITERATION_LIMIT, "basic": basic, "vstat": vstat, "x_B": x_B,
            "xv": xv, "iterations": cfg.max_iterations}


def _assemble(tab, res, lp, cfg, flip):
    """Build the user-facing solution from the simplex end state."""
    basic, vstat, x_B, xv = res["basic"], res["vstat"], res["x_B"], res["xv"]
    x_full = xv.copy()
    x_full[basic] = x_B
    x = x_full[:tab.n]
    sol = LPSolution(status=res["status"], x=x,
                     basis=Basis(basic.copy(), vstat.copy()),
                     iterations=res["iterations"])
    sgn = -1.0 if flip else 1.0
    if res["status"] == OPTIMAL:
        y = res["y"]
        z = res["z"]
        sol.objective = sgn * (tab.c @ x_full) + lp.c0
        sol.duals = sgn * y
        sol.reduced_costs = sgn * z[:tab.n]
    elif res["status"] == INFEASIBLE:
        sol.farkas = res["farkas"]
        sol.extras["infeasibility"] = res["infeasibility"]
    elif res["status"] == ITERATION_LIMIT:
        sol.objective = sgn * (tab.c @ x_full) + lp.c0
    return sol


def solve_lp(lp: LPInstance, cfg: KernelConfig = None, warm_start: Basis = None) -> LPSolution:
    """Solve a linear instance; quadratic terms are rejected."""
    if lp.is_quadratic:
        raise ValueError("solve_lp requires a linear instance; use solve_qp_diagonal")
    cfg = cfg or DEFAULT_CONFIG
    flip = lp.sense == "max"
    work = lp if not flip else LPInstance(
        c=-lp.c, A=lp.A, rhs=lp.rhs, row_senses=lp.row_senses, lb=lp.lb, ub=lp.ub,
        c0=0.0, sense="min")
    tab = _Tableau(work)
    res = _simplex(tab, cfg, warm=warm_start)
    return _assemble(tab, res, lp, cfg, flip)


def certificate_gap(lp: LPInstance, y: np.ndarray, tol: float = 1e-7) -> float:
    """Certified infeasibility margin of a Farkas row certificate.

    Positive means ``y`` proves that no point within the bounds satisfies
    the rows: y^T rhs exceeds the supremum of y^T A x over the bound box
    (slack senses included).  Coefficients within ``tol`` of the cone are
    treated as exactly on it.
    """
    A = _dense(lp.A)
    coef = y @ A
    scale = max(1.0, np.abs(y).max(initial=0.0))
    sup = 0.0
    for j in range(lp.nvars):
        a = coef[j]
        if abs(a) <= tol * scale:
            continue
        if a > 0:
            hi = lp.ub[j]
            if np.isinf(hi):
                return -np.inf
            sup += a * hi
        else:
            lo = lp.lb[j]
            if np.isinf(lo):
                return -np.inf
            sup += a * lo
    for i, s in enumerate(lp.row_senses):
        lo, hi = _slack_bounds(s)
        a = y[i]
        if abs(a) <= tol * scale:
            continue
        if a > 0 and np.isinf(hi):
            return -np.inf
        if a < 0 and np.isinf(lo):
            return -np.inf
        # finite slack bounds contribute 0 (both bounds are 0)
    return float(y @ lp.rhs - sup)


def primal_violation(lp: LPInstance, x: np.ndarray) -> float:
    """Largest bound or row violation of a candidate point."""
    A = _dense(lp.A)
    ax = A @ x
    v = max(np.max(lp.lb - x, initial=0.0), np.max(x - lp.ub, initial=0.0))
    for i, s in enumerate(lp.row_senses):
        if s == "<=":
            v = max(v, ax[i] - lp.rhs[i])
        elif s == ">=":
            v = max(v, lp.rhs[i] - ax[i])
        else:
            v = max(v, abs(ax[i] - lp.rhs[i]))
    return float(v)


# ---------------------------------------------------------------------------
# diagonal QP: primal-dual interior point


def _qp_parts(lp: LPInstance):
    """Split into equality rows (A_E, b_E) and inequality rows (G x <= g)."""
    A = _dense(lp.A)
    n = lp.nvars
    eq_rows, eq_rhs, g_rows, g_rhs = [], [], [], []
    for i, s in enumerate(lp.row_senses):
        if s == "=":
            eq_rows.append(A[i])
            eq_rhs.append(lp.rhs[i])
        elif s == "<=":
            g_rows.append((A[i], 1.0))
            g_rhs.append(lp.rhs[i])
        else:
            g_rows.append((-A[i], -1.0))
            g_rhs.append(-lp.rhs[i])
    fixed = lp.lb == lp.ub
    for j in np.flatnonzero(fixed):
        e = np.zeros(n)
        e[j] = 1.0
        eq_rows.append(e)
        eq_rhs.append(lp.lb[j])
    for j in range(n):
        if fixed[j]:
            continue
        if np.isfinite(lp.ub[j]):
            e = np.zeros(n)
            e[j] = 1.0
            g_rows.append((e, 1.0))
            g_rhs.append(lp.ub[j])
        if np.isfinite(lp.lb[j]):
            e = np.zeros(n)
            e[j] = -1.0
            g_rows.append((e, 1.0))
            g_rhs.append(-lp.lb[j])
    AE = np.array(eq_rows) if eq_rows else np.zeros((0, n))
    bE = np.array(eq_rhs) if eq_rhs else np.zeros(0)
    G = np.array([r for r, _ in g_rows]) if g_rows else np.zeros((0, n))
    g = np.array(g_rhs) if g_rhs else np.zeros(0)
    return AE, bE, G, g


def _qp_start(lp, G, g):
    n = lp.nvars
    if lp.qcenter is not None:
        x0 = lp.qcenter.copy()
    else:
        x0 = np.zeros(n)
    lo, hi = lp.lb, lp.ub
    both = np.isfinite(lo) & np.isfinite(hi)
    x0[both] = np.clip(x0[both], lo[both], hi[both])
    only_lo = np.isfinite(lo) & ~np.isfinite(hi)
    x0[only_lo] = np.maximum(x0[only_lo], lo[only_lo] + 1.0)
    only_hi = ~np.isfinite(lo) & np.isfinite(hi)
    x0[only_hi] = np.minimum(x0[only_hi], hi[only_hi] - 1.0)
    s0 = np.maximum(g - G @ x0, 1.0) if g.size else np.zeros(0)
    lam0 = np.ones_like(s0)
    return x0, s0, lam0


def solve_qp_diagonal(lp: LPInstance, cfg: KernelConfig = None,
                      warm_start=None) -> LPSolution:
    """Solve min c^T x + c0 + 1/2 sum qdiag (x - qcenter)^2 over the LP region.

    Mehrotra predictor-corrector on the inequality form; equality rows and
    fixed variables enter the KKT system directly.  Also accepts purely
    linear instances (qdiag of zeros).
    """
    cfg = cfg or DEFAULT_CONFIG
    if lp.sense == "max":
        raise UnsupportedQuadratic("maximization with quadratic terms is not supported")
    n = lp.nvars
    D = lp.qdiag if lp.qdiag is not None else np.zeros(n)
    z0 = lp.qcenter if lp.qcenter is not None else np.zeros(n)
    AE, bE, G, g = _qp_parts(lp)
    mE, mI = AE.shape[0], G.shape[0]
    scale = max(1.0, np.abs(lp.c).max(initial=0.0), np.abs(lp.rhs).max(initial=0.0),
                np.abs(bE).max(initial=0.0))
    tol = cfg.opt_tol * (1.0 + scale)

    if warm_start is not None and isinstance(warm_start, dict) and "x" in warm_start:
        x = np.asarray(warm_start["x"], dtype=float).copy()
        s = np.maximum(g - G @ x, 1e-2) if mI else np.zeros(0)
        lam = np.maximum(np.asarray(warm_start.get("lam", np.ones(mI))), 1e-2) \
            if mI else np.zeros(0)
        y = np.asarray(warm_start.get("y", np.zeros(mE)), dtype=float).copy() \
            if mE else np.zeros(0)
        if lam.size != mI:
            lam = np.ones(mI)
        if y.size != mE:
            y = np.zeros(mE)
    else:
        x, s, lam = _qp_start(lp, G, g)
        y = np.zeros(mE)

    delta = 1e-10
    best = None
    for it in range(cfg.ipm_max_iterations):
        rd = D * (x - z0) + lp.c + (AE.T @ y if mE else 0.0) + (G.T @ lam if mI else 0.0)
        rE = AE @ x - bE if mE else np.zeros(0)
        rI = G @ x + s - g if mI else np.zeros(0)
        mu = (s @ lam) / mI if mI else 0.0
        err = max(np.abs(rd).max(initial=0.0), np.abs(rE).max(initial=0.0),
                  np.abs(rI).max(initial=0.0), mu)
        if best is None or err < best[0]:
            best = (err, x.copy(), y.copy(), lam.copy(), s.copy())
        if err <= tol:
            return _qp_solution(lp, x, y, lam, AE, G, D, z0, OPTIMAL, it)
        if not np.isfinite(err) or np.abs(x).max(initial=0.0) > 1e13:
            return LPSolution(status=UNBOUNDED, x=x, iterations=it)

        lu = None
        reg = delta
        while lu is None and reg <= 1e-4:
            if mI:
                with np.errstate(all="ignore"):
                    w = np.clip(lam / np.maximum(s, 1e-300), 0.0, 1e14)
                M = np.diag(D + reg) + (G.T * w) @ G
            else:
                M = np.diag(D + reg)
            if mE:
                K = np.block([[M, AE.T], [AE, -reg * np.eye(mE)]])
            else:
                K = M
            if not np.all(np.isfinite(K)):
                return LPSolution(status=ITERATION_LIMIT, x=best[1], iterations=it)
            try:
                import warnings as _warnings
                with np.errstate(all="ignore"), _warnings.catch_warnings():
                    _warnings.simplefilter("error", scipy.linalg.LinAlgWarning)
                    lu = scipy.linalg.lu_factor(K)
                    probe = scipy.linalg.lu_solve(lu, np.ones(K.shape[0]))
                if not np.all(np.isfinite(probe)):
                    lu = None
            except (ValueError, np.linalg.LinAlgError, scipy.linalg.LinAlgWarning):
                lu = None
            if lu is None:
                reg = max(reg * 100.0, 1e-9)
        if lu is None:
            return LPSolution(status=ITERATION_LIMIT, x=best[1], iterations=it)

        def newton(rc):
            rhs_x = -rd
            if mI:
                rhs_x = rhs_x - G.T @ ((-rc + lam * rI) / s)
            rhs = np.concatenate([rhs_x, -rE]) if mE else rhs_x
            d = scipy.linalg.lu_solve(lu, rhs)
            dx = d[:n]
            dy = d[n:] if mE else np.zeros(0)
            if mI:
                ds = -rI - G @ dx
                dlam = (-rc - lam * ds) / s
            else:
                ds = np.zeros(0)
                dlam = np.zeros(0)
            return dx, dy, ds, dlam

        def steplen(v, dv):
            neg = dv < 0
            if not neg.any():
                return 1.0
            return min(1.0, 0.995 * np.min(-v[neg] / dv[neg]))

        if mI:
            rc_aff = s * lam
            dxa, dya, dsa, dla = newton(rc_aff)
            ap = steplen(s, dsa)
            ad = steplen(lam, dla)
            mu_aff = ((s + ap * dsa) @ (lam + ad * dla)) / mI
            sigma = (mu_aff / mu) ** 3 if mu > 0 else 0.1
            rc = s * lam - sigma * mu + dsa * dla
            dx, dy, ds, dlam = newton(rc)
            ap = steplen(s, ds)
            ad = steplen(lam, dlam)
        else:
            dx, dy, ds, dlam = newton(np.zeros(0))
            ap = ad = 1.0
        if not (np.all(np.isfinite(dx)) and np.all(np.isfinite(ds))
                and np.all(np.isfinite(dlam))):
            return LPSolution(status=ITERATION_LIMIT, x=best[1], iterations=it)
        x = x + ap * dx
        s = s + ap * ds
        y = y + ad * dy
        lam = lam + ad * dlam

    return _qp_solution(lp, best[1], best[2], best[3], AE, G, D, z0, ITERATION_LIMIT,
                        cfg.ipm_max_iterations)


def _qp_solution(lp, x, y, lam, AE, G, D, z0, status, iters):
    obj = float(lp.c @ x + lp.c0 + 0.5 * np.sum(D * (x - z0) ** 2))
    # fold the IPM multipliers back into the package's row-dual convention
    duals = np.zeros(lp.nrows)
    ie = 0
    ii = 0
    for i, sns in enumerate(lp.row_senses):
        if sns == "=":
            duals[i] = -y[ie]
            ie += 1
        elif sns == "<=":
            duals[i] = -lam[ii]
            ii += 1
        else:
            duals[i] = lam[ii]
            ii += 1
    A = _dense(lp.A)
    grad = lp.c + D * (x - z0)
    red = grad - A.T @ duals
    sol = LPSolution(status=status, x=x, objective=obj, duals=duals,
                     reduced_costs=red, iterations=iters)
    sol.extras["ipm_state"] = {"x": x.copy(), "lam": lam.copy(), "y": y.copy()}
    sol.extras["kkt_residual"] = _kkt_residual(lp, x, duals, AE, G, D, z0)
    return sol


def _kkt_residual(lp, x, duals, AE, G, D, z0):
    stat = primal_violation(lp, x)
    return float(stat)


def linearize_penalty(lp: LPInstance, norm: str = "one") -> LPInstance:
    """Replace a proximal term r/2 ||x - center||^2 by r ||x - center||_1 or _inf.

    The quadratic coefficient must be one value r shared by every penalized
    coordinate.  The returned instance appends auxiliary columns after the
    original variables; slice the primal solution to ``lp.nvars`` to recover x.
    """
    if lp.qdiag is None or not np.any(lp.qdiag > 0):
        raise UnsupportedQuadratic("instance has no quadratic term to linearize")
    idx = np.flatnonzero(lp.qdiag > 0)
    r_vals = lp.qdiag[idx]
    if np.max(r_vals) - np.min(r_vals) > 1e-12 * max(1.0, np.max(r_vals)):
        raise UnsupportedQuadratic("quadratic term is not a uniform proximal penalty")
    r = float(r_vals[0])
    center = lp.qcenter[idx]
    A = _dense(lp.A)
    n, m = lp.nvars, lp.nrows
    k = idx.size
    if norm == "one":
        # x_i - p_i + n_i = center_i, objective += r (p_i + n_i)
        nv = n + 2 * k
        A2 = np.zeros((m + k, nv))
        A2[:m, :n] = A
        rhs2 = np.concatenate([lp.rhs, center])
        senses2 = lp.row_senses + ("=",) * k
        for t, j in enumerate(idx):
            A2[m + t, j] = 1.0
            A2[m + t, n + t] = -1.0
            A2[m + t, n + k + t] = 1.0
        c2 = np.concatenate([lp.c, np.full(2 * k, r)])
        lb2 = np.concatenate([lp.lb, np.zeros(2 * k)])
        ub2 = np.concatenate([lp.ub, np.full(2 * k, np.inf)])
    elif norm == "inf":
        # x_i - t <= center_i and -x_i - t <= -center_i, objective += r t
        nv = n + 1
        A2 = np.zeros((m + 2 * k, nv))
        A2[:m, :n] = A
        rhs2 = np.concatenate([lp.rhs, center, -center])
        senses2 = lp.row_senses + ("<=",) * (2 * k)
        for t, j in enumerate(idx):
            A2[m + t, j] = 1.0
            A2[m + t, n] = -1.0
            A2[m + k + t, j] = -1.0
            A2[m + k + t, n] = -1.0
        c2 = np.concatenate([lp.c, [r]])
        lb2 = np.concatenate([lp.lb, [0.0]])
        ub2 = np.concatenate([lp.ub, [np.inf]])
    else:
        raise ValueError(f"norm must be 'one' or 'inf', got {norm!r}")
    return LPInstance(c=c2, A=A2, rhs=rhs2, row_senses=senses2, lb=lb2, ub=ub2,
                      c0=lp.c0, sense=lp.sense)


# ---------------------------------------------------------------------------
# diagnostics and the external-solver hook


def write_mps(lp: LPInstance, name: str = "STOCHLP") -> str:
    """Free-format MPS text for a linear instance (diagnostic dump)."""
    A = _dense(lp.A)
    cols = lp.col_names or tuple(f"C{j + 1}" for j in range(lp.nvars))
    rows = lp.row_names or tuple(f"R{i + 1}" for i in range(lp.nrows))
    sense_code = {"<=": "L", ">=": "G", "=": "E"}
    out = [f"NAME {name}", "ROWS", " N OBJ"]
    for i, s in enumerate(lp.row_senses):
        out.append(f" {sense_code[s]} {rows[i]}")
    out.append("COLUMNS")
    for j in range(lp.nvars):
        if lp.c[j] != 0.0:
            out.append(f" {cols[j]} OBJ {lp.c[j]:.17g}")
        for i in np.flatnonzero(A[:, j]):
            out.append(f" {cols[j]} {rows[i]} {A[i, j]:.17g}")
    out.append("RHS")
    for i in np.flatnonzero(lp.rhs):
        out.append(f" RHS {rows[i]} {lp.rhs[i]:.17g}")
    out.append("BOUNDS")
    for j in range(lp.nvars):
        lo, hi = lp.lb[j], lp.ub[j]
        if lo == hi:
            out.append(f" FX BND {cols[j]} {lo:.17g}")
            continue
        if np.isinf(lo) and np.isinf(hi):
            out.append(f" FR BND {cols[j]}")
            continue
        if np.isinf(lo):
            out.append(f" MI BND {cols[j]}")
        elif lo != 0.0:
            out.append(f" LO BND {cols[j]} {lo:.17g}")
        if np.isfinite(hi):
            out.append(f" UP BND {cols[j]} {hi:.17g}")
    out.append("ENDATA")
    return "\n".join(out) + "\n"


class SolverHook:
    """Replaceable solver interface; the built-in kernel is the default."""

    def solve_lp(self, lp, cfg=None, warm_start=None):
        return solve_lp(lp, cfg, warm_start)

    def solve_qp_diagonal(self, lp, cfg=None, warm_start=None):
        return solve_qp_diagonal(lp, cfg, warm_start)


BUILTIN = SolverHook()
