"""L-shaped decomposition: master with optimality and feasibility cuts.

Scenario subproblems are solved at each candidate x; feasible subproblems
yield support-function (optimality) cuts from their duals, infeasible ones
yield feasibility cuts from the phase-1 certificate.  Cut aggregation
(single / multi / partial bundles), cut consolidation, and trust-region /
regularized-decomposition / level-set master policies are all composable
with serial, synchronous, and asynchronous execution.

Bounds on second-stage variables are supported directly: each cut's rhs
absorbs the constant dual bound contribution, so the cut is tight at the
generating candidate and remains a valid global under-estimator.

Under asynchronous execution the work item is one aggregation bundle, so
single-cut mode degenerates to one item per version; cut violation is
checked against the (x, theta) pair of the version that generated the cut.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import kernel
from .errors import (
    ConfigError,
    MasterInfeasible,
    MixedOutcome,
    NotInfeasible,
    UnboundedSubproblem,
)
from .execution import ExecConfig, VersionedDecision, WorkItem, run_async, run_wave
from .kernel import KernelConfig
from .model import LPInstance, TwoStageProblem
from .report import SolveReport


@dataclass
class LShapedConfig:
    cuts: str = "multi"                 # single | multi | partial
    bundle_size: int = 1                # partial aggregation bundle size
    regularization: str = "none"        # none | tr | rd | level
    tr_delta0: float = None             # default max(1, 0.1 * |x0|_inf)
    tr_delta_max: float = 1e6
    tr_gamma: float = 2.0
    tr_eta: float = 1e-4
    rd_sigma0: float = 1.0
    level_lambda: float = 0.5
    consolidation: bool = False
    consolidation_threshold: int = 5    # inactive master solves before removal
    consolidation_period: int = 5
    gap_tol: float = 1e-6
    max_iterations: int = 1000
    theta_min: float = -1e10
    execution: ExecConfig = field(default_factory=ExecConfig)
    kernel: KernelConfig = field(default_factory=KernelConfig)

    def __post_init__(self):
        if self.cuts not in ("single", "multi", "partial"):
            raise ConfigError(f"cut mode must be single, multi or partial, got {self.cuts!r}")
        if self.bundle_size < 1:
            raise ConfigError("bundle_size must be >= 1")
        if self.regularization not in ("none", "tr", "rd", "level"):
            raise ConfigError(f"unknown regularization {self.regularization!r}")
        if not 0.0 < self.level_lambda < 1.0:
            raise ConfigError("level parameter must lie in (0, 1)")


@dataclass
class Cut:
    kind: str                  # optimality | feasibility
    gradient: np.ndarray       # over x
    rhs: float
    source: frozenset
    iteration: int = 0
    aggregate: int = -1        # theta slot (optimality cuts only)

    def value_at(self, x):
        """Support value rhs - gradient . x (the lower bound this cut puts on theta)."""
        return self.rhs - float(self.gradient @ x)


@dataclass
class SubproblemOutcome:
    scenario: int
    feasible: bool
    value: float               # Q_s(x) when feasible, w_s > 0 otherwise
    duals: np.ndarray          # lambda_s or sigma_s (row multipliers)
    cut_const: float           # dual bound-term constant, folds into the cut rhs
    y: np.ndarray = None
    wall: float = 0.0


def scenario_lp(shape, scenario, x) -> LPInstance:
    """Second-stage LP of one scenario at a fixed first-stage point."""
    T = scenario.T if isinstance(scenario.T, np.ndarray) else np.asarray(scenario.T.todense())
    lo, hi = scenario.bounds(shape)
    return LPInstance(c=scenario.q, A=shape.W, rhs=scenario.h - T @ x,
                      row_senses=scenario.senses(shape), lb=lo, ub=hi)


def solve_subproblem(shape, scenario, x, cfg: KernelConfig = None, warm=None,
                     scenario_index=0, solver=None) -> SubproblemOutcome:
    """Solve one scenario subproblem, returning duals for cut construction.

    Feasible: Q_s(x) with duals lambda such that
    Q_s(x') >= lambda^T (h - T x') + cut_const for every x'.  Infeasible:
    the phase-1 value w_s > 0 with certificate sigma satisfying the same
    support inequality for the infeasibility measure.
    """
    t0 = time.perf_counter()
    lp = scenario_lp(shape, scenario, x)
    solver = solver or kernel.BUILTIN
    sol = solver.solve_lp(lp, cfg, warm_start=warm)
    T = scenario.T
    hTx = lp.rhs
    if sol.status == kernel.OPTIMAL:
        lam = sol.duals
        const = sol.objective - float(lam @ hTx)
        return SubproblemOutcome(scenario=scenario_index, feasible=True,
                                 value=sol.objective, duals=lam, cut_const=const,
                                 y=sol.x, wall=time.perf_counter() - t0), sol.basis
    if sol.status == kernel.INFEASIBLE:
        sigma = sol.farkas
        w = sol.extras.get("infeasibility", float(np.nan))
        const = w - float(sigma @ hTx)
        return SubproblemOutcome(scenario=scenario_index, feasible=False,
                                 value=w, duals=sigma, cut_const=const,
                                 wall=time.perf_counter() - t0), None
    if sol.status == kernel.UNBOUNDED:
        raise UnboundedSubproblem(scenario_index)
    raise kernel.NumericalBreakdown(
        f"subproblem {scenario_index} ended with status {sol.status}")


def make_optimality_cut(outcomes, probabilities, aggregate=0, iteration=0) -> Cut:
    """Probability-weighted aggregate cut over the given feasible outcomes."""
    grad = None
    rhs = 0.0
    source = set()
    for out, pi in zip(outcomes, probabilities):
        if not out.feasible:
            raise MixedOutcome(f"scenario {out.scenario} outcome is a feasibility outcome")
        g = pi * (out.duals @ _scenario_T(out))
        grad = g if grad is None else grad + g
        rhs += pi * (float(out.duals @ _scenario_h(out)) + out.cut_const)
        source.add(out.scenario)
    return Cut(kind="optimality", gradient=grad, rhs=rhs, source=frozenset(source),
               iteration=iteration, aggregate=aggregate)


def make_feasibility_cut(outcome, iteration=0) -> Cut:
    """Half-space sigma^T T x >= sigma^T h + const excluding the infeasible candidate."""
    if outcome.feasible:
        raise NotInfeasible(f"scenario {outcome.scenario} is feasible; no cut to build")
    grad = outcome.duals @ _scenario_T(outcome)
    rhs = float(outcome.duals @ _scenario_h(outcome)) + outcome.cut_const
    return Cut(kind="feasibility", gradient=grad, rhs=rhs,
               source=frozenset({outcome.scenario}), iteration=iteration)


# builders need (T, h) of the generating scenario; carried on the outcome
def _attach_scenario_data(outcome, scenario):
    outcome._T = scenario.T if isinstance(scenario.T, np.ndarray) \
        else np.asarray(scenario.T.todense())
    outcome._h = scenario.h
    return outcome


def _scenario_T(outcome):
    return outcome._T


def _scenario_h(outcome):
    return outcome._h


def make_bundles(nscen, policy, bundle_size):
    """Fixed contiguous aggregation groups, stable across iterations."""
    if policy == "single":
        b = nscen
    elif policy == "multi":
        b = 1
    else:
        b = min(bundle_size, nscen)
    return [list(range(i, min(i + b, nscen))) for i in range(0, nscen, b)]


def aggregate_cuts(outcomes, probabilities, policy, bundle_size=1, nscen=None,
                   iteration=0):
    """One cut per aggregation group from per-scenario feasible outcomes."""
    nscen = nscen if nscen is not None else len(outcomes)
    by_scen = {o.scenario: o for o in outcomes}
    cuts = []
    for agg, group in enumerate(make_bundles(nscen, policy, bundle_size)):
        outs = [by_scen[s] for s in group if s in by_scen]
        if not outs:
            continue
        probs = [probabilities[o.scenario] for o in outs]
        cuts.append(make_optimality_cut(outs, probs, aggregate=agg, iteration=iteration))
    return cuts


class MasterState:
    """Master problem: first stage plus theta slots plus accumulated cuts."""

    def __init__(self, problem: TwoStageProblem, n_aggregates, theta_min, cfg=None):
        self.first = problem.first
        self.n = problem.n
        self.K = n_aggregates
        self.theta_min = theta_min
        self.kcfg = cfg or KernelConfig()
        self.cuts = []             # optimality and feasibility, in insertion order
        self.inactive = {}         # id(cut) -> consecutive slack master solves
        self.has_cut = np.zeros(n_aggregates, dtype=bool)
        self.x = None
        self.theta = None
        self.value = None
        self._warm = None

    def add_cut(self, cut: Cut):
        self.cuts.append(cut)
        self.inactive[id(cut)] = 0
        if cut.kind == "optimality":
            self.has_cut[cut.aggregate] = True

    @property
    def all_aggregates_cut(self):
        return bool(self.has_cut.all())

    def counts(self):
        opt = sum(1 for c in self.cuts if c.kind == "optimality")
        return {"optimality": opt, "feasibility": len(self.cuts) - opt}

    def _instance(self, tr_center=None, tr_delta=None, qdiag=None, qcenter=None,
                  extra_rows=None):
        n, K = self.n, self.K
        p = self.first.p
        A1 = self.first.A if isinstance(self.first.A, np.ndarray) \
            else np.asarray(self.first.A.todense())
        extra_rows = extra_rows or []
        m = p + len(self.cuts) + len(extra_rows)
        A = np.zeros((m, n + K))
        A[:p, :n] = A1
        rhs = np.empty(m)
        rhs[:p] = self.first.b
        senses = list(self.first.row_senses)
        for i, cut in enumerate(self.cuts):
            A[p + i, :n] = cut.gradient
            if cut.kind == "optimality":
                A[p + i, n + cut.aggregate] = 1.0
            rhs[p + i] = cut.rhs
            senses.append(">=")
        for j, (row, rv, sns) in enumerate(extra_rows):
            A[p + len(self.cuts) + j, :] = row
            rhs[p + len(self.cuts) + j] = rv
            senses.append(sns)
        c = np.concatenate([self.first.c, np.ones(K)])
        lb = np.concatenate([self.first.lb, np.full(K, self.theta_min)])
        ub = np.concatenate([self.first.ub, np.full(K, np.inf)])
        if tr_center is not None:
            lb[:n] = np.maximum(lb[:n], tr_center - tr_delta)
            ub[:n] = np.minimum(ub[:n], tr_center + tr_delta)
        qd = qc = None
        if qdiag is not None:
            qd = np.concatenate([qdiag, np.zeros(K)])
            qc = np.concatenate([qcenter, np.zeros(K)])
        return LPInstance(c=c, A=A, rhs=rhs, row_senses=tuple(senses), lb=lb, ub=ub,
                          qdiag=qd, qcenter=qc)

    def solve_plain(self, tr_center=None, tr_delta=None):
        lp = self._instance(tr_center=tr_center, tr_delta=tr_delta)
        warm = self._warm if tr_center is None else None
        if warm is not None:
            need = lp.nvars + lp.nrows
            if warm.vstat.size != need:
                extra = need - warm.vstat.size
                if extra > 0 and warm.vstat.size >= lp.nvars:
                    # cuts were appended: their slacks join the basis
                    new_cols = np.arange(warm.vstat.size, need)
                    warm = kernel.Basis(np.concatenate([warm.basic, new_cols]),
                                        np.concatenate([warm.vstat, np.full(extra, 2, np.int8)]))
                else:
                    warm = None
        sol = kernel.solve_lp(lp, self.kcfg, warm_start=warm)
        if sol.status == kernel.INFEASIBLE:
            raise MasterInfeasible(
                "first stage plus feasibility cuts has no feasible point")
        if sol.status == kernel.UNBOUNDED:
            raise kernel.NumericalBreakdown("master is unbounded despite theta lower bounds")
        if tr_center is None:
            self._warm = sol.basis
        self._record_activity(lp, sol)
        return sol.x[:self.n], sol.x[self.n:], sol.objective

    def solve_rd(self, center, sigma):
        lp = self._instance(qdiag=np.full(self.n, sigma), qcenter=center)
        sol = kernel.solve_qp_diagonal(lp, self.kcfg)
        if sol.status != kernel.OPTIMAL or sol.x is None:
            return self.solve_plain()   # proximal solve degraded; plain step is valid
        self._record_activity(lp, sol)
        theta = sol.x[self.n:]
        x = sol.x[:self.n]
        return x, theta, float(self.first.c @ x + theta.sum())

    def solve_level(self, center, level):
        row = np.concatenate([self.first.c, np.ones(self.K)])
        lp = self._instance(qdiag=np.ones(self.n), qcenter=center,
                            extra_rows=[(row, level, "<=")])
        lp = LPInstance(c=np.zeros(self.n + self.K), A=lp.A, rhs=lp.rhs,
                        row_senses=lp.row_senses, lb=lp.lb, ub=lp.ub,
                        qdiag=lp.qdiag, qcenter=lp.qcenter)
        sol = kernel.solve_qp_diagonal(lp, self.kcfg)
        if sol.status != kernel.OPTIMAL or sol.x is None:
            return self.solve_plain()   # projection degraded; plain step is valid
        theta = sol.x[self.n:]
        x = sol.x[:self.n]
        return x, theta, float(self.first.c @ x + theta.sum())

    def _record_activity(self, lp, sol):
        if sol.x is None:
            return
        p = self.first.p
        A = lp.A if isinstance(lp.A, np.ndarray) else np.asarray(lp.A.todense())
        res = A @ sol.x - lp.rhs
        for i, cut in enumerate(self.cuts):
            slack = res[p + i]          # >= rows: slack >= 0, 0 means binding
            if slack > 1e-7 * (1.0 + abs(lp.rhs[p + i])):
                self.inactive[id(cut)] += 1
            else:
                self.inactive[id(cut)] = 0

    def consolidate(self, threshold):
        """Drop optimality cuts that stayed slack for >= threshold master solves."""
        keep, removed = [], 0
        for cut in self.cuts:
            if cut.kind == "optimality" and self.inactive.get(id(cut), 0) >= threshold:
                removed += 1
                self.inactive.pop(id(cut), None)
            else:
                keep.append(cut)
        if removed:
            self.cuts = keep
            self._warm = None
        return removed


def solve_master(state: MasterState, regularization="none", **kw):
    """Solve the current master under the given policy; returns (x, theta, value)."""
    if regularization == "none":
        return state.solve_plain()
    if regularization == "tr":
        return state.solve_plain(tr_center=kw["center"], tr_delta=kw["delta"])
    if regularization == "rd":
        return state.solve_rd(kw["center"], kw["sigma"])
    if regularization == "level":
        return state.solve_level(kw["center"], kw["level"])
    raise ConfigError(f"unknown regularization {regularization!r}")


def consolidate(state: MasterState, threshold, period=None):
    return state.consolidate(threshold)


class _Run:
    """Shared state of one L-shaped run, used by every execution mode."""

    def __init__(self, problem, cfg):
        self.p = problem
        self.cfg = cfg
        self.probs = problem.probabilities
        self.bundles = make_bundles(problem.nscen, cfg.cuts, cfg.bundle_size)
        self.state = MasterState(problem, len(self.bundles), cfg.theta_min, cfg.kernel)
        self.warm = [None] * problem.nscen
        self.U_best = np.inf
        self.x_best = None
        self.ys_best = None
        self.L = -np.inf
        self.trace = []
        self.iteration = 0
        self.cuts_added = 0
        # regularization state
        self.center = None
        self.U_center = np.inf
        self.delta = cfg.tr_delta0
        self.sigma = cfg.rd_sigma0
        self.prev_improved = False
        self.prev_model_value = None

    def solve_bundle(self, bundle, x):
        outs = []
        for s in bundle:
            out, basis = solve_subproblem(self.p.shape, self.p.scenarios[s], x,
                                          self.cfg.kernel, warm=self.warm[s],
                                          scenario_index=s)
            if basis is not None:
                self.warm[s] = basis
            outs.append(_attach_scenario_data(out, self.p.scenarios[s]))
        return outs

    def add_wave_cuts(self, outcomes, x, theta):
        """Fold one full wave of outcomes into the master. Returns (U or None, added)."""
        added = 0
        infeasible = [o for o in outcomes if not o.feasible]
        if infeasible:
            for o in infeasible:
                cut = make_feasibility_cut(o, iteration=self.iteration)
                if cut.rhs - cut.gradient @ x > self.cfg.kernel.feas_tol:
                    self.state.add_cut(cut)
                    added += 1
            self.cuts_added += added
            return None, added
        cuts = aggregate_cuts(outcomes, self.probs, self.cfg.cuts,
                              self.cfg.bundle_size, self.p.nscen, self.iteration)
        for cut in cuts:
            if theta is None or cut.value_at(x) > theta[cut.aggregate] \
                    + 1e-9 * (1.0 + abs(cut.value_at(x))):
                self.state.add_cut(cut)
                added += 1
        self.cuts_added += added
        U = float(self.p.first.c @ x
                  + sum(self.probs[o.scenario] * o.value for o in outcomes))
        return U, added

    def note_upper(self, U, x, outcomes):
        if U is not None and U < self.U_best - 1e-12:
            self.U_best = U
            self.x_best = x.copy()
            ys = [None] * self.p.nscen
            for o in outcomes:
                ys[o.scenario] = o.y
            self.ys_best = ys
            return True
        return False

    def next_candidate(self, x_k, U_k):
        """Apply the regularization policy and solve for the next candidate.

        Returns (x, theta, L_plain).  L_plain is the unregularized master
        value, the valid global lower bound used in the gap test.
        """
        cfg, st = self.cfg, self.state
        reg = cfg.regularization
        if reg == "none":
            x, theta, val = st.solve_plain()
            self.prev_model_value = val
            return x, theta, val

        if self.center is None:
            self.center = (self.x_best if self.x_best is not None else x_k).copy()
            self.U_center = self.U_best
            if self.delta is None:
                self.delta = max(1.0, 0.1 * float(np.max(np.abs(self.center))))
        elif U_k is not None:
            if reg == "tr":
                predicted = self.U_center - self.prev_model_value \
                    if self.prev_model_value is not None else np.inf
                actual = self.U_center - U_k
                if actual >= cfg.tr_eta * max(predicted, 0.0) and U_k < self.U_center:
                    self.center = x_k.copy()
                    self.U_center = U_k
                    self.delta = min(cfg.tr_gamma * self.delta, cfg.tr_delta_max)
                else:
                    self.delta = max(self.delta / cfg.tr_gamma, 1e-8)
            else:
                improved = U_k < self.U_center - 1e-12
                if improved:
                    self.center = x_k.copy()
                    self.U_center = U_k
                    if reg == "rd" and self.prev_improved:
                        self.sigma = max(self.sigma / 2.0, 1e-8)
                self.prev_improved = improved

        _, _, L_plain = st.solve_plain()
        if reg == "tr":
            x, theta, val = st.solve_plain(tr_center=self.center, tr_delta=self.delta)
            self.prev_model_value = val
        elif reg == "rd":
            x, theta, val = st.solve_rd(self.center, self.sigma)
            self.prev_model_value = val
        else:
            U = self.U_best if np.isfinite(self.U_best) else L_plain + 1.0 + abs(L_plain)
            level = L_plain + cfg.level_lambda * (U - L_plain)
            x, theta, val = st.solve_level(self.center, level + 1e-9 * (1 + abs(level)))
            self.prev_model_value = val
        return x, theta, L_plain

    def record(self, wall, added):
        gap = self.gap()
        self.trace.append({"iteration": self.iteration, "lower": self.L,
                           "upper": self.U_best, "gap": gap,
                           "cuts_added": added, "wall": wall})

    def gap(self):
        if not np.isfinite(self.U_best) or not np.isfinite(self.L):
            return np.inf
        return (self.U_best - self.L) / (1.0 + abs(self.U_best))

    def lower_valid(self):
        return self.state.all_aggregates_cut

    def report(self, status, wall, seed=None):
        p = self.p
        obj = p.report_value(self.U_best) if np.isfinite(self.U_best) else np.nan
        counts = self.state.counts()
        counts["added_total"] = self.cuts_added
        return SolveReport(
            method="lshaped", status=status, objective=obj,
            decision=self.x_best, recourse=self.ys_best,
            gaps={"lower": self.L, "upper": self.U_best, "gap": self.gap()},
            iterations=self.iteration, cut_counts=counts, trace=self.trace,
            seed=seed, wall_time=wall,
            extras={"internal_objective": self.U_best,
                    "_cuts": list(self.state.cuts)},
        )


def solve_lshaped(problem: TwoStageProblem, cfg: LShapedConfig = None,
                  engine: ExecConfig = None, seed=None) -> SolveReport:
    """Run the L-shaped algorithm until (U - L) / (1 + |U|) <= gap_tol."""
    cfg = cfg or LShapedConfig()
    engine = engine or cfg.execution
    if engine.mode == "async":
        return _solve_async(problem, cfg, engine, seed)
    return _solve_iterative(problem, cfg, engine, seed)


def _solve_iterative(problem, cfg, engine, seed):
    run = _Run(problem, cfg)
    t0 = time.perf_counter()
    x_k, theta_k, _ = run.state.solve_plain()   # cold start: theta at theta_min
    pool = None
    if engine.mode == "sync" and engine.workers > 1:
        from concurrent.futures import ThreadPoolExecutor
        pool = ThreadPoolExecutor(max_workers=engine.workers)
    status = "iteration_limit"
    try:
        for it in range(1, cfg.max_iterations + 1):
            run.iteration = it
            t_it = time.perf_counter()
            items = [WorkItem(version=it, index=b) for b in range(len(run.bundles))]
            envs = run_wave(items,
                            lambda item: run.solve_bundle(run.bundles[item.index], x_k),
                            workers=engine.workers, pool=pool)
            outcomes = [o for e in envs for o in e.payload]
            U_k, added = run.add_wave_cuts(outcomes, x_k, theta_k)
            improved = run.note_upper(U_k, x_k, outcomes)
            x_next, theta_next, L_plain = run.next_candidate(x_k, U_k)
            if run.lower_valid():
                run.L = L_plain
            run.record(time.perf_counter() - t_it, added)
            if run.lower_valid() and run.gap() <= cfg.gap_tol:
                status = "optimal"
                break
            if added == 0 and U_k is not None and cfg.regularization == "none" \
                    and run.lower_valid():
                status = "optimal"   # model exact at the candidate
                break
            if cfg.consolidation and it % cfg.consolidation_period == 0:
                run.state.consolidate(cfg.consolidation_threshold)
            x_k, theta_k = x_next, theta_next
    finally:
        if pool is not None:
            pool.shutdown(wait=False)
    rep = run.report(status, time.perf_counter() - t0, seed)
    rep.config = {"cuts": cfg.cuts, "bundle_size": cfg.bundle_size,
                  "regularization": cfg.regularization, "gap_tol": cfg.gap_tol,
                  "execution": engine.mode, "workers": engine.workers}
    return rep


class _AsyncCoordinator:
    """Master-side state machine for the k-threshold protocol."""

    def __init__(self, run: _Run, cfg):
        self.run = run
        self.cfg = cfg
        self.n_items = len(run.bundles)
        self.version = 0
        self.finished = False
        self.status = "iteration_limit"
        self.partial = {}      # version -> outcomes received so far
        self.payloads = {}     # version -> (x, theta)
        self.pending_eval = None   # last fully evaluated (x, U), consumed by advance
        self.t0 = time.perf_counter()

    def initial_decision(self):
        x, theta, _ = self.run.state.solve_plain()
        self.payloads[0] = (x, theta)
        return VersionedDecision(version=0, payload=(x, theta), iteration=0)

    def worker_payload(self, decision, index):
        x, _ = decision.payload
        return self.run.solve_bundle(self.run.bundles[index], x)

    def incorporate(self, env):
        run = self.run
        outcomes = env.payload
        self.partial.setdefault(env.version, []).extend(outcomes)
        added = 0
        infeasible = [o for o in outcomes if not o.feasible]
        if infeasible:
            for o in infeasible:
                run.state.add_cut(make_feasibility_cut(o, iteration=env.version))
                added += 1
        else:
            probs = [run.probs[o.scenario] for o in outcomes]
            cut = make_optimality_cut(outcomes, probs, aggregate=env.index,
                                      iteration=env.version)
            dec_x, dec_theta = self.payloads[env.version]
            if cut.value_at(dec_x) > dec_theta[env.index] \
                    + 1e-9 * (1 + abs(cut.value_at(dec_x))):
                run.state.add_cut(cut)
                added += 1
        run.cuts_added += added

    def advance(self):
        run = self.run
        if run.iteration >= self.cfg.max_iterations:
            return None
        run.iteration += 1
        self.version += 1
        eval_x, eval_U = self.pending_eval or (self.payloads[self.version - 1][0], None)
        self.pending_eval = None
        x, theta, L_plain = run.next_candidate(eval_x, eval_U)
        if run.lower_valid():
            run.L = L_plain
        run.record(time.perf_counter() - self.t0, 0)
        if run.lower_valid() and run.gap() <= self.cfg.gap_tol:
            self.finished = True
            self.status = "optimal"
            return None
        self.payloads[self.version] = (x, theta)
        return VersionedDecision(version=self.version, payload=(x, theta),
                                 iteration=run.iteration)

    def complete(self, version, decision):
        run = self.run
        outcomes = self.partial.pop(version, [])
        if any(not o.feasible for o in outcomes):
            return False
        x, _ = decision.payload
        U_v = float(run.p.first.c @ x
                    + sum(run.probs[o.scenario] * o.value for o in outcomes))
        run.note_upper(U_v, x, outcomes)
        # regularization centers move only on fully evaluated candidates
        self.pending_eval = (x, U_v)
        if run.lower_valid() and run.gap() <= self.cfg.gap_tol:
            self.finished = True
            self.status = "optimal"
            return True
        return False


def _solve_async(problem, cfg, engine, seed):
    run = _Run(problem, cfg)
    t0 = time.perf_counter()
    coord = _AsyncCoordinator(run, cfg)
    stats = run_async(coord, coord.worker_payload, engine)
    rep = run.report(coord.status, time.perf_counter() - t0, seed)
    rep.config = {"cuts": cfg.cuts, "bundle_size": cfg.bundle_size,
                  "regularization": cfg.regularization, "gap_tol": cfg.gap_tol,
                  "execution": f"async:{engine.kappa}", "workers": engine.workers}
    rep.extras["async"] = {"issued": stats.issued, "received": stats.received,
                           "versions": stats.versions_published,
                           "max_pair_multiplicity": stats.max_pair_multiplicity,
                           "version_log": [list(rec) for rec in stats.version_log]}
    return rep
