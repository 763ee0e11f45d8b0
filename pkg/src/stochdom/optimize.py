"""Dominance-constrained portfolio drivers.

Both drivers share one pipeline: a simplex-projected particle swarm
produces a warm start, a damped Newton method on a log-barrier
reformulation refines it against a finite set of threshold cuts, and a
constraint-generation loop adds the worst violated threshold from a
full verification pass until dominance is certified.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dominance import _gap_grid, lower_partial_moment, verify
from .risk import higher_order_risk, minimize_phi
from .types import (
    DimensionError,
    DiscreteRandomVariable,
    DomainError,
    PortfolioWeights,
    RiskSpec,
    ScenarioSet,
    mean,
    order_value,
    portfolio_return_variable,
)

# decreasing barrier sequence, factor 10
BARRIER_MUS = tuple(10.0**-k for k in range(2, 11))
_INTERIOR_MARGIN = 1e-9
_PSO_PENALTY_WEIGHT = 1e4


@dataclass(frozen=True)
class SolverConfig:
    """Tuning knobs shared by the PSO and Newton phases."""

    swarm_size: int = 64
    pso_iterations: int = 200
    pso_inertia: float = 0.7
    pso_cognitive: float = 1.5
    pso_social: float = 1.5
    newton_max_iter: int = 100
    newton_tol: float = 1e-10
    constraint_tol: float = 1e-8
    max_generated_constraints: int = 50
    rng_seed: int = 42

    def __post_init__(self) -> None:
        if self.swarm_size < 1 or self.newton_max_iter < 1 or self.max_generated_constraints < 1:
            raise DomainError("swarm_size, newton_max_iter and max_generated_constraints must be >= 1")
        if self.pso_iterations < 0:
            raise DomainError("pso_iterations must be >= 0")
        if self.newton_tol <= 0 or self.constraint_tol <= 0:
            raise DomainError("tolerances must be > 0")
        if self.rng_seed < 0:
            raise DomainError("rng_seed must be a nonnegative integer")


@dataclass(frozen=True, eq=False)
class SolveReport:
    """Outcome of a dominance-constrained portfolio optimization."""

    weights: PortfolioWeights | None
    active_thresholds: tuple[float, ...]
    q_star: float | None
    objective_value: float | None
    expected_return: float | None
    benchmark_return: float
    risk_value: float | None
    simplex_residual: float | None
    dominance_residual: float | None
    converged: bool
    iterations: dict
    infeasible: bool = False
    message: str | None = None


def _project(u: np.ndarray) -> np.ndarray:
    """Euclidean projection onto the probability simplex (sorted threshold rule)."""
    s = np.sort(u)[::-1]
    css = np.cumsum(s) - 1.0
    idx = np.arange(1, u.size + 1)
    rho = idx[s - css / idx > 0.0][-1]
    theta = css[rho - 1] / rho
    return np.maximum(u - theta, 0.0)


def project_to_simplex(v) -> PortfolioWeights:
    """Project an arbitrary real vector onto the weight simplex."""
    u = np.asarray(v, dtype=float)
    if u.ndim != 1 or u.size < 1:
        raise DimensionError("expected a non-empty 1-d vector")
    if not np.all(np.isfinite(u)):
        raise DomainError("cannot project a non-finite vector")
    return PortfolioWeights(_project(u))


def pso_search(objective, penalty, dim: int, cfg: SolverConfig | None = None) -> PortfolioWeights:
    """Particle swarm over the simplex with penalized constraint violations.

    Fitness is objective + mu * penalty; mu starts at 1e4 and doubles
    whenever the incumbent stays infeasible for 10 consecutive
    iterations.  Deterministic for a fixed cfg.rng_seed.
    """
    cfg = cfg or SolverConfig()
    if dim < 1:
        raise DimensionError("dimension must be >= 1")
    rng = np.random.default_rng(cfg.rng_seed)
    S = cfg.swarm_size
    pos = np.empty((S, dim))
    pos[0] = 1.0 / dim
    for i in range(1, S):
        pos[i] = rng.dirichlet(np.ones(dim))
    pos = np.vstack([_project(row) for row in pos])
    vel = np.zeros_like(pos)

    def _eval(row: np.ndarray) -> tuple[float, float]:
        w = PortfolioWeights(row)
        return float(objective(w)), float(penalty(w))

    evals = [_eval(row) for row in pos]
    pbest = pos.copy()
    pbest_obj = np.array([e[0] for e in evals])
    pbest_pen = np.array([e[1] for e in evals])
    mu = _PSO_PENALTY_WEIGHT
    gi = int(np.argmin(pbest_obj + mu * pbest_pen))
    gbest = pbest[gi].copy()
    gobj, gpen = float(pbest_obj[gi]), float(pbest_pen[gi])
    infeasible_run = 0

    for _ in range(cfg.pso_iterations):
        r1 = rng.random((S, dim))
        r2 = rng.random((S, dim))
        vel = (
            cfg.pso_inertia * vel
            + cfg.pso_cognitive * r1 * (pbest - pos)
            + cfg.pso_social * r2 * (gbest[None, :] - pos)
        )
        pos = np.vstack([_project(row) for row in pos + vel])
        for i in range(S):
            o, c = _eval(pos[i])
            if o + mu * c < pbest_obj[i] + mu * pbest_pen[i]:
                pbest[i] = pos[i]
                pbest_obj[i] = o
                pbest_pen[i] = c
        gi = int(np.argmin(pbest_obj + mu * pbest_pen))
        if pbest_obj[gi] + mu * pbest_pen[gi] < gobj + mu * gpen:
            gbest = pbest[gi].copy()
            gobj, gpen = float(pbest_obj[gi]), float(pbest_pen[gi])
        if gpen > 0.0:
            infeasible_run += 1
            if infeasible_run >= 10:
                mu *= 2.0
                infeasible_run = 0
        else:
            infeasible_run = 0
    return PortfolioWeights(gbest)


class _DominanceCuts:
    """Finite family of dominance constraints g_t(x) <= 0 over thresholds.

    Thresholds at which the benchmark shortfall moment vanishes admit no
    strict sublevel interior (the portfolio moment is nonnegative), so
    those collapse into per-scenario linear floor constraints
    t - x.xi_j <= 0, which do have an interior whenever one exists.
    """

    def __init__(self, scenarios: ScenarioSet, benchmark: DiscreteRandomVariable, order, thresholds):
        self.xi = scenarios.returns
        self.p = scenarios.scenario_probabilities
        self.k = order_value(order) - 1.0
        ts = np.unique(np.asarray(thresholds, dtype=float))
        if ts.size == 0:
            raise DomainError("threshold set must be nonempty")
        bench = np.array([lower_partial_moment(benchmark, float(t), self.k) for t in ts])
        smooth = bench > 0.0
        self.ts = ts[smooth]
        self.bench = bench[smooth]
        self.floor_t = float(ts[~smooth].max()) if bool((~smooth).any()) else None
        self.d, self.n = self.xi.shape

    @property
    def m(self) -> int:
        return self.ts.size + (self.n if self.floor_t is not None else 0)

    def values(self, x: np.ndarray) -> np.ndarray:
        out = x @ self.xi
        parts = []
        if self.ts.size:
            diff = np.maximum(self.ts[:, None] - out[None, :], 0.0)
            port = (diff @ self.p) if self.k == 1.0 else (diff**self.k) @ self.p
            parts.append(port - self.bench)
        if self.floor_t is not None:
            parts.append(self.floor_t - out)
        return np.concatenate(parts)

    def jac(self, x: np.ndarray) -> np.ndarray:
        out = x @ self.xi
        parts = []
        if self.ts.size:
            raw = self.ts[:, None] - out[None, :]
            active = raw > 0.0
            if self.k == 1.0:
                w = np.where(active, 1.0, 0.0)
            else:
                w = np.where(active, self.k * np.maximum(raw, 0.0) ** (self.k - 1.0), 0.0)
            parts.append(-(w * self.p[None, :]) @ self.xi.T)
        if self.floor_t is not None:
            parts.append(-self.xi.T)
        return np.vstack(parts)

    def hess(self, x: np.ndarray, lam: np.ndarray) -> np.ndarray:
        """Multiplier-weighted sum of cut Hessians (floor cuts are linear)."""
        if not self.ts.size or self.k <= 1.0:
            return np.zeros((self.d, self.d))
        lam_s = lam[: self.ts.size]
        raw = self.ts[:, None] - (x @ self.xi)[None, :]
        active = raw > 0.0
        expo = self.k - 2.0
        if expo < 0.0:
            # curvature of (.)^k is integrably singular at the kink for
            # k < 2; clamping keeps the Hessian finite, damping does the rest
            base = np.where(active, np.maximum(raw, 1e-10), 1.0)
        else:
            base = np.where(active, raw, 0.0)
        pw = np.where(active, base**expo, 0.0)
        coef = self.k * (self.k - 1.0) * ((lam_s[:, None] * pw) * self.p[None, :]).sum(axis=0)
        return (self.xi * coef[None, :]) @ self.xi.T


class _MaxReturnProblem:
    """Barrier problem: minimize -E[portfolio return] over the cut polytope."""

    def __init__(self, mean_returns: np.ndarray, cuts: _DominanceCuts):
        self.mr = mean_returns
        self.cuts = cuts
        self.d = mean_returns.size
        self.n_vars = self.d

    def obj_value(self, z):
        return -float(self.mr @ z)

    def obj_grad(self, z):
        return -self.mr.copy()

    def obj_hess(self, z):
        return np.zeros((self.d, self.d))

    def con_values(self, z):
        return self.cuts.values(z)

    def con_jac(self, z):
        return self.cuts.jac(z)

    def con_hess(self, z, lam):
        return self.cuts.hess(z, lam)


class _JointRiskProblem:
    """Barrier problem over (x, q) for the r > 1 risk objective."""

    def __init__(self, scenarios: ScenarioSet, spec: RiskSpec, cuts: _DominanceCuts):
        self.xi = scenarios.returns
        self.pr = scenarios.scenario_probabilities
        self.spec = spec
        self.cuts = cuts
        self.d = scenarios.d
        self.n_vars = self.d + 1
        self.c = 1.0 / (1.0 - spec.beta)

    def _tail(self, z):
        u = self.spec.sign * (z[: self.d] @ self.xi) - z[self.d]
        return u, u > 0.0

    def obj_value(self, z):
        u, mask = self._tail(z)
        if not mask.any():
            return float(z[self.d])
        s = float(np.dot(self.pr[mask], u[mask] ** self.spec.r))
        return float(z[self.d] + self.c * s ** (1.0 / self.spec.r))

    def obj_grad(self, z):
        u, mask = self._tail(z)
        g = np.zeros(self.n_vars)
        g[self.d] = 1.0
        if not mask.any():
            return g
        r = self.spec.r
        pm, um = self.pr[mask], u[mask]
        s = float(np.dot(pm, um**r))
        b = pm * um ** (r - 1.0)
        a = s ** (1.0 / r - 1.0)
        g[: self.d] += self.c * a * self.spec.sign * (self.xi[:, mask] @ b)
        g[self.d] -= self.c * a * float(b.sum())
        return g

    def obj_hess(self, z):
        u, mask = self._tail(z)
        H = np.zeros((self.n_vars, self.n_vars))
        r = self.spec.r
        if not mask.any() or r <= 1.0:
            return H
        pm, um = self.pr[mask], u[mask]
        s = float(np.dot(pm, um**r))
        D = np.empty((int(mask.sum()), self.n_vars))
        D[:, : self.d] = self.spec.sign * self.xi[:, mask].T
        D[:, self.d] = -1.0
        b = pm * um ** (r - 1.0)
        c2 = pm * um ** (r - 2.0)
        grad_s = D.T @ b
        a = s ** (1.0 / r - 1.0)
        return self.c * (r - 1.0) * (
            a * (D.T @ (c2[:, None] * D)) - s ** (1.0 / r - 2.0) * np.outer(grad_s, grad_s)
        )

    def con_values(self, z):
        return self.cuts.values(z[: self.d])

    def con_jac(self, z):
        J = self.cuts.jac(z[: self.d])
        return np.hstack([J, np.zeros((J.shape[0], 1))])

    def con_hess(self, z, lam):
        H = np.zeros((self.n_vars, self.n_vars))
        H[: self.d, : self.d] = self.cuts.hess(z[: self.d], lam)
        return H

    def coordinate_reset(self, z):
        # exact inner minimization over q; unsticks Newton when the tail
        # holds a single scenario and the objective turns locally linear
        losses = self.spec.sign * (z[: self.d] @ self.xi)
        q_new = minimize_phi(losses, self.pr, self.spec.beta, self.spec.r).q_star
        out = z.copy()
        out[self.d] = q_new
        return out


class _FixedQRiskProblem:
    """r = 1 risk objective with the inner parameter frozen.

    The r = 1 functional is piecewise linear in (x, q) and flat in q on
    quantile plateaus, which starves Newton of curvature; freezing q at
    the inner minimizer of the incumbent and re-fixing it every
    constraint round is the stable alternative.
    """

    def __init__(self, scenarios: ScenarioSet, spec: RiskSpec, cuts: _DominanceCuts, q_fix: float):
        self.xi = scenarios.returns
        self.pr = scenarios.scenario_probabilities
        self.spec = spec
        self.cuts = cuts
        self.q = float(q_fix)
        self.d = scenarios.d
        self.n_vars = self.d
        self.c = 1.0 / (1.0 - spec.beta)

    def obj_value(self, z):
        u = self.spec.sign * (z @ self.xi) - self.q
        return float(self.q + self.c * np.dot(self.pr, np.maximum(u, 0.0)))

    def obj_grad(self, z):
        u = self.spec.sign * (z @ self.xi) - self.q
        mask = u > 0.0
        if not mask.any():
            return np.zeros(self.d)
        return self.c * self.spec.sign * (self.xi[:, mask] @ self.pr[mask])

    def obj_hess(self, z):
        return np.zeros((self.d, self.d))

    def con_values(self, z):
        return self.cuts.values(z)

    def con_jac(self, z):
        return self.cuts.jac(z)

    def con_hess(self, z, lam):
        return self.cuts.hess(z, lam)


class _Phase1Problem:
    """Minimize the slack bound z over {g_t(x) <= z}, to find a strict interior point."""

    def __init__(self, cuts: _DominanceCuts):
        self.cuts = cuts
        self.d = cuts.d
        self.n_vars = self.d + 1

    def obj_value(self, z):
        return float(z[self.d])

    def obj_grad(self, z):
        g = np.zeros(self.n_vars)
        g[self.d] = 1.0
        return g

    def obj_hess(self, z):
        return np.zeros((self.n_vars, self.n_vars))

    def con_values(self, z):
        return self.cuts.values(z[: self.d]) - z[self.d]

    def con_jac(self, z):
        J = self.cuts.jac(z[: self.d])
        return np.hstack([J, -np.ones((J.shape[0], 1))])

    def con_hess(self, z, lam):
        H = np.zeros((self.n_vars, self.n_vars))
        H[: self.d, : self.d] = self.cuts.hess(z[: self.d], lam)
        return H


@dataclass(frozen=True, eq=False)
class _BarrierResult:
    z: np.ndarray
    converged: bool
    kkt_residual: float
    iterations: int
    stage_iterations: tuple[int, ...]
    lam: np.ndarray
    bound_multipliers: np.ndarray
    eq_multiplier: float
    barrier_mu: float
    note: str | None


def _solve_kkt(H: np.ndarray, a: np.ndarray, grad: np.ndarray):
    """Solve [[H, a], [a', 0]] [dz, nu] = [-grad, 0] with escalating diagonal shifts."""
    n = a.size
    K = np.zeros((n + 1, n + 1))
    K[:n, :n] = H
    K[:n, n] = a
    K[n, :n] = a
    rhs = np.zeros(n + 1)
    rhs[:n] = -grad
    delta = 0.0
    while True:
        Kd = K if delta == 0.0 else K + np.diag(np.concatenate([np.full(n, delta), [0.0]]))
        try:
            sol = np.linalg.solve(Kd, rhs)
        except np.linalg.LinAlgError:
            sol = None
        if sol is not None and np.all(np.isfinite(sol)):
            return sol[:n], True
        if delta == 0.0:
            delta = 1e-10
        else:
            delta *= 10.0
        if delta > 1e-2:
            return None, False


def _barrier_merit(prob, z, mu, g=None):
    x = z[: prob.d]
    if g is None:
        g = prob.con_values(z)
    return prob.obj_value(z) - mu * (float(np.log(-g).sum()) + float(np.log(x).sum()))


def _polish_active_set(prob, z0: np.ndarray, mu: float):
    """Crossover: undamped Newton on the active-set KKT equations.

    The primal barrier plateaus around 1e-9 stationarity because its
    Hessian carries mu/g^2 terms; once the active set is identified the
    equality-form system is well scaled and Newton reaches machine
    precision.  Returns None when identification or the solve fails.
    """
    d, n = prob.d, prob.n_vars
    a = np.zeros(n)
    a[:d] = 1.0
    z = z0.copy()
    g = prob.con_values(z)
    act = np.flatnonzero(g >= -1e-6)
    bnd = np.flatnonzero(z[:d] <= 1e-6)
    nA, nB = act.size, bnd.size
    lamA = mu / np.maximum(-g[act], 1e-300)
    sB = mu / np.maximum(z[:d][bnd], 1e-300)
    nu = 0.0

    def residual_vec(z, lamA, sB, nu):
        g = prob.con_values(z)
        J = prob.con_jac(z)
        lam_full = np.zeros(g.size)
        lam_full[act] = lamA
        grad = prob.obj_grad(z) + J.T @ lam_full + nu * a
        grad[bnd] -= sB
        return np.concatenate([grad, g[act], z[:d][bnd], [float(z[:d].sum()) - 1.0]]), lam_full

    best = None
    for _ in range(8):
        F, lam_full = residual_vec(z, lamA, sB, nu)
        norm = float(np.abs(F).max())
        if best is None or norm < best[0]:
            best = (norm, z.copy(), lamA.copy(), sB.copy(), nu)
        if norm <= 1e-14:
            break
        J = prob.con_jac(z)
        H = prob.obj_hess(z) + prob.con_hess(z, lam_full)
        size = n + nA + nB + 1
        K = np.zeros((size, size))
        K[:n, :n] = H
        K[:n, n : n + nA] = J[act].T
        for j, i in enumerate(bnd):
            K[i, n + nA + j] = -1.0
        K[:n, -1] = a
        K[n : n + nA, :n] = J[act]
        for j, i in enumerate(bnd):
            K[n + nA + j, i] = 1.0
        K[-1, :n] = a
        try:
            step = np.linalg.solve(K, -F)
        except np.linalg.LinAlgError:
            step = None
        if step is None or not np.all(np.isfinite(step)):
            # degenerate active sets (more active cuts than variables)
            # still admit consistent KKT systems; take the least-squares
            # step with minimum-norm multiplier movement
            step, *_ = np.linalg.lstsq(K, -F, rcond=None)
            if not np.all(np.isfinite(step)):
                return None
        z = z + step[:n]
        lamA = lamA + step[n : n + nA]
        sB = sB + step[n + nA : n + nA + nB]
        nu = nu + float(step[-1])

    if best is None:
        return None
    norm, z, lamA, sB, nu = best
    # the polish is only valid if it kept the optimal active-set structure
    g = prob.con_values(z)
    inact = np.setdiff1d(np.arange(g.size), act)
    free = np.setdiff1d(np.arange(d), bnd)
    if (lamA < -1e-9).any() or (sB < -1e-9).any():
        return None
    if inact.size and g[inact].max() >= -1e-12:
        return None
    if free.size and z[:d][free].min() <= 0.0:
        return None
    if g[act].size and float(np.abs(g[act]).max()) > 1e-10:
        return None
    lam_full = np.zeros(g.size)
    lam_full[act] = np.maximum(lamA, 0.0)
    bound_full = np.zeros(d)
    bound_full[bnd] = np.maximum(sB, 0.0)
    x = np.maximum(z[:d], 0.0)
    z = z.copy()
    z[:d] = x
    return norm, z, lam_full, bound_full, nu


def _solve_barrier(prob, z0: np.ndarray, cfg: SolverConfig, stop_when=None) -> _BarrierResult:
    z = np.array(z0, dtype=float)
    d = prob.d
    a = np.zeros(prob.n_vars)
    a[:d] = 1.0
    stage_iterations: list[int] = []
    total = 0
    note = None
    fatal = False
    resets_left = 3
    mu = BARRIER_MUS[0]

    for mu in BARRIER_MUS:
        stage_tol = max(0.1 * mu, 0.1 * cfg.newton_tol)
        it = 0
        while it < cfg.newton_max_iter:
            g = prob.con_values(z)
            if g.size and g.max() >= 0.0:
                note = "iterate left the strict interior"
                fatal = True
                break
            x = z[:d]
            lam = mu / (-g)
            grad = prob.obj_grad(z).copy()
            if g.size:
                J = prob.con_jac(z)
                grad += J.T @ lam
            grad[:d] -= mu / x
            nu = -float(a @ grad) / d
            if float(np.abs(grad + nu * a).max()) <= stage_tol:
                break
            H = prob.obj_hess(z)
            if g.size:
                H = H + (J.T * (mu / g**2)) @ J + prob.con_hess(z, lam)
            H = H.copy()
            H[np.arange(d), np.arange(d)] += mu / x**2
            dz, ok = _solve_kkt(H, a, grad)
            if not ok:
                note = "singular KKT system beyond regularization"
                fatal = True
                break

            # fraction-to-boundary cap for the simplex block
            alpha = 1.0
            dx = dz[:d]
            shrinking = dx < 0.0
            if shrinking.any():
                alpha = min(1.0, float(0.99 * np.min(x[shrinking] / -dx[shrinking])))
            merit0 = _barrier_merit(prob, z, mu, g)
            slope = float(grad @ dz)
            accepted = False
            for _ in range(60):
                if alpha < 1e-16:
                    break
                znew = z + alpha * dz
                xn = znew[:d]
                if xn.min() > 0.0:
                    gn = prob.con_values(znew)
                    if not gn.size or gn.max() < 0.0:
                        merit = _barrier_merit(prob, znew, mu, gn)
                        if merit <= merit0 + 1e-4 * alpha * slope + 1e-12 * max(1.0, abs(merit0)):
                            accepted = True
                            break
                alpha *= 0.5
            if not accepted:
                reset = getattr(prob, "coordinate_reset", None)
                if reset is not None and resets_left > 0:
                    z_reset = reset(z)
                    if z_reset is not None and float(np.abs(z_reset - z).max()) > 1e-14:
                        resets_left -= 1
                        z = z_reset
                        continue
                note = note or "line search stalled"
                break
            z = znew
            it += 1
            total += 1
            if stop_when is not None and stop_when(z):
                stage_iterations.append(it)
                return _finalize_barrier(prob, z, a, mu, cfg, total, stage_iterations, note, polish=False)
        stage_iterations.append(it)
        if fatal:
            break
    return _finalize_barrier(prob, z, a, mu, cfg, total, stage_iterations, note, polish=True)


def _finalize_barrier(prob, z, a, mu, cfg, total, stage_iterations, note, polish=True) -> _BarrierResult:
    d = prob.d
    x = z[:d]
    g = prob.con_values(z)
    lam = mu / np.maximum(-g, 1e-300)
    grad = prob.obj_grad(z).copy()
    if g.size:
        grad += prob.con_jac(z).T @ lam
    bound = mu / np.maximum(x, 1e-300)
    grad[:d] -= bound
    nu = -float(a @ grad) / d
    stationarity = float(np.abs(grad + nu * a).max())
    primal = abs(float(x.sum()) - 1.0)
    ineq = float(max(g.max(), 0.0)) if g.size else 0.0
    bounds_viol = float(max(-x.min(), 0.0))
    kkt = max(stationarity, primal, ineq, bounds_viol)
    if polish:
        polished = _polish_active_set(prob, z, mu)
        if polished is not None and polished[0] < kkt:
            kkt, z, lam, bound, nu = polished
    return _BarrierResult(
        z=z,
        converged=bool(kkt <= cfg.newton_tol),
        kkt_residual=kkt,
        iterations=total,
        stage_iterations=tuple(stage_iterations),
        lam=lam,
        bound_multipliers=bound,
        eq_multiplier=nu,
        barrier_mu=mu,
        note=note,
    )


@dataclass(frozen=True)
class NewtonProblem:
    """Handle describing which smooth NLP the Newton phase should solve."""

    scenarios: ScenarioSet
    benchmark: DiscreteRandomVariable
    order: float
    risk_spec: RiskSpec | None = None


def max_return_problem(scenarios: ScenarioSet, benchmark: DiscreteRandomVariable, order) -> NewtonProblem:
    return NewtonProblem(scenarios, benchmark, order_value(order), None)


def min_risk_problem(
    scenarios: ScenarioSet, benchmark: DiscreteRandomVariable, order, spec: RiskSpec
) -> NewtonProblem:
    return NewtonProblem(scenarios, benchmark, order_value(order), spec)


@dataclass(frozen=True, eq=False)
class NewtonDiagnostics:
    converged: bool
    kkt_residual: float
    iterations: int
    stage_iterations: tuple[int, ...]
    barrier_mu: float
    ineq_multipliers: np.ndarray
    bound_multipliers: np.ndarray
    eq_multiplier: float
    note: str | None = None


def _strict_interior(cuts: _DominanceCuts, x: np.ndarray, cfg: SolverConfig):
    """Move x into the strict interior of the cut polytope, via phase 1 if needed."""
    d = cuts.d
    center = np.full(d, 1.0 / d)
    for theta in (0.0, 1e-6, 1e-4, 1e-2):
        cand = (1.0 - theta) * x + theta * center
        cand = np.maximum(cand, 1e-14)
        cand = cand / cand.sum()
        if cand.min() > 0.0 and cuts.values(cand).max() < -_INTERIOR_MARGIN:
            return cand, True
    xp = np.maximum(x, 1e-9)
    xp = xp / xp.sum()
    worst = float(cuts.values(xp).max())
    z0 = np.concatenate([xp, [worst + max(1.0, abs(worst))]])
    res = _solve_barrier(
        _Phase1Problem(cuts),
        z0,
        cfg,
        stop_when=lambda z: float(cuts.values(z[:d]).max()) <= -10.0 * _INTERIOR_MARGIN,
    )
    xc = np.maximum(res.z[:d], 0.0)
    xc = xc / xc.sum()
    if xc.min() > 0.0 and float(cuts.values(xc).max()) < -_INTERIOR_MARGIN:
        return xc, True
    # no strict interior: the phase-1 point is still the best feasibility
    # approximant available (boundary-only feasible sets are legitimate,
    # e.g. a benchmark that is the unique dominating portfolio)
    return xc, False


def _build_inner_problem(problem: NewtonProblem, cuts: _DominanceCuts, x0: np.ndarray, q0):
    s, spec = problem.scenarios, problem.risk_spec
    if spec is None:
        return _MaxReturnProblem(s.mean_returns(), cuts), np.array(x0, dtype=float), None
    if q0 is None:
        q0 = higher_order_risk(portfolio_return_variable(s, PortfolioWeights(x0)), spec).q_star
    if spec.r == 1.0:
        q_fix = float(q0)
        if spec.beta == 0.0:
            # with beta = 0 and r = 1 the objective equals the mean loss
            # once q sits below every achievable loss
            q_fix = min(q_fix, float(spec.losses(s.returns).min()) - 1.0)
        return _FixedQRiskProblem(s, spec, cuts, q_fix), np.array(x0, dtype=float), q_fix
    return _JointRiskProblem(s, spec, cuts), np.concatenate([x0, [float(q0)]]), None


def newton_refine(
    problem: NewtonProblem,
    start: PortfolioWeights,
    thresholds,
    cfg: SolverConfig | None = None,
    q0: float | None = None,
) -> tuple[PortfolioWeights, float | None, NewtonDiagnostics]:
    """Refine weights against the finite threshold cut set by barrier Newton.

    Returns the refined weights, the auxiliary risk parameter for
    min-risk problems (None otherwise), and diagnostics carrying the
    final KKT residual and multipliers.
    """
    cfg = cfg or SolverConfig()
    s = problem.scenarios
    if start.d != s.d:
        raise DimensionError(f"start has {start.d} weights but the scenario set has {s.d} assets")
    cuts = _DominanceCuts(s, problem.benchmark, problem.order, thresholds)
    x0, ok = _strict_interior(cuts, start.weights, cfg)
    if not ok:
        # boundary-only feasible set: return the phase-1 point, which
        # approximates the (unique) feasible allocation when one exists
        diag = NewtonDiagnostics(
            converged=False,
            kkt_residual=float("inf"),
            iterations=0,
            stage_iterations=(),
            barrier_mu=BARRIER_MUS[0],
            ineq_multipliers=np.zeros(cuts.m),
            bound_multipliers=np.zeros(s.d),
            eq_multiplier=0.0,
            note="no strictly interior point found for the cut set",
        )
        q_out = q0
        if problem.risk_spec is not None and q_out is None:
            q_out = higher_order_risk(
                portfolio_return_variable(s, PortfolioWeights(x0)), problem.risk_spec
            ).q_star
        return PortfolioWeights(x0), q_out, diag
    inner, z0, q_fix = _build_inner_problem(problem, cuts, x0, q0)
    res = _solve_barrier(inner, z0, cfg)
    x = res.z[: s.d]
    if problem.risk_spec is None:
        q_out = None
    elif problem.risk_spec.r == 1.0:
        q_out = q_fix
    else:
        q_out = float(res.z[s.d])
    diag = NewtonDiagnostics(
        converged=res.converged,
        kkt_residual=res.kkt_residual,
        iterations=res.iterations,
        stage_iterations=res.stage_iterations,
        barrier_mu=res.barrier_mu,
        ineq_multipliers=res.lam,
        bound_multipliers=res.bound_multipliers,
        eq_multiplier=res.eq_multiplier,
        note=res.note,
    )
    return PortfolioWeights(x), q_out, diag


def kkt_residual(
    problem: NewtonProblem,
    weights: PortfolioWeights,
    thresholds,
    diag: NewtonDiagnostics,
    q: float | None = None,
) -> float:
    """Recompute the first-order optimality residual at a returned point."""
    s = problem.scenarios
    cuts = _DominanceCuts(s, problem.benchmark, problem.order, thresholds)
    inner, _, _ = _build_inner_problem(problem, cuts, weights.weights, q)
    if problem.risk_spec is not None and problem.risk_spec.r > 1.0:
        z = np.concatenate([weights.weights, [float(q)]])
    else:
        z = np.array(weights.weights, dtype=float)
    grad = inner.obj_grad(z).copy()
    g = inner.con_values(z)
    if g.size:
        grad += inner.con_jac(z).T @ diag.ineq_multipliers
    grad[: s.d] -= diag.bound_multipliers
    a = np.zeros(inner.n_vars)
    a[: s.d] = 1.0
    stationarity = float(np.abs(grad + diag.eq_multiplier * a).max())
    primal = abs(float(weights.weights.sum()) - 1.0)
    ineq = float(max(g.max(), 0.0)) if g.size else 0.0
    return max(stationarity, primal, float(max(-weights.weights.min(), 0.0)), ineq)


def optimize_max_return(
    s: ScenarioSet, benchmark: DiscreteRandomVariable, p, cfg: SolverConfig | None = None
) -> SolveReport:
    """Maximize expected return subject to dominance over the benchmark at order p."""
    return _constraint_generation(s, benchmark, p, cfg or SolverConfig(), None)

def optimize_min_risk(
    s: ScenarioSet,
    benchmark: DiscreteRandomVariable,
    p,
    spec: RiskSpec,
    cfg: SolverConfig | None = None,
) -> SolveReport:
    """Minimize the higher-order risk measure subject to dominance at order p."""
    if not isinstance(spec, RiskSpec):
        raise DomainError("spec must be a RiskSpec")
    return _constraint_generation(s, benchmark, p, cfg or SolverConfig(), spec)


def _constraint_generation(s, benchmark, p, cfg, spec) -> SolveReport:
    p = order_value(p)
    if p < 2.0:
        raise DomainError(
            "the optimizer requires stochastic order >= 2; orders in [1, 2) are verification-only"
        )
    if s.d == 1:
        return _single_asset_report(s, benchmark, p, spec, cfg)

    mr = s.mean_returns()
    thresholds = [float(t) for t in np.unique(benchmark.outcomes)]
    cuts0 = _DominanceCuts(s, benchmark, p, thresholds)
    if spec is None:
        def pso_objective(w: PortfolioWeights) -> float:
            return -float(w.weights @ mr)
    else:
        # coarse inner minimization: plenty for swarm fitness ranking
        def pso_objective(w: PortfolioWeights) -> float:
            losses = spec.losses(w.weights @ s.returns)
            return minimize_phi(losses, s.scenario_probabilities, spec.beta, spec.r,
                                width=1e-6, polish=False).rho

    def pso_penalty(w: PortfolioWeights) -> float:
        return float(np.maximum(cuts0.values(w.weights), 0.0).sum())

    incumbent = pso_search(pso_objective, pso_penalty, s.d, cfg)
    problem = NewtonProblem(s, benchmark, p, spec)

    current = incumbent
    q_prev: float | None = None
    newton_total = 0
    rounds = 0
    least_gap = float("inf")
    last_refined: PortfolioWeights | None = None
    while True:
        rounds += 1
        refined, q_ref, diag = newton_refine(problem, current, thresholds, cfg, q0=q_prev)
        newton_total += diag.iterations
        last_refined = refined
        cert = verify(portfolio_return_variable(s, refined), benchmark, p, cfg.constraint_tol)
        gap = max(0.0, cert.worst_gap)
        least_gap = min(least_gap, gap)
        if gap <= cfg.constraint_tol:
            return _success_report(
                s, benchmark, p, spec, refined, diag.converged, cert, thresholds,
                rounds, newton_total, cfg,
            )
        t_new = float(cert.worst_t)
        duplicate = any(abs(t_new - t) <= 1e-9 * max(1.0, abs(t_new)) for t in thresholds)
        if len(thresholds) >= cfg.max_generated_constraints or duplicate:
            break
        thresholds.append(t_new)
        current = refined
        q_prev = q_ref if (spec is not None and spec.r > 1.0) else None

    # budget exhausted or stalled: sweep simple candidates before giving up
    candidates = [last_refined.weights, incumbent.weights, np.full(s.d, 1.0 / s.d)]
    candidates.extend(np.eye(s.d))
    best = None
    for xc in candidates:
        w = PortfolioWeights(xc)
        cert = verify(portfolio_return_variable(s, w), benchmark, p, cfg.constraint_tol)
        gap = max(0.0, cert.worst_gap)
        if gap > cfg.constraint_tol:
            least_gap = min(least_gap, gap)
            continue
        score = pso_objective(w)
        if best is None or score < best[0]:
            best = (score, w, cert)
    if best is not None:
        return _success_report(
            s, benchmark, p, spec, best[1], False, best[2], thresholds,
            rounds, newton_total, cfg,
        )
    return SolveReport(
        weights=None,
        active_thresholds=(),
        q_star=None,
        objective_value=None,
        expected_return=None,
        benchmark_return=mean(benchmark),
        risk_value=None,
        simplex_residual=None,
        dominance_residual=None,
        converged=False,
        iterations={"pso": cfg.pso_iterations, "newton": newton_total, "constraint_rounds": rounds},
        infeasible=True,
        message=(
            f"no allocation satisfies the stochastic dominance constraint at order {p:g} "
            f"within tolerance {cfg.constraint_tol:g}; least violated gap found: {least_gap:.6e}"
        ),
    )


def _active_thresholds(s, benchmark, p, w, thresholds, worst_t, activity_tol=1e-6):
    port = portfolio_return_variable(s, w)
    ts = np.asarray(thresholds, dtype=float)
    gaps = _gap_grid(port, benchmark, p, ts)
    order = np.argsort(-gaps, kind="stable")
    active = [float(ts[i]) for i in order if gaps[i] >= -activity_tol]
    out = [float(worst_t)]
    for t in active:
        if abs(t - worst_t) > 1e-12 * max(1.0, abs(t)):
            out.append(t)
    return tuple(out)


def _success_report(s, benchmark, p, spec, w, converged, cert, thresholds, rounds, newton_total, cfg) -> SolveReport:
    port = portfolio_return_variable(s, w)
    expected = mean(port)
    if spec is not None:
        rv = higher_order_risk(port, spec)
        q_star, risk_value = rv.q_star, rv.rho
        objective = risk_value
    else:
        q_star = risk_value = None
        objective = expected
    return SolveReport(
        weights=w,
        active_thresholds=_active_thresholds(s, benchmark, p, w, thresholds, cert.worst_t),
        q_star=q_star,
        objective_value=objective,
        expected_return=expected,
        benchmark_return=mean(benchmark),
        risk_value=risk_value,
        simplex_residual=w.simplex_residual(),
        dominance_residual=max(0.0, cert.worst_gap),
        converged=bool(converged),
        iterations={"pso": cfg.pso_iterations, "newton": newton_total, "constraint_rounds": rounds},
        infeasible=False,
        message=None,
    )


def _single_asset_report(s, benchmark, p, spec, cfg) -> SolveReport:
    w = PortfolioWeights(np.ones(1))
    cert = verify(portfolio_return_variable(s, w), benchmark, p, cfg.constraint_tol)
    if max(0.0, cert.worst_gap) > cfg.constraint_tol:
        return SolveReport(
            weights=None,
            active_thresholds=(),
            q_star=None,
            objective_value=None,
            expected_return=None,
            benchmark_return=mean(benchmark),
            risk_value=None,
            simplex_residual=None,
            dominance_residual=None,
            converged=False,
            iterations={"pso": 0, "newton": 0, "constraint_rounds": 0},
            infeasible=True,
            message=(
                f"the single available asset does not dominate the benchmark at order {p:g}; "
                f"gap {cert.worst_gap:.6e} at t = {cert.worst_t:.6g}"
            ),
        )
    thresholds = [float(t) for t in np.unique(benchmark.outcomes)]
    report = _success_report(s, benchmark, p, spec, w, True, cert, thresholds, 0, 0, cfg)
    return SolveReport(
        **{**report.__dict__, "iterations": {"pso": 0, "newton": 0, "constraint_rounds": 0}}
    )
