"""Higher-order coherent risk functional and its weight-space gradient.

The risk of a loss distribution L is min over q of

    phi(q) = q + (1 / (1 - beta)) * (E[(L - q)_+^r])^(1/r)

which generalizes CVaR (r = 1) to r-th moments of tail losses.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .types import (
    DimensionError,
    DiscreteRandomVariable,
    PortfolioWeights,
    RiskSpec,
    ScenarioSet,
)

_TERNARY_WIDTH = 1e-10
_BRACKET_EXTENSIONS = 20  # doubling steps; bounded to keep phi cancellation-free


@dataclass(frozen=True)
class RiskValue:
    """Risk measure value and the inner parameter that attains it."""

    rho: float
    q_star: float


def _phi(L: np.ndarray, p: np.ndarray, beta: float, r: float, q: float) -> float:
    u = L - q
    mask = u > 0.0
    if not mask.any():
        return q
    s = float(np.dot(p[mask], u[mask] ** r))
    return q + s ** (1.0 / r) / (1.0 - beta)


def _phi_prime(L: np.ndarray, p: np.ndarray, beta: float, r: float, q: float) -> float:
    """Derivative of phi in q; right-derivative (+1) once the tail is empty."""
    u = L - q
    mask = u > 0.0
    if not mask.any():
        return 1.0
    pm, um = p[mask], u[mask]
    if r == 1.0:
        return 1.0 - float(pm.sum()) / (1.0 - beta)
    s = float(np.dot(pm, um**r))
    m = float(np.dot(pm, um ** (r - 1.0)))
    return 1.0 - s ** ((1.0 - r) / r) * m / (1.0 - beta)


def minimize_phi(
    L: np.ndarray,
    p: np.ndarray,
    beta: float,
    r: float,
    width: float = _TERNARY_WIDTH,
    polish: bool = True,
) -> RiskValue:
    """Inner minimization of phi over q on raw loss/probability arrays.

    Runs a bracketed ternary search to the given width on
    [min L - range, max L], extending the left end while phi still
    increases there (small beta pushes the minimizer left of the nominal
    bracket), followed by a derivative-bisection polish when r > 1.
    Ties resolve to the smallest minimizer.
    """
    lo_min, hi = float(L.min()), float(L.max())
    if hi - lo_min <= 0.0:
        return RiskValue(rho=_phi(L, p, beta, r, hi), q_star=hi)

    step = hi - lo_min
    lo = lo_min - step
    for _ in range(_BRACKET_EXTENSIONS):
        if _phi_prime(L, p, beta, r, lo) <= 0.0:
            break
        step *= 2.0
        lo -= step

    # ternary search, biased to keep the leftmost minimizer in bracket
    a, b = lo, hi
    for _ in range(400):
        if b - a <= width:
            break
        m1 = a + (b - a) / 3.0
        m2 = b - (b - a) / 3.0
        if _phi(L, p, beta, r, m1) <= _phi(L, p, beta, r, m2):
            b = m2
        else:
            a = m1
    q_star = a

    if polish and r > 1.0:
        q_star = _derivative_bisection(L, p, beta, r, lo, hi, fallback=q_star)

    return RiskValue(rho=_phi(L, p, beta, r, q_star), q_star=q_star)


def higher_order_risk(v: DiscreteRandomVariable, spec: RiskSpec) -> RiskValue:
    """Evaluate the higher-order risk measure of v under spec.

    Losses are v's outcomes mapped per ``spec.loss_sign`` (default:
    negated returns); the inner minimizer follows ``minimize_phi`` at
    full precision.
    """
    return minimize_phi(spec.losses(v.outcomes), v.probabilities, spec.beta, spec.r)


def _derivative_bisection(L, p, beta, r, lo, hi, fallback):
    """Polish the minimizer of phi by bisecting on the sign of phi'.

    phi' is continuous for r > 1 except for a possible upward jump at
    max L; treating the right endpoint as positive makes the bisection
    converge onto that kink when the minimizer sits there.
    """
    fa = _phi_prime(L, p, beta, r, lo)
    if fa >= 0.0:
        cand = lo
    else:
        a, b = lo, hi
        for _ in range(200):
            if b - a <= 1e-14 * max(1.0, abs(a), abs(b)):
                break
            m = 0.5 * (a + b)
            if _phi_prime(L, p, beta, r, m) < 0.0:
                a = m
            else:
                b = m
        cand = 0.5 * (a + b)
    # keep whichever candidate is better; prefer the smaller q on ties
    pc, pf = _phi(L, p, beta, r, cand), _phi(L, p, beta, r, fallback)
    if pc < pf or (pc == pf and cand < fallback):
        return cand
    return fallback


def risk_gradient_in_weights(
    s: ScenarioSet, w: PortfolioWeights, q: float, spec: RiskSpec
) -> np.ndarray:
    """Gradient of phi(q; w) with respect to the weights, at fixed q.

    Chain rule through the per-scenario losses; returns the zero vector
    when no loss exceeds q (subgradient convention for the inactive
    positive part).
    """
    if w.d != s.d:
        raise DimensionError(f"weights have {w.d} entries but the scenario set has {s.d} assets")
    L = spec.losses(w.weights @ s.returns)
    u = L - float(q)
    mask = u > 0.0
    if not mask.any():
        return np.zeros(s.d)
    pm, um = s.scenario_probabilities[mask], u[mask]
    r = spec.r
    if r == 1.0:
        coef = pm
    else:
        S = float(np.dot(pm, um**r))
        coef = S ** (1.0 / r - 1.0) * pm * um ** (r - 1.0)
    return (spec.sign / (1.0 - spec.beta)) * (s.returns[:, mask] @ coef)
