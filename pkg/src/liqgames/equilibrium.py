"""Equilibrium mean trading rate via a parametrised backward equation.

For a trial level ``c >= 0`` the rate mu^c solves, backward from t = T,

    mu'(t) = -(kappa/eta) * (q0(c - g) + p0(0)) * mu
             - (lambda + delta*kappa_dot)/eta * v
             - (eta_dot - delta*kappa)/eta * mu
    v'(t)  = -mu                      v(T) = 0      (v = int_t^T mu)
    g'(t)  = -kappa * h * mu          g(T) = 0      (g = int_t^T kappa h mu)

with the exogenous terminal value

    mu^c(T) = alpha_T / eta_T * (mean - (1 - q0(0)) * c - Q0(c)).

The map psi(c) = c - g(0) = c - f_{mu^c}(T) is continuous and strictly
increasing, and its unique root x_hat delivers the equilibrium: x_hat is the
largest initial position for which early liquidation occurs.  Root finding is
plain bisection because q0 may be a step function (empirical measures), which
makes psi only piecewise smooth.

Markets dominated by buyers (negative mean) are solved by reflecting the
initial measure through the origin and negating the result; a zero mean
short-circuits to the identically-zero rate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import AssumptionError, InvalidInputError, NumericalFailureError
from .model import (
    CoefficientSet,
    InitialDistribution,
    make_empirical,
    validate_assumptions,
)
from .riccati import RiccatiBundle, cumulative_trapezoid, solve_riccati

BISECT_TOL = 1e-10
MAX_BISECT = 200
MAX_DOUBLINGS = 60


@dataclass
class EquilibriumSolution:
    """Solved equilibrium aggregate rate plus diagnostics.

    ``f`` is the running level f(t) = int_0^t kappa h mu whose terminal value
    equals ``x_hat``; ``f_max`` / ``f_min`` are its running extrema.  ``K1``
    and ``K2`` are the a priori exponential-bound constants for the rate.
    ``residual`` stays None until the strategies module fills in the
    independent fixed-point check.
    """

    delta: float
    t: np.ndarray
    mu: np.ndarray
    x_hat: float
    mu_T: float
    f: np.ndarray
    f_max: np.ndarray
    f_min: np.ndarray
    K1: float
    K2: float
    coeffs: CoefficientSet
    dist: InitialDistribution
    bundle: RiccatiBundle
    dropout: bool = True
    residual: float | None = None
    psi_value: float = 0.0
    iterations: int = 0
    v_state: np.ndarray | None = field(default=None, repr=False)
    g_state: np.ndarray | None = field(default=None, repr=False)

    @property
    def T(self) -> float:
        return float(self.t[-1])

    def summary(self) -> dict:
        return {
            "delta": self.delta,
            "x_hat": self.x_hat,
            "mu_T": self.mu_T,
            "mu_0": float(self.mu[0]),
            "alpha_T": self.bundle.alpha_T,
            "K1": self.K1,
            "K2": self.K2,
            "residual": self.residual,
            "psi_value": self.psi_value,
            "dropout": self.dropout,
        }


class _FullMassTails:
    """Tail view with q0 == 1 and p0 == 0: no player ever leaves the market.

    Substituting these tails into the backward equation and the terminal
    condition reproduces the classical liquidation game without drop-out.
    """

    def __init__(self, mean):
        self.mean = float(mean)
        self.supp_upper = math.inf

    def q0(self, x):
        return np.ones_like(np.asarray(x, dtype=float)) if np.ndim(x) else 1.0

    def p0(self, x):
        return np.zeros_like(np.asarray(x, dtype=float)) if np.ndim(x) else 0.0

    def Q0(self, x):
        return np.asarray(x, dtype=float) + 0.0 if np.ndim(x) else float(x)

    def q0_scalar(self):
        return lambda z: 1.0

    def reflected(self):
        return _FullMassTails(-self.mean)


def terminal_rate(c, dist, alpha_T, eta_T) -> float:
    """Terminal rate alpha_T/eta_T * (mean - (1 - q0(0)) c - Q0(c)).

    Strictly decreasing in c; at c = 0 it reduces to alpha_T/eta_T * mean.
    """
    if c < 0:
        raise InvalidInputError("terminal level c must be non-negative")
    q00 = float(dist.q0(0.0))
    return float(alpha_T / eta_T) * (dist.mean - (1.0 - q00) * c - float(dist.Q0(c)))


def _ode_tables(coeffs: CoefficientSet, bundle: RiccatiBundle):
    """Coefficient products at grid nodes and interval midpoints, as lists."""
    grid = coeffs.grid
    dt = float(grid[1] - grid[0])
    tm = grid[:-1] + 0.5 * dt
    delta = bundle.delta

    def build(eta, kap, lam, etad, kapd, h):
        a1 = kap / eta
        a2 = (lam + delta * kapd) / eta
        a3 = (etad - delta * kap) / eta
        kh = kap * h
        return a1.tolist(), a2.tolist(), a3.tolist(), kh.tolist()

    nodes = build(coeffs.eta, coeffs.kappa, coeffs.lam, coeffs.eta_dot,
                  coeffs.kappa_dot, bundle.h)
    mids = build(coeffs.at("eta", tm), coeffs.at("kappa", tm),
                 coeffs.at("lam", tm), coeffs.at("eta_dot", tm),
                 coeffs.at("kappa_dot", tm), bundle.h_mid)
    return nodes, mids, dt


def _integrate_backward(c, mu_T, nodes, mids, dt, q0, p00):
    """One classical fourth-order sweep of (mu, v, g) from T down to 0."""
    a1n, a2n, a3n, khn = nodes
    a1m, a2m, a3m, khm = mids
    M = len(a1m)
    mu = np.empty(M + 1)
    v_arr = np.empty(M + 1)
    g_arr = np.empty(M + 1)
    mu[M] = mu_T
    v_arr[M] = 0.0
    g_arr[M] = 0.0
    m_, v_, g_ = float(mu_T), 0.0, 0.0
    half = 0.5 * dt
    sixth = dt / 6.0
    for i in range(M, 0, -1):
        j = i - 1
        k1m = -(a1n[i] * (q0(c - g_) + p00) + a3n[i]) * m_ - a2n[i] * v_
        k1g = -khn[i] * m_
        m2 = m_ - half * k1m
        v2 = v_ + half * m_
        g2 = g_ - half * k1g
        a1 = a1m[j]
        a2 = a2m[j]
        a3 = a3m[j]
        kh = khm[j]
        k2m = -(a1 * (q0(c - g2) + p00) + a3) * m2 - a2 * v2
        k2g = -kh * m2
        m3 = m_ - half * k2m
        v3 = v_ + half * m2
        g3 = g_ - half * k2g
        k3m = -(a1 * (q0(c - g3) + p00) + a3) * m3 - a2 * v3
        k3g = -kh * m3
        m4 = m_ - dt * k3m
        v4 = v_ + dt * m3
        g4 = g_ - dt * k3g
        k4m = -(a1n[j] * (q0(c - g4) + p00) + a3n[j]) * m4 - a2n[j] * v4
        k4g = -khn[j] * m4
        v_ += sixth * (m_ + 2.0 * (m2 + m3) + m4)
        m_ -= sixth * (k1m + 2.0 * (k2m + k3m) + k4m)
        g_ -= sixth * (k1g + 2.0 * (k2g + k3g) + k4g)
        mu[j] = m_
        v_arr[j] = v_
        g_arr[j] = g_
    return mu, v_arr, g_arr


def solve_mu_for_c(c, coeffs: CoefficientSet, dist, bundle: RiccatiBundle):
    """Solve the backward system for a trial level c.

    Returns ``(mu, g0)`` where ``g0 = f_{mu^c}(T)`` is the total forward
    integral of kappa * h * mu.
    """
    nodes, mids, dt = _ode_tables(coeffs, bundle)
    mu_T = terminal_rate(c, dist, bundle.alpha_T, float(coeffs.eta[-1]))
    mu, _, g_arr = _integrate_backward(
        c, mu_T, nodes, mids, dt, dist.q0_scalar(), float(dist.p0(0.0))
    )
    if not np.all(np.isfinite(mu)):
        raise NumericalFailureError("backward rate integration diverged")
    return mu, float(g_arr[0])


def psi(c, coeffs: CoefficientSet, dist, bundle: RiccatiBundle) -> float:
    """psi(c) = c - f_{mu^c}(T); strictly increasing with root x_hat."""
    if c < 0:
        raise InvalidInputError("c must be non-negative")
    _, g0 = solve_mu_for_c(c, coeffs, dist, bundle)
    return float(c - g0)


def _terminal_root_c(dist, mean) -> float:
    """Root of c -> mu^c_T when q0(0) < 1 (used as the bisection upper bound)."""
    q00 = float(dist.q0(0.0))
    hi = mean / (1.0 - q00)

    def gap(cv):
        return mean - (1.0 - q00) * cv - float(dist.Q0(cv))

    lo = 0.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if gap(mid) > 0.0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-15 * (1.0 + hi):
            break
    return hi


def _find_root(coeffs, tails, bundle, c_upper=None, bisect_tol=BISECT_TOL):
    """Bisection on psi over [0, c_upper]; returns the solved state at the root."""
    mean = tails.mean
    if mean <= 0:
        raise InvalidInputError("root finding requires a positive mean")
    nodes, mids, dt = _ode_tables(coeffs, bundle)
    q0 = tails.q0_scalar()
    p00 = float(tails.p0(0.0))
    eta_T = float(coeffs.eta[-1])

    def eval_psi(cv):
        mu_T = terminal_rate(cv, tails, bundle.alpha_T, eta_T)
        mu, v_arr, g_arr = _integrate_backward(cv, mu_T, nodes, mids, dt, q0, p00)
        return cv - g_arr[0], (mu, v_arr, g_arr)

    if c_upper is None:
        q00 = float(tails.q0(0.0))
        if q00 < 1.0:
            c_upper = _terminal_root_c(tails, mean)
        elif math.isfinite(tails.supp_upper):
            c_upper = float(tails.supp_upper)
        else:
            c_upper = max(mean, 1e-6)
            val, _ = eval_psi(c_upper)
            n = 0
            while val <= 0.0:
                n += 1
                if n > MAX_DOUBLINGS:
                    raise NumericalFailureError("could not bracket the root of psi")
                c_upper *= 2.0
                val, _ = eval_psi(c_upper)

    tol = bisect_tol * (1.0 + c_upper)
    lo, hi = 0.0, float(c_upper)
    psi_hi, state = eval_psi(hi)
    if psi_hi < 0.0:
        raise NumericalFailureError("psi is negative at the upper bracket")
    best = (hi, psi_hi, state)
    iters = 0
    for iters in range(1, MAX_BISECT + 1):
        mid = 0.5 * (lo + hi)
        val, state = eval_psi(mid)
        if abs(val) < abs(best[1]):
            best = (mid, val, state)
        if abs(val) <= tol or (hi - lo) <= 1e-14 * (1.0 + c_upper):
            break
        if val < 0.0:
            lo = mid
        else:
            hi = mid
    c_root, psi_root, (mu, v_arr, g_arr) = best
    return {
        "x_hat": float(c_root),
        "psi": float(psi_root),
        "mu": mu,
        "v": v_arr,
        "g": g_arr,
        "iterations": iters,
        "c_upper": float(c_upper),
    }


def _rate_bound_constants(coeffs: CoefficientSet, delta):
    K1 = delta * coeffs.sup("kappa") * coeffs.sup_inv_eta()
    K2 = coeffs.sup_inv_eta() * (
        (1.0 + delta) * coeffs.sup("kappa")
        + delta * coeffs.T * coeffs.sup("kappa_dot")
        + coeffs.T * coeffs.sup("lam")
        + coeffs.sup("eta_dot")
    )
    return float(K1), float(K2)


def _package(coeffs, dist, bundle, root, dropout, sign=1.0):
    mu = sign * root["mu"]
    kh = coeffs.kappa * bundle.h
    f = cumulative_trapezoid(kh * mu, float(coeffs.grid[1] - coeffs.grid[0]))
    K1, K2 = _rate_bound_constants(coeffs, bundle.delta)
    return EquilibriumSolution(
        delta=bundle.delta,
        t=coeffs.grid,
        mu=mu,
        x_hat=float(sign * root["x_hat"]),
        mu_T=float(mu[-1]),
        f=f,
        f_max=np.maximum.accumulate(f),
        f_min=np.minimum.accumulate(f),
        K1=K1,
        K2=K2,
        coeffs=coeffs,
        dist=dist,
        bundle=bundle,
        dropout=dropout,
        psi_value=root["psi"],
        iterations=root["iterations"],
        v_state=sign * root["v"],
        g_state=sign * root["g"],
    )


def _zero_solution(coeffs, dist, bundle, dropout):
    z = np.zeros_like(coeffs.grid)
    K1, K2 = _rate_bound_constants(coeffs, bundle.delta)
    return EquilibriumSolution(
        delta=bundle.delta,
        t=coeffs.grid,
        mu=z,
        x_hat=0.0,
        mu_T=0.0,
        f=z.copy(),
        f_max=z.copy(),
        f_min=z.copy(),
        K1=K1,
        K2=K2,
        coeffs=coeffs,
        dist=dist,
        bundle=bundle,
        dropout=dropout,
        psi_value=0.0,
        iterations=0,
        v_state=z.copy(),
        g_state=z.copy(),
    )


def find_x_hat(coeffs: CoefficientSet, dist, bundle: RiccatiBundle,
               bisect_tol=BISECT_TOL) -> EquilibriumSolution:
    """Locate the unique fixed point x_hat = f_{mu^{x_hat}}(T) by bisection.

    Requires a positive-mean measure; callers handle reflection (negative
    mean) and the trivial zero-mean case.
    """
    if dist.mean <= 0:
        raise InvalidInputError("find_x_hat requires a positive-mean measure")
    root = _find_root(coeffs, dist, bundle, bisect_tol=bisect_tol)
    return _package(coeffs, dist, bundle, root, dropout=True)


def _solve_with_reflection(coeffs, dist, bundle, dropout, c_upper=None,
                           bisect_tol=BISECT_TOL):
    mean = dist.mean
    if mean == 0.0:
        return _zero_solution(coeffs, dist, bundle, dropout)
    if mean > 0:
        root = _find_root(coeffs, dist, bundle, c_upper=c_upper,
                          bisect_tol=bisect_tol)
        return _package(coeffs, dist, bundle, root, dropout)
    reflected = dist.reflected()
    root = _find_root(coeffs, reflected, bundle, c_upper=c_upper,
                      bisect_tol=bisect_tol)
    return _package(coeffs, dist, bundle, root, dropout, sign=-1.0)


def solve_mfg(coeffs: CoefficientSet, dist: InitialDistribution,
              bisect_tol=BISECT_TOL) -> EquilibriumSolution:
    """Mean-field equilibrium (delta = 0) with market drop-out."""
    report = validate_assumptions(coeffs, 0.0)
    if not report.ok_mfg:
        raise AssumptionError(report.summary())
    bundle = solve_riccati(coeffs, 0.0)
    return _solve_with_reflection(coeffs, dist, bundle, dropout=True,
                                  bisect_tol=bisect_tol)


def solve_nplayer(coeffs: CoefficientSet, positions,
                  bisect_tol=BISECT_TOL) -> EquilibriumSolution:
    """N-player equilibrium: empirical measure, delta = 1/N.

    The solved mu is the equilibrium aggregate rate (1/N) sum_i xi^i.
    """
    positions = np.asarray(positions, dtype=float)
    n = positions.size
    if n < 1:
        raise InvalidInputError("need at least one player")
    delta = 1.0 / n
    report = validate_assumptions(coeffs, delta)
    if not report.ok_nplayer:
        raise AssumptionError(report.summary())
    dist = make_empirical(positions)
    bundle = solve_riccati(coeffs, delta)
    return _solve_with_reflection(coeffs, dist, bundle, dropout=True,
                                  bisect_tol=bisect_tol)


def solve_no_dropout_baseline(coeffs: CoefficientSet, dist: InitialDistribution,
                              bisect_tol=BISECT_TOL) -> EquilibriumSolution:
    """Baseline without market drop-out: tails forced to q0 == 1, p0 == 0.

    The terminal condition becomes linear in c, so the root of the terminal
    map (c = mean) brackets the fixed point.
    """
    report = validate_assumptions(coeffs, 0.0)
    if not report.ok_mfg:
        raise AssumptionError(report.summary())
    bundle = solve_riccati(coeffs, 0.0)
    mean = dist.mean
    if mean == 0.0:
        return _zero_solution(coeffs, dist, bundle, dropout=False)
    tails = _FullMassTails(abs(mean))
    root = _find_root(coeffs, tails, bundle, c_upper=abs(mean),
                      bisect_tol=bisect_tol)
    return _package(coeffs, dist, bundle, root, dropout=False,
                    sign=1.0 if mean > 0 else -1.0)
