"""Per-player equilibrium strategies, costs, and independent verification.

Given a solved aggregate rate mu, the individual response of a player with
initial position x is assembled from the Riccati bundle:

    B(t) = int_t^tau exp(-int_t^s A/eta) kappa(s) mu(s) ds        (intercept)
    X'   = -((A - delta*kappa) X + B)/eta   on [0, tau],  X clamped to 0 after
    Y    = A X + B on [0, tau),  with terminal limit alpha_T (x - f(T)) if tau = T
    xi   = (Y - delta*kappa*X)/eta

The drop-out time tau is the first crossing of the level curve f against x;
players whose position lies outside the attained range of f (wrong-sign
players, or positions above x_hat) stay until T.

The linear inventory ODE is integrated in one pass through its integrating
factor D = exp(-int_0^t (A - delta*kappa)/eta):  X = D * (x - int_0^t B/(eta D)),
which is exact for the continuous problem and avoids stepping across the
singular coefficient at t = T.

This module also hosts the two independent equilibrium checks: the
fixed-point residual sup_t |mu - int xi^x nu0(dx)| (the solver never
evaluates that integral) and best-response comparisons against a battery of
admissible competitor strategies.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError
from .riccati import cumulative_simpson, cumulative_trapezoid


@dataclass
class PlayerPath:
    """One player's equilibrium trajectory.

    ``Y`` and ``B`` are meaningful for equilibrium responses only; competitor
    paths built for best-response checks carry zeros there.
    """

    x: float
    tau: float
    t: np.ndarray
    X: np.ndarray
    Y: np.ndarray
    B: np.ndarray
    xi: np.ndarray
    cost: float


@dataclass(frozen=True)
class CompetitorSpec:
    """An admissible deviation strategy for best-response checks."""

    kind: str
    param: float | None = None

    @property
    def label(self) -> str:
        return self.kind if self.param is None else f"{self.kind}({self.param:g})"


@dataclass
class NashReport:
    """Cost margins of every player against every competitor."""

    rows: list
    tol: float

    @property
    def n_violations(self) -> int:
        return sum(1 for r in self.rows if r["violation"])

    @property
    def worst_margin(self) -> float:
        return min((r["margin"] for r in self.rows), default=0.0)

    @property
    def ok(self) -> bool:
        return self.n_violations == 0


def _trapz(y, dx):
    return float(dx * (np.sum(y) - 0.5 * (y[0] + y[-1])))


def f_curve(mu, bundle):
    """f(t) = int_0^t kappa h mu with running maximum and minimum."""
    dt = float(bundle.grid[1] - bundle.grid[0])
    f = cumulative_trapezoid(bundle.coeffs.kappa * bundle.h * mu, dt)
    return f, np.maximum.accumulate(f), np.minimum.accumulate(f)


def liquidation_time(x, f, f_max, f_min, t) -> float:
    """First time f crosses the level of x; T if the level is never attained.

    Early liquidation happens exactly for positions strictly inside the
    attained range (f_min(T), f_max(T)); everyone else trades until the
    horizon.  x = 0 degenerates to immediate absorption (the zero path).
    """
    T = float(t[-1])
    if x == 0.0:
        return 0.0
    if not (float(f_min[-1]) < x < float(f_max[-1])):
        return T
    s = f - x
    idx = np.flatnonzero(s >= 0.0) if x > 0 else np.flatnonzero(s <= 0.0)
    if idx.size == 0:
        return T
    i = int(idx[0])
    if i == 0:
        return float(t[0])
    df = f[i] - f[i - 1]
    if df == 0.0:
        return float(t[i])
    # written so that an exact node hit f(t_i) = x returns t_i exactly
    return float(t[i] - (t[i] - t[i - 1]) * (f[i] - x) / df)


def _zero_path(t):
    z = np.zeros_like(t)
    return PlayerPath(x=0.0, tau=0.0, t=t, X=z, Y=z.copy(), B=z.copy(),
                      xi=z.copy(), cost=0.0)


def _eval_cumulative(W, f, t, s):
    """Cumulative integral W evaluated between nodes: node value plus a local
    trapezoid over the partial cell (one order better than interpolating W)."""
    s = np.asarray(s, dtype=float)
    dt = float(t[1] - t[0])
    k = np.minimum(np.floor(s / dt).astype(int), t.size - 2)
    frac = s - t[k]
    f_s = np.interp(s, t, f)
    out = np.where(s == t[-1], W[-1], W[k] + frac * 0.5 * (f[k] + f_s))
    return out if out.ndim else float(out)


def player_path(x, equilibrium) -> PlayerPath:
    """Reconstruct the equilibrium trajectory of a player starting at x."""
    eq = equilibrium
    t = eq.t
    if t.size != eq.bundle.grid.size:
        raise InvalidInputError("equilibrium and bundle grids do not match")
    if x == 0.0:
        return _zero_path(t)
    b = eq.bundle
    co = eq.coeffs
    T = float(t[-1])
    dt = float(t[1] - t[0])
    tau = liquidation_time(x, eq.f, eq.f_max, eq.f_min, t) if eq.dropout else T

    ekm = b.Efac * co.kappa * eq.mu
    W = cumulative_simpson(ekm, dt)
    W_tau = _eval_cumulative(W, ekm, t, tau)
    B = np.zeros_like(t)
    integ = np.zeros_like(t)
    if tau == T:
        B[:-1] = (W_tau - W[:-1]) / b.Efac[:-1]
        integ[:-1] = B[:-1] / (co.eta[:-1] * b.D[:-1])
        integ[-1] = integ[-2]  # finite limit; weight vanishes with D(T) = 0
    else:
        on = np.flatnonzero(t <= tau)
        B[on] = (W_tau - W[on]) / b.Efac[on]
        integ[on] = B[on] / (co.eta[on] * b.D[on])
    V = cumulative_simpson(integ, dt)
    X = np.where(t <= tau, b.D * (x - V), 0.0)

    Y = np.zeros_like(t)
    interior = t < tau
    Y[interior] = b.A[interior] * X[interior] + B[interior]
    if tau == T:
        Y[-1] = b.alpha_T * (x - eq.f[-1])
    xi = (Y - eq.delta * co.kappa * X) / co.eta

    path = PlayerPath(x=float(x), tau=float(tau), t=t, X=X, Y=Y, B=B, xi=xi,
                      cost=0.0)
    path.cost = cost(path, eq)
    return path


def cost(path, equilibrium, mode="mfg", player=None, all_paths=None) -> float:
    """Realized cost of a trajectory.

    ``mfg``     : J = int 1/2 eta xi^2 + kappa mu X + 1/2 lambda X^2
    ``nplayer`` : the permanent-impact term prices at the actual average rate
                  (own xi plus the other players' equilibrium rates) / N.
    """
    eq = equilibrium
    co = eq.coeffs
    dt = float(eq.t[1] - eq.t[0])
    if mode == "mfg":
        drive = co.kappa * eq.mu * path.X
    elif mode == "nplayer":
        if player is None or all_paths is None:
            raise InvalidInputError("nplayer cost needs player index and all paths")
        n = len(all_paths)
        others = np.zeros_like(path.xi)
        for j, p in enumerate(all_paths):
            if j != player:
                others = others + p.xi
        drive = co.kappa * path.X * (path.xi + others) / n
    else:
        raise InvalidInputError(f"unknown cost mode {mode!r}")
    integrand = 0.5 * co.eta * path.xi**2 + drive + 0.5 * co.lam * path.X**2
    return _trapz(integrand, dt)


def _response_matrix(eq, xs):
    """xi trajectories for a batch of initial positions, one column per x."""
    t = eq.t
    b = eq.bundle
    co = eq.coeffs
    T = float(t[-1])
    dt = float(t[1] - t[0])
    xs = np.asarray(xs, dtype=float)
    if eq.dropout:
        taus = np.array([liquidation_time(x, eq.f, eq.f_max, eq.f_min, t)
                         for x in xs])
    else:
        taus = np.full(xs.shape, T)
    taus = np.where(xs == 0.0, 0.0, taus)

    ekm = b.Efac * co.kappa * eq.mu
    W = cumulative_simpson(ekm, dt)
    W_tau = _eval_cumulative(W, ekm, t, taus)
    on = t[:, None] <= taus[None, :]
    B = np.zeros((t.size, xs.size))
    B[:-1, :] = (W_tau[None, :] - W[:-1, None]) / b.Efac[:-1, None]
    B[~on] = 0.0
    B[-1, :] = 0.0

    integ = np.zeros_like(B)
    integ[:-1, :] = B[:-1, :] / (co.eta[:-1, None] * b.D[:-1, None])
    integ[-1, :] = integ[-2, :]
    integ[~on] = 0.0
    V = cumulative_simpson(integ, dt)
    X = np.where(on, b.D[:, None] * (xs[None, :] - V), 0.0)

    Y = np.zeros_like(B)
    inner = t[:, None] < taus[None, :]
    AX = np.where(inner[:-1, :], b.A[:-1, None] * X[:-1, :] + B[:-1, :], 0.0)
    Y[:-1, :] = AX
    Y[-1, :] = np.where(taus == T, b.alpha_T * (xs - eq.f[-1]), 0.0)
    xi = (Y - eq.delta * co.kappa[:, None] * X) / co.eta[:, None]
    xi[:, xs == 0.0] = 0.0
    return xi, taus


def _graded_nodes(core, full, n, core_frac=0.5):
    """Uniform nodes on [0, core], geometrically growing cells on [core, full].

    The response trajectories are kinked in x across the early-liquidation
    band and smooth-but-exponentially-weighted beyond it, so half the budget
    resolves the band and the rest stretches to the truncation point.
    """
    n1 = max(4, int(round(n * core_frac)))
    n2 = max(4, n - n1)
    head = np.linspace(0.0, core, n1)
    ratio = (full / core) ** (1.0 / n2)
    tail = core * ratio ** np.arange(1, n2 + 1)
    tail[-1] = full
    return np.concatenate([head, tail])


def _trap_weights(xs):
    w = np.zeros_like(xs)
    d = np.abs(np.diff(xs))
    w[:-1] += 0.5 * d
    w[1:] += 0.5 * d
    return w


def _seller_quadrature(dist, x_hat, n):
    """Trapezoid nodes/weights against the seller density on (0, truncation].

    The node at the origin is nudged to +1e-12: the density carries no atom
    there, and the one-sided limit of the response (zero path on the early
    exit side, full-horizon round trip otherwise) is then picked up
    automatically by the drop-out-time machinery.
    """
    full = dist.seller_truncation()
    core = min(max(abs(x_hat), 0.5 * dist.mean_sell), 0.5 * full)
    xs = _graded_nodes(core, full, n)
    xs[0] = 1e-12
    dens = (dist.w_sell / dist.mean_sell) * np.exp(-xs / dist.mean_sell)
    return xs, _trap_weights(xs) * dens


def _buyer_quadrature(dist, x_hat, n):
    full = -dist.buyer_truncation()
    core = min(max(abs(x_hat), 0.5 * dist.mean_buy), 0.5 * full)
    xs = -_graded_nodes(core, full, n)
    xs[0] = -1e-12
    dens = (dist.w_buy / dist.mean_buy) * np.exp(xs / dist.mean_buy)
    return xs, _trap_weights(xs) * dens


def fixed_point_residual(equilibrium, n_x=400) -> float:
    """sup_t |mu(t) - int xi^x(t) nu0(dx)|, evaluated independently.

    Empirical measures use the exact atom sum; analytic measures a trapezoid
    quadrature over the position axis with the tails truncated where the mass
    drops below the model truncation threshold.  Stored on the solution as
    ``residual`` and returned.
    """
    eq = equilibrium
    dist = eq.dist
    if dist.kind == "empirical":
        xs = dist.positions
        live = xs != 0.0
        F = np.zeros_like(eq.mu)
        if np.any(live):
            xi, _ = _response_matrix(eq, xs[live])
            F = xi.sum(axis=1) / xs.size
    else:
        F = np.zeros_like(eq.mu)
        share = dist.w_sell / (dist.w_sell + dist.w_buy) if dist.w_buy else 1.0
        n_s = int(round(n_x * min(0.75, max(0.25, share))))
        if dist.w_sell > 0:
            xs, wts = _seller_quadrature(dist, eq.x_hat, n_s if dist.w_buy else n_x)
            xi, _ = _response_matrix(eq, xs)
            F = F + xi @ wts
        if dist.w_buy > 0:
            xs, wts = _buyer_quadrature(dist, eq.x_hat,
                                        n_x - n_s if dist.w_sell else n_x)
            xi, _ = _response_matrix(eq, xs)
            F = F + xi @ wts
    res = float(np.max(np.abs(eq.mu - F)))
    eq.residual = res
    return res


def default_battery():
    """Fixed battery of admissible competitor strategies."""
    return (
        CompetitorSpec("twap_full_horizon"),
        CompetitorSpec("twap_to_tau"),
        CompetitorSpec("scaled_equilibrium", 1.1),
        CompetitorSpec("scaled_equilibrium", 1.25),
        CompetitorSpec("early_stop", 0.5),
        CompetitorSpec("early_stop", 0.8),
    )


def competitor_path(spec: CompetitorSpec, x, equilibrium, eq_path) -> PlayerPath:
    """Build the admissible deviation described by ``spec`` for position x.

    Every competitor liquidates fully at some tau in (0, T] and stays at zero
    afterwards, so it belongs to the admissible set of the player.
    """
    t = equilibrium.t
    T = float(t[-1])
    dt = float(t[1] - t[0])
    if x == 0.0:
        return _zero_path(t)
    z = np.zeros_like(t)
    if spec.kind == "twap_full_horizon":
        tau_c = T
        xi = np.full_like(t, x / T)
        X = x * (1.0 - t / T)
    elif spec.kind in ("twap_to_tau", "early_stop"):
        tau_c = eq_path.tau if spec.kind == "twap_to_tau" else spec.param * T
        if tau_c <= 0.0:
            return _zero_path(t)
        xi = np.where(t <= tau_c, x / tau_c, 0.0)
        X = x * np.clip(1.0 - t / tau_c, 0.0, None)
    elif spec.kind == "scaled_equilibrium":
        fac = float(spec.param)
        if fac <= 1.0:
            raise InvalidInputError("scaled_equilibrium factor must exceed 1")
        X = x - fac * cumulative_trapezoid(eq_path.xi, dt)
        sgn = 1.0 if x > 0 else -1.0
        hit = np.flatnonzero(sgn * X <= 0.0)
        j = int(hit[0]) if hit.size else t.size - 1
        xi = fac * eq_path.xi.copy()
        X = X.copy()
        X[j:] = 0.0
        xi[j:] = 0.0
        tau_c = float(t[j])
    else:
        raise InvalidInputError(f"unknown competitor kind {spec.kind!r}")
    return PlayerPath(x=float(x), tau=float(tau_c), t=t, X=X, Y=z,
                      B=z.copy(), xi=xi, cost=math.nan)


def nash_check(positions, equilibrium, competitors=None, tol=1e-8) -> NashReport:
    """Verify that no player gains from any competitor deviation.

    For each player i and competitor strategy, compares the game cost of the
    equilibrium response against the deviation while everyone else keeps
    playing the equilibrium.  Violations are reported, never raised.
    """
    eq = equilibrium
    positions = np.asarray(positions, dtype=float)
    if competitors is None:
        competitors = default_battery()
    paths = [player_path(x, eq) for x in positions]
    rows = []
    for i, x in enumerate(positions):
        j_eq = cost(paths[i], eq, mode="nplayer", player=i, all_paths=paths)
        for spec in competitors:
            dev = competitor_path(spec, x, eq, paths[i])
            j_dev = cost(dev, eq, mode="nplayer", player=i, all_paths=paths)
            margin = j_dev - j_eq
            rows.append({
                "player": i,
                "x": float(x),
                "competitor": spec.label,
                "cost_eq": j_eq,
                "cost_dev": j_dev,
                "margin": margin,
                "violation": margin < -tol * (1.0 + abs(j_eq)),
            })
    return NashReport(rows=rows, tol=tol)
