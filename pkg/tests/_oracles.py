"""Independent cross-checks used by the tests.

Everything here deliberately avoids the solver's own code paths: adjoint
trajectories are rebuilt by quadrature of the costate equation, inventories
by the explicit double-integral representation with closed-form exponential
factors, and terminal rates by direct integration against the measure.
"""

import numpy as np

from liqgames.riccati import cumulative_simpson, cumulative_trapezoid


def adjoint_reconstruction_error(path, eq):
    """Rebuild Y from the costate equation -Y' = lambda X + kappa mu and the
    terminal value (0 at early exit, alpha_T (x - f(T)) at the horizon);
    return the sup distance to the path's ansatz values A X + B."""
    co = eq.coeffs
    dt = float(eq.t[1] - eq.t[0])
    integ = co.lam * path.X + co.kappa * eq.mu
    k = int(np.flatnonzero(path.t <= path.tau)[-1])
    cum = cumulative_simpson(integ[: k + 1], dt)
    if path.tau < path.t[-1]:
        extra = (path.tau - path.t[k]) * 0.5 * (
            integ[k] + np.interp(path.tau, path.t, integ)
        )
        y_end = 0.0
    else:
        extra = 0.0
        y_end = eq.bundle.alpha_T * (path.x - eq.f[-1])
    y_rec = y_end + (cum[k] + extra) - cum[: k + 1]
    return float(np.max(np.abs(y_rec - path.Y[: k + 1])))


def constant_coefficient_A(eta, kappa, lam, T, delta, t):
    """Closed-form blow-up solution of the quadratic feedback equation for
    constant coefficients (finite for t < T)."""
    disc = np.sqrt(delta**2 * kappa**2 + 4.0 * eta * lam)
    rp = 0.5 * (delta * kappa + disc)
    rm = 0.5 * (delta * kappa - disc)
    return rp + (rp - rm) / np.expm1((rp - rm) * (T - t) / eta)


def _efac_closed(eta, kappa, lam, T, delta, t):
    """exp(-int_0^t A/eta) for the closed-form constant-coefficient A."""
    disc = np.sqrt(delta**2 * kappa**2 + 4.0 * eta * lam)
    rp = 0.5 * (delta * kappa + disc)
    beta = disc / eta
    return np.exp(-rp * t / eta) * (-np.expm1(-beta * (T - t))) / (-np.expm1(-beta * T))


def inventory_oracle_error(path, eq, times):
    """Explicit double-integral inventory representation, evaluated with
    closed-form exponential factors (constant coefficients only):

        X(t) = E1(t) { x - int_0^t  1/eta * 1/E1(s)
                        * int_s^tau kappa mu(u) E0(u)/E0(s) du ds }

    with E0 = exp(-int A/eta) and E1 = exp(-int (A - delta kappa)/eta).
    Returns the max deviation from the path inventory at the sample times.
    """
    co = eq.coeffs
    eta = float(co.eta[0])
    kappa = float(co.kappa[0])
    lam = float(co.lam[0])
    T = float(eq.t[-1])
    delta = eq.delta
    t = eq.t
    dt = float(t[1] - t[0])
    E0 = _efac_closed(eta, kappa, lam, T, delta, t)
    E1 = E0 * np.exp(delta * kappa * t / eta)

    inner_int = cumulative_trapezoid(kappa * eq.mu * E0, dt)
    inner_tau = np.interp(path.tau, t, inner_int)
    inner = np.zeros_like(t)
    live = (t <= path.tau) & (E0 > 0)
    inner[live] = (inner_tau - inner_int[live]) / E0[live]

    outer_integrand = np.zeros_like(t)
    outer_integrand[:-1] = inner[:-1] / (eta * E1[:-1])
    outer_integrand[-1] = outer_integrand[-2]
    outer = cumulative_trapezoid(outer_integrand, dt)
    errs = []
    for tv in times:
        i = int(round(tv / dt))
        x_oracle = E1[i] * (path.x - outer[i]) if t[i] <= path.tau else 0.0
        errs.append(abs(x_oracle - path.X[i]))
    return float(max(errs))


def rhs_reproduction_error(eq):
    """Substitute the solved rate into the backward integral equation, with
    every integral taken by plain trapezoid, and compare against the rate."""
    co, b = eq.coeffs, eq.bundle
    mu = eq.mu
    d = eq.delta
    dt = float(eq.t[1] - eq.t[0])
    v_back = cumulative_trapezoid(mu[::-1], dt)[::-1]
    g_back = cumulative_trapezoid((co.kappa * b.h * mu)[::-1], dt)[::-1]
    if eq.dropout:
        q = np.asarray(eq.dist.q0(eq.x_hat - g_back), dtype=float)
        p00 = float(eq.dist.p0(0.0))
    else:
        q = np.ones_like(mu)
        p00 = 0.0
    integ = (
        (co.kappa / co.eta) * (q + p00) * mu
        + ((co.lam + d * co.kappa_dot) / co.eta) * v_back
        + ((co.eta_dot - d * co.kappa) / co.eta) * mu
    )
    rhs = mu[-1] + cumulative_trapezoid(integ[::-1], dt)[::-1]
    return float(np.max(np.abs(rhs - mu)))


def terminal_rate_from_measure(eq, n=200001):
    """mu_T recomputed as alpha_T/eta_T int_{I}(x - x_hat) nu0(dx) by dense
    quadrature over the players still in the market at the horizon
    (atomless analytic measures only)."""
    dist = eq.dist
    assert dist.kind == "analytic" and dist.atom0 == 0.0
    x_hat = eq.x_hat
    total = 0.0
    if dist.w_sell > 0:
        lo = max(x_hat, 0.0)
        xs = np.linspace(lo, dist.seller_truncation() + lo, n)
        dens = (dist.w_sell / dist.mean_sell) * np.exp(-xs / dist.mean_sell)
        total += np.trapezoid((xs - x_hat) * dens, xs)
    if dist.w_buy > 0:
        hi = min(x_hat, 0.0)
        xs = np.linspace(dist.buyer_truncation() + hi, hi, n)
        dens = (dist.w_buy / dist.mean_buy) * np.exp(xs / dist.mean_buy)
        total += np.trapezoid((xs - x_hat) * dens, xs)
    eta_T = float(eq.coeffs.eta[-1])
    return eq.bundle.alpha_T / eta_T * total
