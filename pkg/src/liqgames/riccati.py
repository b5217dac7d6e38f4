"""Singular-terminal-value Riccati equation and the quantities derived from it.

The feedback coefficient A solves (backward in time)

    -dA/dt = -A^2/eta + delta*kappa*A/eta + lambda,      A(T) = +infinity.

We never integrate A itself: the inverse y = 1/A satisfies the regular
terminal value problem

    dy/dt = -1/eta + delta*kappa*y/eta + lambda*y^2,     y(T) = 0,

which removes the blow-up entirely.  From y we assemble

    alpha(t) = A(t) * exp(-int_0^t (A - delta*kappa)/eta)     (alpha' = -lambda*y*alpha)
    D(t)     = exp(-int_0^t (A - delta*kappa)/eta) = alpha*y
    Efac(t)  = exp(-int_0^t A/eta) = D * exp(-int_0^t delta*kappa/eta)

and the strictly increasing function h with h(0) = 0, h(T) = 1/alpha(T),

    h(t)  = 1/alpha(t) - Efac(t) * (1/A(0) + I(t)),
    I(t)  = int_0^t lambda(s) * exp(int_0^s delta*kappa/eta) / alpha(s)^2 ds.

This closed representation (an integration by parts of the defining double
integral) is smooth up to and including t = T, unlike the raw ODE for h whose
coefficient behaves like 1/(T-t).  Its derivative has the equally smooth form

    h'(t) = alpha(t)/eta(t) * exp(-int_0^t delta*kappa/eta) * (1/A(0) + I(t)),

which coincides with -A/eta * h + 1/(eta * D) on [0, T) and with the
one-sided limit at T.

Everything is integrated on a half-step refinement of the coefficient grid
(classical fourth-order one-step method for y, cumulative Simpson for the
exponents), so the solver keeps fourth-order accuracy and the downstream
backward equation has native midpoint samples available.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import AssumptionError, InvalidInputError, NumericalFailureError
from .model import CoefficientSet, validate_assumptions


def cumulative_trapezoid(f, dx):
    """Running trapezoid integral of samples ``f`` on a uniform grid."""
    out = np.zeros_like(f, dtype=float)
    np.cumsum(0.5 * dx * (f[1:] + f[:-1]), out=out[1:])
    return out


def cumulative_simpson(f, dx):
    """Running Simpson integral along axis 0 of a uniform grid (4th order).

    Even nodes use composite Simpson pairs; odd nodes add the half-panel rule
    (5, 8, -1)/12 through the surrounding three samples; an even-length input
    closes with the mirrored stencil over the final cell.
    """
    f = np.asarray(f, dtype=float)
    n = f.shape[0]
    out = np.zeros_like(f)
    if n == 2:
        out[1] = 0.5 * dx * (f[0] + f[1])
        return out
    if n < 2:
        return out
    pairs = (dx / 3.0) * (f[0:-2:2] + 4.0 * f[1:-1:2] + f[2::2])
    out[2::2] = np.cumsum(pairs, axis=0)
    half = (dx / 12.0) * (5.0 * f[0:-2:2] + 8.0 * f[1:-1:2] - f[2::2])
    out[1:-1:2] = out[0:-1:2][: half.shape[0]] + half
    if n % 2 == 0:
        out[-1] = out[-2] + (dx / 12.0) * (-f[-3] + 8.0 * f[-2] + 5.0 * f[-1])
    return out


@dataclass(frozen=True)
class RiccatiBundle:
    """A, its inverse, and the derived deterministic quantities on the grid.

    ``A`` carries ``inf`` at the terminal node; all downstream formulas use
    the finite fields ``y``, ``alpha``, ``D``, ``Efac`` instead.
    """

    delta: float
    coeffs: CoefficientSet
    grid: np.ndarray
    y: np.ndarray
    A: np.ndarray
    alpha: np.ndarray
    D: np.ndarray
    Efac: np.ndarray
    h: np.ndarray
    h_dot: np.ndarray
    A0: float
    alpha_T: float
    h_T: float
    # half-step arrays (index 2i = grid node i, odd indices = interval midpoints)
    fine_t: np.ndarray
    fine_y: np.ndarray
    fine_alpha: np.ndarray
    fine_Efac: np.ndarray
    fine_h: np.ndarray

    @property
    def T(self) -> float:
        return float(self.grid[-1])

    @property
    def h_mid(self) -> np.ndarray:
        """h at interval midpoints (for stage evaluations of one-step methods)."""
        return self.fine_h[1::2]


def _rk4_backward_y(ie_n, dk_n, lam_n, ie_q, dk_q, lam_q, step):
    """Integrate y' = -1/eta + (delta*kappa/eta) y + lambda y^2 from y(T)=0.

    ``*_n`` arrays sample the coefficients at the fine nodes, ``*_q`` at the
    midpoints between fine nodes (the RK4 half-stage times).
    """
    n = ie_n.size
    y = np.empty(n)
    y[-1] = 0.0
    yi = 0.0
    for i in range(n - 1, 0, -1):
        j = i - 1
        k1 = -ie_n[i] + (dk_n[i] + lam_n[i] * yi) * yi
        ym = yi - 0.5 * step * k1
        k2 = -ie_q[j] + (dk_q[j] + lam_q[j] * ym) * ym
        ym = yi - 0.5 * step * k2
        k3 = -ie_q[j] + (dk_q[j] + lam_q[j] * ym) * ym
        ym = yi - step * k3
        k4 = -ie_n[j] + (dk_n[j] + lam_n[j] * ym) * ym
        yi -= (step / 6.0) * (k1 + 2.0 * (k2 + k3) + k4)
        y[j] = yi
    return y


def solve_riccati(coeffs: CoefficientSet, delta) -> RiccatiBundle:
    """Solve for A (via y = 1/A) and assemble alpha, D, Efac, h and h'."""
    report = validate_assumptions(coeffs, delta)
    if not report.ok_mfg:
        raise AssumptionError(f"assumptions fail for delta={delta}: {report.summary()}")
    if not coeffs.is_uniform():
        raise InvalidInputError("solver requires a uniform grid")

    grid = coeffs.grid
    m = coeffs.M
    step = (grid[-1] - grid[0]) / (2 * m)  # fine step = dt/2
    t_f = grid[0] + step * np.arange(2 * m + 1)
    t_q = t_f[:-1] + 0.5 * step

    eta_f = coeffs.at("eta", t_f)
    kap_f = coeffs.at("kappa", t_f)
    lam_f = coeffs.at("lam", t_f)
    ie_n = 1.0 / eta_f
    dk_n = delta * kap_f * ie_n
    ie_q = 1.0 / coeffs.at("eta", t_q)
    dk_q = delta * coeffs.at("kappa", t_q) * ie_q
    lam_q = coeffs.at("lam", t_q)

    y = _rk4_backward_y(ie_n, dk_n, lam_f, ie_q, dk_q, lam_q, step)
    if np.any(y[:-1] <= 0.0) or not np.all(np.isfinite(y)):
        raise NumericalFailureError("inverse Riccati solution lost positivity")
    A0 = 1.0 / y[0]

    # alpha solves alpha' = -lambda*y*alpha with alpha(0) = A(0)
    alpha = A0 * np.exp(-cumulative_simpson(lam_f * y, step))
    ek = cumulative_simpson(delta * kap_f * ie_n, step)
    D = alpha * y
    D[0] = 1.0
    Efac = D * np.exp(-ek)
    Efac[0] = 1.0
    I_int = cumulative_simpson(lam_f * np.exp(ek) / alpha**2, step)
    h = 1.0 / alpha - Efac * (1.0 / A0 + I_int)
    h[0] = 0.0
    h_dot = (alpha * ie_n) * np.exp(-ek) * (1.0 / A0 + I_int)

    with np.errstate(divide="ignore"):
        A = np.where(y > 0, 1.0 / np.where(y > 0, y, 1.0), np.inf)

    for arr in (t_f, y, A, alpha, D, Efac, h, h_dot):
        arr.setflags(write=False)

    return RiccatiBundle(
        delta=float(delta),
        coeffs=coeffs,
        grid=grid,
        y=y[::2],
        A=A[::2],
        alpha=alpha[::2],
        D=D[::2],
        Efac=Efac[::2],
        h=h[::2],
        h_dot=h_dot[::2],
        A0=A0,
        alpha_T=float(alpha[-1]),
        h_T=float(h[-1]),
        fine_t=t_f,
        fine_y=y,
        fine_alpha=alpha,
        fine_Efac=Efac,
        fine_h=h,
    )


def alpha_terminal(bundle: RiccatiBundle) -> float:
    """Terminal value of alpha (the reciprocal of h(T)); strictly positive."""
    return bundle.alpha_T


def discount(bundle: RiccatiBundle, s, t) -> float:
    """exp(-int_s^t A/eta), for 0 <= s <= t <= T.

    Computed as the ratio Efac(t)/Efac(s); equals 0 whenever t = T and s < T
    because the liquidation constraint makes the exponent diverge.
    """
    T = bundle.T
    if not (0.0 <= s <= t <= T):
        raise InvalidInputError("need 0 <= s <= t <= T")
    if s == t:
        return 1.0
    es = np.interp(s, bundle.fine_t, bundle.fine_Efac)
    et = np.interp(t, bundle.fine_t, bundle.fine_Efac)
    if es == 0.0:
        return 1.0 if et == 0.0 else 0.0
    return float(et / es)
