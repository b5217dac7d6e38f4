"""Cost coefficients, initial-position distributions and standing assumptions.

Coefficients live on a shared time grid and are interpreted piecewise
linearly between nodes; the analytic presets additionally carry exact
derivative samples so downstream solvers never have to difference them.

Distributions are described through their tail functions

    q0(x) = nu0([x, inf))   for x >= 0   (seller-side tail)
    p0(x) = nu0((-inf, x])  for x <= 0   (buyer-side tail)

together with the integrated tail Q0(x) = int_0^x q0(y) dy and the mean.
Both tails use closed intervals, so an atom at exactly zero is counted by
both q0(0) and p0(0).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    InvalidCoefficientsError,
    InvalidDistributionError,
    InvalidInputError,
)

#: quadrature truncation point: exponential tails are cut once q0 < TAIL_EPS
TAIL_EPS = 1e-12


def _readonly(a):
    arr = np.asarray(a, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class CoefficientSet:
    """Time-dependent cost coefficients on a common grid.

    ``lam`` is the urgency penalty (written ``lambda`` in config files, which
    is a reserved word in Python). ``eta_dot`` / ``kappa_dot`` are derivative
    samples; for the constant presets they are identically zero.
    """

    T: float
    grid: np.ndarray
    eta: np.ndarray
    kappa: np.ndarray
    lam: np.ndarray
    eta_dot: np.ndarray
    kappa_dot: np.ndarray

    def __post_init__(self):
        grid = _readonly(self.grid)
        if grid.ndim != 1 or grid.size < 3:
            raise InvalidCoefficientsError("grid needs at least 3 nodes (M >= 2)")
        if grid[0] != 0.0 or not np.isclose(grid[-1], self.T):
            raise InvalidCoefficientsError("grid must span [0, T]")
        if np.any(np.diff(grid) <= 0):
            raise InvalidCoefficientsError("grid must be strictly increasing")
        object.__setattr__(self, "grid", grid)
        for name in ("eta", "kappa", "lam", "eta_dot", "kappa_dot"):
            arr = _readonly(getattr(self, name))
            if arr.shape != grid.shape:
                raise InvalidCoefficientsError(f"{name} must match the grid shape")
            object.__setattr__(self, name, arr)
        if self.T <= 0:
            raise InvalidCoefficientsError("horizon T must be positive")
        if np.any(self.eta <= 0):
            raise InvalidCoefficientsError("eta must be strictly positive")
        if np.any(self.kappa < 0) or np.any(self.lam < 0):
            raise InvalidCoefficientsError("kappa and lambda must be non-negative")

    @property
    def M(self) -> int:
        """Number of grid intervals."""
        return self.grid.size - 1

    def is_uniform(self, rtol=1e-12) -> bool:
        d = np.diff(self.grid)
        return bool(np.all(np.abs(d - d[0]) <= rtol * d[0]))

    def at(self, name: str, t) -> np.ndarray:
        """Sample a coefficient at arbitrary times by linear interpolation."""
        return np.interp(t, self.grid, getattr(self, name))

    # sup norms used by the a priori rate bounds
    def sup(self, name: str) -> float:
        return float(np.max(np.abs(getattr(self, name))))

    def sup_inv_eta(self) -> float:
        return float(np.max(1.0 / self.eta))


@dataclass(frozen=True)
class InitialDistribution:
    """Initial-position measure, either analytic (exponential mixture) or empirical.

    The analytic family is ``w_sell * Exp(mean_sell)`` on the positive axis,
    ``w_buy * Exp(mean_buy)`` mirrored onto the negative axis, plus an atom at
    zero carrying any leftover mass.
    """

    kind: str  # "analytic" | "empirical"
    w_sell: float = 0.0
    mean_sell: float = 1.0
    w_buy: float = 0.0
    mean_buy: float = 1.0
    atom0: float = 0.0
    positions: np.ndarray | None = None
    _sorted: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.kind == "empirical":
            pos = _readonly(self.positions)
            if pos.ndim != 1 or pos.size == 0:
                raise InvalidDistributionError("need at least one position")
            if not np.all(np.isfinite(pos)):
                raise InvalidDistributionError("positions must be finite")
            object.__setattr__(self, "positions", pos)
            object.__setattr__(self, "_sorted", _readonly(np.sort(pos)))
        elif self.kind == "analytic":
            if self.w_sell < 0 or self.w_buy < 0 or self.atom0 < 0:
                raise InvalidDistributionError("weights must be non-negative")
            if abs(self.w_sell + self.w_buy + self.atom0 - 1.0) > 1e-9:
                raise InvalidDistributionError("weights must sum to one")
            if (self.w_sell > 0 and self.mean_sell <= 0) or (
                self.w_buy > 0 and self.mean_buy <= 0
            ):
                raise InvalidDistributionError("side means must be positive")
            object.__setattr__(self, "_sorted", _readonly(np.empty(0)))
        else:
            raise InvalidDistributionError(f"unknown distribution kind {self.kind!r}")

    # -- tail functions ----------------------------------------------------

    def q0(self, x):
        """Seller tail nu0([x, inf)); defined for every real x."""
        x = np.asarray(x, dtype=float)
        if self.kind == "empirical":
            n = self._sorted.size
            out = (n - np.searchsorted(self._sorted, x, side="left")) / n
        else:
            out = np.where(
                x > 0,
                self.w_sell * np.exp(-x / self.mean_sell),
                1.0 - self.w_buy * np.exp(np.minimum(x, 0.0) / self.mean_buy),
            )
            out = np.where(x == 0, self.w_sell + self.atom0, out)
        return out if out.ndim else float(out)

    def p0(self, x):
        """Buyer tail nu0((-inf, x]); defined for every real x."""
        x = np.asarray(x, dtype=float)
        if self.kind == "empirical":
            out = np.searchsorted(self._sorted, x, side="right") / self._sorted.size
        else:
            out = np.where(
                x < 0,
                self.w_buy * np.exp(x / self.mean_buy),
                1.0 - self.w_sell * np.exp(-np.maximum(x, 0.0) / self.mean_sell),
            )
            out = np.where(x == 0, self.w_buy + self.atom0, out)
        return out if out.ndim else float(out)

    def Q0(self, x):
        """Integrated seller tail int_0^x q0(y) dy for x >= 0 (1-Lipschitz)."""
        x = np.asarray(x, dtype=float)
        if self.kind == "empirical":
            pos = np.maximum(self.positions, 0.0)
            out = np.minimum(pos, x[..., None]).mean(axis=-1)
        else:
            out = self.w_sell * self.mean_sell * (1.0 - np.exp(-x / self.mean_sell))
        return out if out.ndim else float(out)

    # -- summary quantities --------------------------------------------------

    @property
    def mean(self) -> float:
        if self.kind == "empirical":
            return float(np.mean(self.positions))
        return self.w_sell * self.mean_sell - self.w_buy * self.mean_buy

    @property
    def supp_upper(self) -> float:
        """Supremum of the support (``inf`` for an exponential seller tail)."""
        if self.kind == "empirical":
            return float(np.max(self.positions))
        return math.inf if self.w_sell > 0 else 0.0

    def seller_truncation(self) -> float:
        """Point beyond which the seller tail carries mass below TAIL_EPS."""
        if self.kind == "empirical":
            return self.supp_upper
        if self.w_sell == 0:
            return 0.0
        return -self.mean_sell * math.log(TAIL_EPS / self.w_sell)

    def buyer_truncation(self) -> float:
        if self.kind == "empirical":
            return float(np.min(self.positions))
        if self.w_buy == 0:
            return 0.0
        return self.mean_buy * math.log(TAIL_EPS / self.w_buy)

    def reflected(self) -> "InitialDistribution":
        """Mirror the measure through the origin (buyers <-> sellers)."""
        if self.kind == "empirical":
            return InitialDistribution(kind="empirical", positions=-self.positions)
        return InitialDistribution(
            kind="analytic",
            w_sell=self.w_buy,
            mean_sell=self.mean_buy,
            w_buy=self.w_sell,
            mean_buy=self.mean_sell,
            atom0=self.atom0,
        )

    def q0_scalar(self):
        """Fast scalar q0 callable for tight integrator loops."""
        if self.kind == "empirical":
            import bisect

            srt = self._sorted.tolist()
            n = len(srt)

            def q0(z, _bl=bisect.bisect_left, _s=srt, _n=n):
                return (_n - _bl(_s, z)) / _n

            return q0

        ws, ms = self.w_sell, self.mean_sell
        wb, mb = self.w_buy, self.mean_buy
        w0 = ws + self.atom0

        def q0(z, _exp=math.exp):
            if z > 0.0:
                return ws * _exp(-z / ms)
            if z == 0.0:
                return w0
            return 1.0 - wb * _exp(z / mb)

        return q0


@dataclass(frozen=True)
class AssumptionReport:
    """Pointwise grid checks of the standing model assumptions.

    ``cost_positivity``  : eta > 0, kappa >= 0, lambda >= 0
    ``sign_preservation``: lambda + delta * kappa_dot >= 0 (keeps the solved
                           aggregate rate from changing sign)
    ``nplayer_convexity``: eta - delta*kappa > 0 and lambda - delta*kappa >= 0
                           (convexity of the finite-player objectives)
    """

    delta: float
    cost_positivity: bool
    sign_preservation: bool
    nplayer_convexity: bool
    bad_indices: dict

    @property
    def ok_mfg(self) -> bool:
        return self.cost_positivity and self.sign_preservation

    @property
    def ok_nplayer(self) -> bool:
        return self.ok_mfg and self.nplayer_convexity

    def summary(self) -> str:
        parts = [
            f"cost_positivity={'pass' if self.cost_positivity else 'FAIL'}",
            f"sign_preservation={'pass' if self.sign_preservation else 'FAIL'}",
            f"nplayer_convexity={'pass' if self.nplayer_convexity else 'FAIL'}",
        ]
        return f"delta={self.delta:g}: " + ", ".join(parts)


# -- constructors --------------------------------------------------------- #


def make_constant_coefficients(eta, kappa, lam, T, M=2000) -> CoefficientSet:
    """Constant coefficients on a uniform grid with M intervals."""
    if eta <= 0 or T <= 0:
        raise InvalidCoefficientsError("eta and T must be positive")
    if kappa < 0 or lam < 0:
        raise InvalidCoefficientsError("kappa and lambda must be non-negative")
    if M < 2:
        raise InvalidCoefficientsError("M must be at least 2")
    grid = np.linspace(0.0, float(T), int(M) + 1)
    ones = np.ones_like(grid)
    zeros = np.zeros_like(grid)
    return CoefficientSet(
        T=float(T),
        grid=grid,
        eta=eta * ones,
        kappa=kappa * ones,
        lam=lam * ones,
        eta_dot=zeros,
        kappa_dot=zeros,
    )


def make_exponential_sellers(mean_pos) -> InitialDistribution:
    """One-sided market: q0(x) = exp(-x / mean_pos), p0 identically zero."""
    if mean_pos <= 0:
        raise InvalidDistributionError("mean position must be positive")
    return InitialDistribution(kind="analytic", w_sell=1.0, mean_sell=float(mean_pos))


def make_two_sided(w_sell, mean_sell, w_buy, mean_buy) -> InitialDistribution:
    """Exponential sellers plus mirrored exponential buyers.

    Leftover mass 1 - w_sell - w_buy (if any) sits as an atom at zero and is
    counted by both tails.
    """
    if w_sell < 0 or w_buy < 0:
        raise InvalidDistributionError("weights must be non-negative")
    if w_sell + w_buy > 1.0 + 1e-9:
        raise InvalidDistributionError("weights must sum to at most one")
    atom = max(0.0, 1.0 - w_sell - w_buy)
    return InitialDistribution(
        kind="analytic",
        w_sell=float(w_sell),
        mean_sell=float(mean_sell),
        w_buy=float(w_buy),
        mean_buy=float(mean_buy),
        atom0=atom,
    )


def make_empirical(positions) -> InitialDistribution:
    """Uniform atoms at the given positions (the N-player initial profile)."""
    positions = np.asarray(positions, dtype=float)
    if positions.size == 0:
        raise InvalidDistributionError("need at least one position")
    return InitialDistribution(kind="empirical", positions=positions)


def validate_assumptions(coeffs: CoefficientSet, delta) -> AssumptionReport:
    """Check the standing assumptions pointwise on the grid for a given delta."""
    if not 0.0 <= delta <= 1.0:
        raise InvalidInputError("delta must lie in [0, 1]")
    bad = {}

    ok_cost = True
    idx = np.flatnonzero(
        (coeffs.eta <= 0) | (coeffs.kappa < 0) | (coeffs.lam < 0)
    )
    if idx.size:
        ok_cost = False
        bad["cost_positivity"] = idx.tolist()

    sign_vals = coeffs.lam + delta * coeffs.kappa_dot
    idx = np.flatnonzero(sign_vals < 0)
    ok_sign = idx.size == 0
    if not ok_sign:
        bad["sign_preservation"] = idx.tolist()

    conv1 = coeffs.eta - delta * coeffs.kappa
    conv2 = coeffs.lam - delta * coeffs.kappa
    idx = np.flatnonzero((conv1 <= 0) | (conv2 < 0))
    ok_conv = idx.size == 0
    if not ok_conv:
        bad["nplayer_convexity"] = idx.tolist()

    return AssumptionReport(
        delta=float(delta),
        cost_positivity=ok_cost,
        sign_preservation=ok_sign,
        nplayer_convexity=ok_conv,
        bad_indices=bad,
    )
