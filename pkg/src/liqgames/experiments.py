"""Scenario presets and studies: drop-out vs baseline, N-player convergence.

The two presets mirror the comparative study setup: constant coefficients
eta = 5, kappa = 10, lambda = 5 on [0, 1] with either a one-sided exponential
seller population (mean 1.5) or a two-sided market (80% sellers of mean 1.5,
20% buyers of mean 1, aggregate mean 1).

Everything here is deterministic: finite-player initial profiles are built
from midpoint quantiles of the analytic measure, which makes the empirical
seller tail converge uniformly and keeps every study bit-reproducible.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .equilibrium import (
    EquilibriumSolution,
    solve_mfg,
    solve_no_dropout_baseline,
    solve_nplayer,
)
from .errors import InvalidInputError
from .model import (
    CoefficientSet,
    InitialDistribution,
    make_constant_coefficients,
    make_exponential_sellers,
    make_two_sided,
)
from .strategies import player_path


@dataclass(frozen=True)
class ScenarioSpec:
    name: str
    coeffs: CoefficientSet
    dist: InitialDistribution
    M: int
    x_samples: tuple


@dataclass
class ScenarioResult:
    spec: ScenarioSpec
    dropout: EquilibriumSolution
    baseline: EquilibriumSolution
    paths_dropout: dict
    paths_baseline: dict


@dataclass(frozen=True)
class ConvergenceRow:
    N: int
    sup_error: float
    x_hat_N: float
    runtime: float


def one_sided_scenario(M=2000) -> ScenarioSpec:
    """Only sellers: exponential initial positions with mean 1.5."""
    return ScenarioSpec(
        name="one_sided",
        coeffs=make_constant_coefficients(5.0, 10.0, 5.0, 1.0, M),
        dist=make_exponential_sellers(1.5),
        M=M,
        x_samples=(0.1, 0.25, 0.75, 1.5, 3.0),
    )


def two_sided_scenario(M=2000) -> ScenarioSpec:
    """Sellers dominate buyers: mean initial position 1."""
    return ScenarioSpec(
        name="two_sided",
        coeffs=make_constant_coefficients(5.0, 10.0, 5.0, 1.0, M),
        dist=make_two_sided(0.8, 1.5, 0.2, 1.0),
        M=M,
        x_samples=(-0.5, -0.05, 0.25, 0.75, 1.5, 3.0),
    )


def run_scenario(spec: ScenarioSpec) -> ScenarioResult:
    """Solve drop-out and no-drop-out equilibria plus representative paths."""
    eq = solve_mfg(spec.coeffs, spec.dist)
    base = solve_no_dropout_baseline(spec.coeffs, spec.dist)
    paths_eq = {x: player_path(x, eq) for x in spec.x_samples}
    paths_base = {x: player_path(x, base) for x in spec.x_samples}
    return ScenarioResult(
        spec=spec,
        dropout=eq,
        baseline=base,
        paths_dropout=paths_eq,
        paths_baseline=paths_base,
    )


def quantile_positions(dist: InitialDistribution, N) -> np.ndarray:
    """Deterministic midpoint-quantile atoms approximating an analytic measure.

    Sellers and buyers receive atom counts proportional to their mass; any
    remainder sits at zero.  The resulting empirical seller tail converges to
    q0 uniformly as N grows.
    """
    if dist.kind != "analytic":
        raise InvalidInputError("quantile sampling needs an analytic measure")
    if N < 1:
        raise InvalidInputError("need N >= 1")
    n_s = int(round(N * dist.w_sell))
    n_b = int(round(N * dist.w_buy))
    while n_s + n_b > N:  # rounding overflow
        n_s -= 1
    out = []
    if n_s:
        u = (np.arange(1, n_s + 1) - 0.5) / n_s
        out.append(-dist.mean_sell * np.log1p(-u))
    if n_b:
        u = (np.arange(1, n_b + 1) - 0.5) / n_b
        out.append(dist.mean_buy * np.log1p(-u))
    if n_s + n_b < N:
        out.append(np.zeros(N - n_s - n_b))
    return np.sort(np.concatenate(out))


def convergence_study(spec: ScenarioSpec, Ns) -> list:
    """Sup-norm distance of each N-player aggregate rate from the limit rate."""
    if spec.dist.mean <= 0:
        raise InvalidInputError("convergence study expects a positive mean")
    limit = solve_mfg(spec.coeffs, spec.dist)
    rows = []
    for n in Ns:
        tic = time.perf_counter()
        positions = quantile_positions(spec.dist, n)
        eq_n = solve_nplayer(spec.coeffs, positions)
        err = float(np.max(np.abs(eq_n.mu - limit.mu)))
        rows.append(ConvergenceRow(
            N=int(n),
            sup_error=err,
            x_hat_N=eq_n.x_hat,
            runtime=time.perf_counter() - tic,
        ))
    return rows


def detect_kinks(mu, t, factor=5.0):
    """Grid times where the slope of mu jumps by more than ``factor`` times
    the median jump (a diagnostic for finite-player drop-out events)."""
    d = np.diff(mu) / np.diff(t)
    jumps = np.abs(np.diff(d))
    med = np.median(jumps)
    if med == 0.0:
        med = np.max(jumps) * 1e-12 + 1e-300
    idx = np.flatnonzero(jumps > factor * med)
    return t[idx + 1]
