"""Equilibrium solver for optimal-liquidation games with market drop-out.

Computes the unique equilibrium aggregate trading rate of mean-field and
N-player liquidation games in which a player leaves the market permanently
once her inventory hits zero, reconstructs the per-player strategies, and
compares against the classical model without drop-out.
"""

from .errors import (
    AssumptionError,
    ConfigError,
    InvalidCoefficientsError,
    InvalidDistributionError,
    InvalidInputError,
    NumericalFailureError,
)
from .model import (
    AssumptionReport,
    CoefficientSet,
    InitialDistribution,
    make_constant_coefficients,
    make_empirical,
    make_exponential_sellers,
    make_two_sided,
    validate_assumptions,
)
from .riccati import RiccatiBundle, alpha_terminal, discount, solve_riccati
from .equilibrium import (
    EquilibriumSolution,
    find_x_hat,
    psi,
    solve_mfg,
    solve_mu_for_c,
    solve_no_dropout_baseline,
    solve_nplayer,
    terminal_rate,
)
from .strategies import (
    CompetitorSpec,
    NashReport,
    PlayerPath,
    cost,
    default_battery,
    f_curve,
    fixed_point_residual,
    liquidation_time,
    nash_check,
    player_path,
)
from .experiments import (
    ConvergenceRow,
    ScenarioSpec,
    convergence_study,
    one_sided_scenario,
    quantile_positions,
    run_scenario,
    two_sided_scenario,
)

__version__ = "0.1.0"

__all__ = [
    "AssumptionError",
    "AssumptionReport",
    "CoefficientSet",
    "CompetitorSpec",
    "ConfigError",
    "ConvergenceRow",
    "EquilibriumSolution",
    "InitialDistribution",
    "InvalidCoefficientsError",
    "InvalidDistributionError",
    "InvalidInputError",
    "NashReport",
    "NumericalFailureError",
    "PlayerPath",
    "RiccatiBundle",
    "ScenarioSpec",
    "alpha_terminal",
    "convergence_study",
    "cost",
    "default_battery",
    "discount",
    "f_curve",
    "find_x_hat",
    "fixed_point_residual",
    "liquidation_time",
    "make_constant_coefficients",
    "make_empirical",
    "make_exponential_sellers",
    "make_two_sided",
    "nash_check",
    "one_sided_scenario",
    "player_path",
    "psi",
    "quantile_positions",
    "run_scenario",
    "solve_mfg",
    "solve_mu_for_c",
    "solve_no_dropout_baseline",
    "solve_nplayer",
    "solve_riccati",
    "terminal_rate",
    "two_sided_scenario",
    "validate_assumptions",
]
