"""Exception types shared across the package.

The CLI maps these onto distinct exit codes, so solver code should raise
the most specific class that applies.
"""


class InvalidCoefficientsError(ValueError):
    """Cost coefficients violate a positivity / shape requirement."""


class InvalidDistributionError(ValueError):
    """Initial-position distribution is malformed (bad weights, empty, ...)."""


class InvalidInputError(ValueError):
    """Arguments are outside an operation's domain (reversed times, c < 0, ...)."""


class AssumptionError(InvalidInputError):
    """Model assumptions fail for the requested delta; solving would be meaningless."""


class NumericalFailureError(RuntimeError):
    """An iteration or integrator exhausted its budget without converging."""


class ConfigError(ValueError):
    """A run configuration could not be parsed or resolved."""
