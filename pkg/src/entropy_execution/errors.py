"""Exception types shared across the package."""


class ExecutionModelError(Exception):
    """Base class for all errors raised by this package."""


class PrecisionViolation(ExecutionModelError, ValueError):
    """A Gaussian precision (or s + beta * R_aa) is not strictly positive."""


class EtaTildeViolation(ExecutionModelError, ValueError):
    """The effective temporary impact of Model 2 is not strictly positive."""


class ClosedFormUnavailable(ExecutionModelError):
    """Raised when a closed-form object is requested outside its regime.

    Deriving coefficients never raises this; the affected fields are set to
    ``None`` instead so callers can fall back to the Riccati solver.
    """


class OutOfHorizon(ExecutionModelError, ValueError):
    """A time argument lies outside ``[0, T]``."""


class H0Unavailable(ExecutionModelError):
    """The constant term of the value function was not computed."""


class BlowUp(ExecutionModelError, ArithmeticError):
    """The Riccati solution exploded before reaching ``t = 0``."""


class SupportTooNarrow(ExecutionModelError, ValueError):
    """A quadrature grid does not cover the relevant probability mass."""


class DegenerateNormalizer(ExecutionModelError, ArithmeticError):
    """Every unnormalized Gibbs weight underflowed to zero."""


class ConfigMismatch(ExecutionModelError, ValueError):
    """A strategy was built for a different model than the simulation."""


class NonfiniteState(ExecutionModelError, ArithmeticError):
    """A simulated state became NaN or infinite."""

    def __init__(self, message, path_index=None, step=None):
        super().__init__(message)
        self.path_index = path_index
        self.step = step


class IncrementsMissing(ExecutionModelError, ValueError):
    """A path was stored without its Brownian increments."""


class BoundaryHit(ExecutionModelError):
    """A grid search optimum stayed on the boundary after widening."""


class NonConcave(ExecutionModelError, ValueError):
    """The Model 2 Hamiltonian is not concave in the trading rate."""


class ConfigError(ExecutionModelError, ValueError):
    """Invalid experiment configuration; ``field`` holds the offending path."""

    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field
