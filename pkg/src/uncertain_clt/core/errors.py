"""Exception hierarchy.

Every error derives from ``ValueError`` so callers catching plain
``ValueError`` keep working.
"""


class UncertainCLTError(ValueError):
    """Base class for all domain errors."""


class DimensionMismatchError(UncertainCLTError):
    """Spec components (uncertainty, noise, payoff, grid) disagree on d."""


class MomentConditionError(UncertainCLTError):
    """Noise law violates mean zero / identity covariance beyond tolerance."""


class UnsupportedNoiseError(UncertainCLTError):
    """Noise model cannot be used by the requested operation."""


class UnsupportedUncertaintyError(UncertainCLTError):
    """Uncertainty set or dimension outside what a solver supports."""


class CflViolationError(UncertainCLTError):
    """Explicit PDE time step exceeds the stability bound."""


class PolicyMismatchError(UncertainCLTError):
    """Feedback policy incompatible with the requested simulation."""


class NonOrthogonalMatrixError(UncertainCLTError):
    """Matrix supplied to the invariance study is not orthogonal."""


class ConfigError(UncertainCLTError):
    """Invalid configuration file.

    Attributes:
        line: 1-based line of the offending entry, when known
    """

    def __init__(self, message: str, line: int | None = None) -> None:
        self.line = line
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(f"{prefix}{message}")


class CheckFailedError(UncertainCLTError):
    """A built-in experiment assertion did not hold."""


class PayoffBoundError(UncertainCLTError):
    """Payoff or value exceeds the uniform bound M on the computational domain."""


class MaximumPrincipleError(UncertainCLTError):
    """A PDE slice left the range of the terminal payoff."""
