"""Exceptions and warnings raised by the toolkit.

The CLI maps ValidationError to exit code 2, NumericalError to 3 and OSError to 4.
"""


class VortexSimError(Exception):
    """Base class for every toolkit error."""


class ValidationError(VortexSimError, ValueError):
    """An argument or data object violates its invariants."""


class ConfigurationError(ValidationError):
    """A grid or scenario is set up in a way the operation cannot honour."""


class NumericalError(VortexSimError, ArithmeticError):
    """A numerical procedure failed to produce a trustworthy result."""


class QuadratureError(NumericalError):
    """Adaptive quadrature hit its refinement cap before converging."""

    def __init__(self, message: str, estimate: float = float("nan"), error: float = float("nan")):
        super().__init__(f"{message} (estimate={estimate:.6g}, error={error:.3g})")
        self.estimate = estimate
        self.error = error


class BesselRangeError(NumericalError, OverflowError):
    """Unscaled I0 requested where it would overflow."""


class IndeterminatePhaseError(NumericalError):
    """The field amplitude is too small on the loop to define a phase."""


class WindingSamplingError(NumericalError):
    """The accumulated phase circulation is not close to an integer."""


class NoCrossingError(NumericalError):
    """A monotone search never reached its target inside the bracket."""


class BracketError(NumericalError):
    """A minimizer landed on the edge of its search bracket."""


class WrapAroundWarning(RuntimeWarning):
    """The diffused beam is wide enough for periodic images to matter."""
