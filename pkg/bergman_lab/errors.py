"""Exception hierarchy for the Bergman kernel laboratory.

Library code raises these; only the command-line layer turns them into
exit statuses.
"""


class LabError(Exception):
    """Base class for all laboratory errors.

    Args:
        message (str): Human readable description
        diagnostics (dict, optional): Numbers that explain the failure
    """

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})

    def __str__(self):
        base = super().__str__()
        if not self.diagnostics:
            return base
        details = ", ".join(f"{key}={value}" for key, value in self.diagnostics.items())
        return f"{base} ({details})"


class ConfigError(LabError, ValueError):
    """Invalid configuration or out-of-range parameter."""


class NumericalError(LabError, ArithmeticError):
    """A numerical procedure could not produce a trustworthy result."""


class NonFiniteError(NumericalError):
    """A sample or intermediate value is NaN or infinite."""


class ConditioningError(NumericalError):
    """A matrix is too ill-conditioned to factor reliably."""


class ConvergenceError(NumericalError):
    """An iterative method did not converge."""


class GridError(NumericalError):
    """A quadrature or element grid is too small or too coarse."""


class DensityError(NumericalError):
    """The volume density dropped below its declared lower bound."""


class NotPlurisubharmonicError(NumericalError):
    """The weight is not strictly plurisubharmonic (point not in X(0))."""


class KernelGridMismatchError(NumericalError):
    """Two kernel grids do not share their nodes."""


class ExpansionFitError(NumericalError):
    """The k-regression for expansion coefficients is ill-posed."""


class PropertyCheckError(LabError):
    """An acceptance property failed while running with --check."""
