"""Exception hierarchy shared by the numerical modules and the CLI."""


class CurveModuliError(Exception):
    """Base class for all errors raised by this package."""

    exit_code = 3


class ConfigError(CurveModuliError, ValueError):
    """Invalid run configuration or invalid construction parameters."""

    exit_code = 2


class DomainError(CurveModuliError, ValueError):
    """A point, grid or composition leaves the domain it must stay in."""


class NumericalError(CurveModuliError, ArithmeticError):
    """A numerical procedure failed (vanishing contour, bad quadrature, ...)."""


class ConvergenceError(NumericalError):
    """An iterative solver did not converge.

    ``history`` carries whatever per-iteration diagnostics the solver
    recorded before giving up.
    """

    def __init__(self, message, history=None):
        super().__init__(message)
        self.history = list(history or [])


class FormatError(CurveModuliError, ValueError):
    """Malformed series / polynomial file."""

    exit_code = 4
