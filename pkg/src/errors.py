"""Error hierarchy for the thin-film profile toolkit."""

from typing import Any


class ToolkitError(Exception):
    """Base class for every error raised by the toolkit."""


# Integrator failures ----------------------------------------------------------


class IntegrationError(ToolkitError, RuntimeError):
    """An integration stopped before reaching its end point.

    The partial trajectory up to the last accepted step is kept on the
    exception so callers can still classify what happened.
    """

    def __init__(self, message: str, t: float, trajectory: Any = None):
        super().__init__(message)
        self.t = t
        self.trajectory = trajectory


class StepUnderflow(IntegrationError):
    """Required step fell below h_min (singularity or blow-up reached)."""


class BudgetExceeded(IntegrationError):
    """The max_steps budget was used up."""


class NonFinite(IntegrationError):
    """The right-hand side produced NaN or Inf."""


class RootRefinementFailed(IntegrationError):
    """An event bracket collapsed onto a jump instead of a zero."""


class OutOfSpan(ToolkitError, ValueError):
    """Dense evaluation requested outside the trajectory span."""


# Shooting and bisection -------------------------------------------------------


class BracketInvalid(ToolkitError, ValueError):
    """Both ends of a bisection bracket classify the same way."""


class ToleranceStall(ToolkitError, RuntimeError):
    """A bisection bracket cannot shrink because a midpoint is indeterminate."""

    def __init__(self, message: str, value: float):
        super().__init__(message)
        self.value = value


class PersistentIndeterminate(ToolkitError, RuntimeError):
    """Attractor classification stayed indeterminate after every retry."""

    def __init__(self, message: str, n: float):
        super().__init__(message)
        self.n = n


# Local expansions -------------------------------------------------------------


class OutOfRange(ToolkitError, ValueError):
    """Exponent n outside the range where the interface expansion exists."""


class NoEquilibrium(OutOfRange):
    """The oscillatory-component ODE has no nonzero constant solution."""


class RootBracketFailed(ToolkitError, RuntimeError):
    """The characteristic cubic did not change sign on its bracket."""


class NonPositiveZ(ToolkitError, ValueError):
    """Interface-local series evaluated at z <= 0."""


class FitFailed(ToolkitError, RuntimeError):
    """A log-log or log-log-log fit could not be formed."""


class SeedUnderflow(ToolkitError, ValueError):
    """Backward-shooting seed is too close to the regularisation floor."""


class OrbitMissing(ToolkitError, ValueError):
    """No usable periodic orbit for oscillatory seeding."""


class WindowTooClose(ToolkitError, ValueError):
    """Fit window has too little dynamic range in ln|ln z|."""


# Configuration ----------------------------------------------------------------


class ConfigInvalid(ToolkitError, ValueError):
    """A configuration file failed validation; the message is a single line."""
