"""Boundary exponents outside (3/2, 3).

n = 3: near the interface ``f^2 f_zzz = -A`` with ``A = alpha y0`` and
``z = y0 - y``. Its leading balance is ``(f/z)^3 = b^3 - 3 A |ln z|``: a linear
law whose slope ``f/z`` drifts down logarithmically. The log-perturbed linear
form ``C z |ln z|^p`` is fitted as well; on this balance its ``p`` is negative.
n = 4: no shot reaches ``f = 0``; checked numerically over a range of ``mu``.
"""

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..errors import FitFailed, WindowTooClose
from ..solver import IntegratorConfig, Trajectory
from .profile import Outcome, ProfileProblem, shoot

logger = logging.getLogger(__name__)

DEFAULT_WINDOW = (1e-3, 1e-1)
DEFAULT_CUBE_WINDOW = (1e-5, 1e-3)
DEFAULT_N4_MUS = (-2.0, -10.0, -100.0, -1000.0)

_MIN_LOGLOG_RANGE = 0.05


@dataclass(frozen=True)
class LogFit:
    """``f ~ C z |ln z|^p`` fitted over ``window`` (absolute ``z`` values)."""

    C: float
    p: float
    window: tuple[float, float]
    rms: float


def fit_log_linear(z: np.ndarray, f: np.ndarray) -> tuple[float, float, float]:
    """Least-squares fit of ``ln(f/z)`` against ``ln|ln z|``.

    Returns:
        ``(C, p, rms)`` with ``C`` the exponentiated intercept.

    Raises:
        WindowTooClose: ``ln|ln z|`` spans too little.
        FitFailed: Non-positive data or ``z`` not in (0, 1).
    """
    z = np.asarray(z, dtype=float)
    f = np.asarray(f, dtype=float)
    if z.size < 3 or np.any(z <= 0) or np.any(z >= 1):
        raise FitFailed("log fit needs at least three points with 0 < z < 1")
    if np.any(f <= 0):
        raise FitFailed("log fit needs a positive profile")
    x = np.log(np.abs(np.log(z)))
    if np.ptp(x) < _MIN_LOGLOG_RANGE:
        raise WindowTooClose(f"ln|ln z| spans only {np.ptp(x):.3g}")
    target = np.log(f / z)
    p, intercept = np.polyfit(x, target, 1)
    rms = float(np.sqrt(np.mean((target - (p * x + intercept)) ** 2)))
    return float(np.exp(intercept)), float(p), rms


def _window_samples(y0: float, window: tuple[float, float], samples: int) -> np.ndarray:
    lo, hi = window
    if not 0 < lo < hi < 0.2:
        raise ValueError(f"window must satisfy 0 < lo < hi < 0.2, got {window}")
    return np.logspace(np.log10(lo * y0), np.log10(hi * y0), samples)


def logfit_n3(
    traj: Trajectory,
    y0: float,
    window: tuple[float, float] = DEFAULT_WINDOW,
    samples: int = 60,
) -> LogFit:
    """Fit the log-perturbed linear law to a critical n = 3 shot.

    Args:
        traj: Forward trajectory of the critical shot.
        y0: Interface estimate.
        window: Fit range of ``z = y0 - y`` in units of ``y0``.
        samples: Log-spaced sample count.

    Raises:
        WindowTooClose: The window has too little dynamic range.
    """
    z = _window_samples(y0, window, samples)
    f = traj.sample(y0 - z)[:, 0]
    C, p, rms = fit_log_linear(z, f)
    logger.info(f"n=3 log fit on z in [{z[0]:.2e}, {z[-1]:.2e}]: C={C:.5f} p={p:.5f} rms={rms:.2e}")
    return LogFit(C=C, p=p, window=(float(z[0]), float(z[-1])), rms=rms)


@dataclass(frozen=True)
class CubeLogFit:
    """``(f/z)^3 = b^3 - 3 A |ln z|`` fitted over ``window`` (absolute ``z`` values)."""

    b: float
    A: float
    window: tuple[float, float]
    rms: float

    def relative_error(self, expected_A: float) -> float:
        return abs(self.A / expected_A - 1.0)


def fit_cube_log(z: np.ndarray, f: np.ndarray) -> tuple[float, float, float]:
    """Least-squares fit of ``(f/z)^3`` against ``|ln z|``.

    Returns:
        ``(b, A, rms)``: the cube root of the intercept, minus a third of the
        slope, and the residual of the fit.

    Raises:
        FitFailed: Non-positive data or ``z`` not in (0, 1).
    """
    z = np.asarray(z, dtype=float)
    f = np.asarray(f, dtype=float)
    if z.size < 3 or np.any(z <= 0) or np.any(z >= 1):
        raise FitFailed("log fit needs at least three points with 0 < z < 1")
    if np.any(f <= 0):
        raise FitFailed("log fit needs a positive profile")
    x = np.abs(np.log(z))
    target = (f / z) ** 3
    slope, intercept = np.polyfit(x, target, 1)
    rms = float(np.sqrt(np.mean((target - (slope * x + intercept)) ** 2)))
    return float(np.cbrt(intercept)), float(-slope / 3.0), rms


def cube_logfit_n3(
    traj: Trajectory,
    y0: float,
    window: tuple[float, float] = DEFAULT_CUBE_WINDOW,
    samples: int = 60,
) -> CubeLogFit:
    """Fit the leading n = 3 balance to a critical shot; ``A`` should approach ``alpha y0``."""
    z = _window_samples(y0, window, samples)
    b, A, rms = fit_cube_log(z, traj.sample(y0 - z)[:, 0])
    logger.info(f"n=3 cube fit on z in [{z[0]:.2e}, {z[-1]:.2e}]: b={b:.5f} A={A:.5f} rms={rms:.2e}")
    return CubeLogFit(b=b, A=A, window=(float(z[0]), float(z[-1])), rms=rms)

@dataclass(frozen=True)
class N4Row:
    """One shot of the n = 4 scan."""

    mu: float
    min_f: float
    terminal_reason: str
    outcome: Outcome


def nonexistence_scan_n4(
    mu_list: Sequence[float] = DEFAULT_N4_MUS,
    cfg: IntegratorConfig | None = None,
    problem: ProfileProblem | None = None,
) -> list[N4Row]:
    """Shoot at n = 4 for each ``mu`` and record the minimum of ``f``.

    A shot that reaches ``f <= 0`` is logged as a finding, not raised.
    """
    problem = problem or ProfileProblem(n=4.0)
    if problem.n != 4.0:
        raise ValueError(f"nonexistence scan runs at n=4, got n={problem.n}")
    rows = []
    for mu in mu_list:
        if not mu < 0:
            raise ValueError(f"mu must be negative, got {mu}")
        result = shoot(problem, float(mu), cfg)
        row = N4Row(mu=float(mu), min_f=result.min_f, terminal_reason=result.terminal_reason,
                    outcome=result.outcome)
        if row.min_f <= 0:
            logger.warning(f"n=4, mu={mu}: profile reached f={row.min_f:.3e}")
        rows.append(row)
    return rows


def majorant_slope_cubed(f: float) -> float:
    """``(f')^3 = -3 / (2 f)`` on the majorising ODE ``f' f'' = 1 / (2 f^2)``.

    Negative for every ``f > 0``, so the majorant has no increasing positive
    solution leaving a zero.
    """
    if not f > 0:
        raise ValueError(f"f must be positive, got {f}")
    return -1.5 / f
