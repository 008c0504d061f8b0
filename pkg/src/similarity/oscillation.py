"""Oscillatory component of the profile near the interface.

Near the interface the profile behaves like ``z^m phi(ln z)`` with ``m = 3/n``.
The factor ``phi`` obeys an autonomous third-order ODE whose long-time
behaviour (a sign-changing periodic orbit, or none) decides whether profiles
oscillate. The exponent where the orbit disappears is located by bisection.
"""

import logging
from dataclasses import dataclass, replace
from enum import Enum

import numpy as np

from ..errors import (
    BracketInvalid,
    IntegrationError,
    NoEquilibrium,
    OrbitMissing,
    PersistentIndeterminate,
)
from ..solver import (
    Direction,
    EventSpec,
    IntegratorConfig,
    TerminationStatus,
    Trajectory,
    integrate,
    integrate_with_events,
)

logger = logging.getLogger(__name__)

MAXIMUM = "maximum"
ESCAPE = "escape"

_MIN_MAXIMA = 8
_DRIFT_TOL = 0.01
_EQUILIBRIUM_TOL = 1e-6
_TAIL_SAMPLES = 2000
_RETRY_TIGHTEN = 10.0


class AttractorKind(Enum):
    """Long-time behaviour of the oscillatory component."""

    PERIODIC = "periodic"
    EQUILIBRIUM = "equilibrium"
    ESCAPE = "escape"
    INDETERMINATE = "indeterminate"


@dataclass(frozen=True)
class OscProblem:
    """Parameters of an oscillatory-component run.

    Attributes:
        n: Mobility exponent in (0, 3).
        eps: Regularisation of ``|phi|^-n``. The step needed to cross ``phi = 0``
            scales with ``eps``; at 1e-11 it falls below the step floor.
        s_transient: Burn-in length discarded before classification.
        s_observe: Observation length.
        seed_step: Offset from the equilibrium along its unstable direction.
        escape_factor: ``|phi|`` beyond this multiple of ``max(1, B0)`` is an escape.
    """

    n: float
    eps: float = 1e-8
    s_transient: float = 200.0
    s_observe: float = 400.0
    seed_step: float = 1e-3
    escape_factor: float = 100.0

    def __post_init__(self) -> None:
        if not 0 < self.n < 3:
            raise ValueError(f"n must lie in (0, 3), got {self.n}")
        if not self.eps > 0:
            raise ValueError(f"eps must be positive, got {self.eps}")
        if self.s_transient < 0:
            raise ValueError(f"s_transient must be non-negative, got {self.s_transient}")
        if not self.s_observe > 0:
            raise ValueError(f"s_observe must be positive, got {self.s_observe}")
        if not self.seed_step > 0:
            raise ValueError(f"seed_step must be positive, got {self.seed_step}")
        if not self.escape_factor > 1:
            raise ValueError(f"escape_factor must exceed 1, got {self.escape_factor}")

    @property
    def m(self) -> float:
        return 3.0 / self.n

    @property
    def coefficients(self) -> tuple[float, float, float]:
        """Coefficients ``(c2, c1, c0)`` of ``phi''``, ``phi'`` and ``phi``."""
        m = self.m
        return 3.0 * (m - 1.0), 3.0 * m * m - 6.0 * m + 2.0, m * (m - 1.0) * (m - 2.0)

    @property
    def s_total(self) -> float:
        return self.s_transient + self.s_observe

    @property
    def escape_bound(self) -> float:
        scale = 1.0
        if 1.5 < self.n < 3.0:
            scale = max(scale, equilibrium_value(self.n))
        return self.escape_factor * scale

    def with_n(self, n: float) -> "OscProblem":
        return replace(self, n=n)


@dataclass(frozen=True)
class PeriodicOrbit:
    """One period of the attracting orbit, starting at a maximum of ``phi``."""

    n: float
    period: float
    traj: Trajectory

    def state(self, s: float) -> np.ndarray:
        """``(phi, phi', phi'')`` at phase ``s``, periodically extended."""
        return self.traj(float(np.mod(s, self.period)))

    @property
    def amplitude(self) -> float:
        phi = self.traj.sample(np.linspace(0.0, self.period, 512))[:, 0]
        return float(np.max(phi) - np.min(phi))


@dataclass(frozen=True)
class AttractorReport:
    """Classification of a long oscillatory-component run."""

    n: float
    kind: AttractorKind
    period: float | None = None
    amplitude: float | None = None
    sign_changing: bool = False
    equilibrium_value: float | None = None
    residual: float = float("nan")
    orbit: PeriodicOrbit | None = None
    failure: str | None = None


def osc_rhs(problem: OscProblem, state: np.ndarray) -> np.ndarray:
    """Autonomous vector field of the oscillatory component."""
    phi, phi1, phi2 = state
    c2, c1, c0 = problem.coefficients
    eps = problem.eps
    nonlinear = phi * (eps * eps + phi * phi) ** (-0.5 * problem.n)
    return np.array([phi1, phi2, -(c2 * phi2 + c1 * phi1 + c0 * phi + nonlinear)])


def equilibrium_value(n: float) -> float:
    """Positive constant solution ``(-1 / (m(m-1)(m-2)))^(1/n)``.

    Raises:
        NoEquilibrium: ``n`` outside (3/2, 3).
    """
    if not 1.5 < n < 3.0:
        raise NoEquilibrium(f"no nonzero equilibrium for n={n}; need 3/2 < n < 3")
    m = 3.0 / n
    return (-1.0 / (m * (m - 1.0) * (m - 2.0))) ** (1.0 / n)


def equilibrium_spectrum(n: float) -> np.ndarray:
    """Eigenvalues of the linearisation at ``+-B0``, largest real part first.

    The characteristic polynomial is ``lam^3 + c2 lam^2 + c1 lam + n c0``.
    """
    equilibrium_value(n)
    c2, c1, c0 = OscProblem(n=n).coefficients
    roots = np.roots([1.0, c2, c1, n * c0])
    return roots[np.argsort(-roots.real)]


def default_initial_state(problem: OscProblem) -> np.ndarray:
    """Start on the inner branch of the unstable manifold of ``+B0``.

    Outside (3/2, 3) there is no equilibrium and ``(1, 0, 0)`` is used.
    """
    if not 1.5 < problem.n < 3.0:
        return np.array([1.0, 0.0, 0.0])
    b0 = equilibrium_value(problem.n)
    lam = float(equilibrium_spectrum(problem.n)[0].real)
    direction = np.array([1.0, lam, lam * lam])
    direction /= np.linalg.norm(direction)
    return np.array([b0, 0.0, 0.0]) - problem.seed_step * b0 * direction


def _osc_events(problem: OscProblem) -> list[EventSpec]:
    bound = problem.escape_bound
    return [
        EventSpec(MAXIMUM, lambda s, x: x[1], Direction.FALLING),
        EventSpec(ESCAPE, lambda s, x: abs(x[0]) - bound, Direction.RISING, terminal=True),
    ]


def run_osc(
    problem: OscProblem,
    init: np.ndarray | None = None,
    cfg: IntegratorConfig | None = None,
) -> Trajectory:
    """Integrate over ``[0, s_transient + s_observe]`` recording maxima.

    Stops early if ``|phi|`` passes the escape bound.
    """
    if init is None:
        init = default_initial_state(problem)
    cfg = cfg or IntegratorConfig(rtol=1e-10, atol=1e-10)

    def rhs(s: float, state: np.ndarray) -> np.ndarray:
        return osc_rhs(problem, state)

    traj, _ = integrate_with_events(rhs, 0.0, init, problem.s_total, _osc_events(problem), cfg)
    return traj


def _drift(values: np.ndarray) -> float:
    scale = float(np.max(np.abs(values)))
    if scale == 0.0:
        return float("inf")
    return float((np.max(values) - np.min(values)) / scale)


def extract_orbit(
    problem: OscProblem,
    traj: Trajectory,
    cfg: IntegratorConfig | None = None,
) -> PeriodicOrbit:
    """Tabulate one period starting at the last complete maximum-to-maximum cycle.

    Raises:
        OrbitMissing: Fewer than two maxima in the observation window.
    """
    maxima = [e for e in traj.events_named(MAXIMUM) if e.t >= problem.s_transient]
    if len(maxima) < 2:
        raise OrbitMissing(f"no periodic orbit to extract for n={problem.n}")
    start, stop = maxima[-2], maxima[-1]
    period = stop.t - start.t
    cfg = cfg or IntegratorConfig(rtol=1e-10, atol=1e-10)

    def rhs(s: float, state: np.ndarray) -> np.ndarray:
        return osc_rhs(problem, state)

    one_period = integrate(rhs, 0.0, start.state, period, cfg)
    return PeriodicOrbit(n=problem.n, period=period, traj=one_period)


def classify_attractor(
    problem: OscProblem,
    cfg: IntegratorConfig | None = None,
    init: np.ndarray | None = None,
) -> AttractorReport:
    """Run the oscillatory component and classify where it settles.

    Periodic needs at least eight large maxima whose spacing and height each
    drift by under 1% and a sign-changing tail. Equilibrium needs the final
    quarter to sit within 1e-6 of a constant. Escape means ``|phi|`` left the
    bounded region, or the integrator broke down on the way (recorded in
    ``failure``). Anything else is indeterminate.
    """
    try:
        traj = run_osc(problem, init, cfg)
    except IntegrationError as e:
        logger.warning(f"n={problem.n}: run broke down at s={e.t:.6g}: {e}")
        return AttractorReport(
            n=problem.n, kind=AttractorKind.ESCAPE, residual=e.t, failure=type(e).__name__
        )
    if traj.status is TerminationStatus.TERMINAL_EVENT:
        logger.debug(f"n={problem.n}: escaped at s={traj.t_final:.3f}")
        return AttractorReport(n=problem.n, kind=AttractorKind.ESCAPE, residual=traj.t_final)

    s_obs = np.linspace(problem.s_transient, problem.s_total, _TAIL_SAMPLES)
    phi = traj.sample(s_obs)[:, 0]
    sign_changing = bool(np.min(phi) < 0.0 < np.max(phi))
    peak = float(np.max(phi))

    maxima = [
        e for e in traj.events_named(MAXIMUM)
        if e.t >= problem.s_transient and (peak <= 0.0 or e.state[0] > 0.5 * peak)
    ]
    if len(maxima) >= _MIN_MAXIMA:
        times = np.array([e.t for e in maxima])
        heights = np.array([e.state[0] for e in maxima])
        spacings = np.diff(times)
        residual = max(_drift(spacings), _drift(heights))
        if residual < _DRIFT_TOL and sign_changing:
            orbit = extract_orbit(problem, traj, cfg)
            report = AttractorReport(
                n=problem.n,
                kind=AttractorKind.PERIODIC,
                period=float(np.mean(spacings[-(_MIN_MAXIMA - 1):])),
                amplitude=orbit.amplitude,
                sign_changing=True,
                residual=residual,
                orbit=orbit,
            )
            logger.debug(f"n={problem.n}: periodic, T={report.period:.6f}, drift {residual:.2e}")
            return report

    tail = phi[3 * len(phi) // 4:]
    c = float(np.mean(tail))
    deviation = float(np.max(np.abs(tail - c)))
    if deviation < _EQUILIBRIUM_TOL * max(1.0, abs(c)):
        return AttractorReport(
            n=problem.n,
            kind=AttractorKind.EQUILIBRIUM,
            sign_changing=sign_changing,
            equilibrium_value=c,
            residual=deviation,
        )
    return AttractorReport(
        n=problem.n,
        kind=AttractorKind.INDETERMINATE,
        sign_changing=sign_changing,
        residual=deviation,
    )


def _is_periodic(
    problem: OscProblem, cfg: IntegratorConfig | None, max_retries: int
) -> bool | None:
    """Periodic or not; None if still indeterminate after every retry.

    Each retry doubles the observation window and tightens the tolerances tenfold.
    """
    cfg = cfg or IntegratorConfig(rtol=1e-10, atol=1e-10)
    for attempt in range(max_retries + 1):
        report = classify_attractor(problem, cfg)
        if report.kind is not AttractorKind.INDETERMINATE:
            return report.kind is AttractorKind.PERIODIC
        if attempt < max_retries:
            problem = replace(problem, s_observe=2 * problem.s_observe)
            cfg = cfg.tightened(_RETRY_TIGHTEN)
            logger.warning(
                f"n={problem.n}: indeterminate, retrying with s_observe={problem.s_observe:g} "
                f"rtol={cfg.rtol:.1e}"
            )
    return None


def find_nh(
    n_lo: float,
    n_hi: float,
    n_tol: float,
    template: OscProblem | None = None,
    cfg: IntegratorConfig | None = None,
    max_retries: int = 3,
) -> float:
    """Bisect in ``n`` for the exponent where the periodic orbit disappears.

    Args:
        n_lo: Exponent with a periodic attractor.
        n_hi: Exponent without one.
        n_tol: Target bracket width.
        template: Run parameters; its ``n`` is replaced at each midpoint.
        cfg: Integrator tolerances.
        max_retries: Indeterminate midpoints are retried this many times with a
            doubled observation window and tenfold tighter tolerances. A midpoint that stays indeterminate is
            returned as the boundary.

    Returns:
        Midpoint of the final bracket.

    Raises:
        BracketInvalid: ``n_lo`` is not periodic or ``n_hi`` is.
        PersistentIndeterminate: An end of the bracket never classifies.
    """
    if not n_tol > 0:
        raise ValueError(f"n_tol must be positive, got {n_tol}")
    template = template or OscProblem(n=n_lo)
    lo, hi = min(n_lo, n_hi), max(n_lo, n_hi)

    for n, wanted in ((lo, True), (hi, False)):
        periodic = _is_periodic(template.with_n(n), cfg, max_retries)
        if periodic is None:
            raise PersistentIndeterminate(f"attractor at n={n} never classified", n)
        if periodic is not wanted:
            raise BracketInvalid(
                f"n bracket [{lo}, {hi}] needs a periodic attractor at {lo} and none at {hi}"
            )

    logger.info(f"bisecting n on [{lo}, {hi}] to {n_tol:g}")
    while hi - lo > n_tol:
        mid = 0.5 * (lo + hi)
        periodic = _is_periodic(template.with_n(mid), cfg, max_retries)
        if periodic is None:
            logger.warning(f"n={mid}: still indeterminate, taking it as the boundary")
            return mid
        if periodic:
            lo = mid
        else:
            hi = mid
        logger.info(f"  n={mid:.6f} -> {'periodic' if periodic else 'non-periodic'}")
    return 0.5 * (lo + hi)
