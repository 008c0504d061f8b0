"""Adaptive Dormand-Prince 5(4) integrator with dense output and event location.

This is the numerical engine behind every shooting run: profile shots in y,
oscillatory-component runs in s, and backward shots from the interface in z.
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Sequence

import numpy as np

from ..errors import (
    BudgetExceeded,
    NonFinite,
    OutOfSpan,
    RootRefinementFailed,
    StepUnderflow,
)

logger = logging.getLogger(__name__)

RHS = Callable[[float, np.ndarray], np.ndarray]
EventFunction = Callable[[float, np.ndarray], float]
EventGuard = Callable[[float, np.ndarray], bool]


# Dormand-Prince 5(4) tableau (Hairer, Norsett & Wanner, Solving ODE I, p. 178)
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    np.array([]),
    np.array([1 / 5]),
    np.array([3 / 40, 9 / 40]),
    np.array([44 / 45, -56 / 15, 32 / 9]),
    np.array([19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]),
    np.array([9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]),
]
_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84])
# b - b_hat over all seven stages (last stage is the FSAL evaluation)
_E = np.array(
    [-71 / 57600, 0.0, 71 / 16695, -71 / 1920, 17253 / 339200, -22 / 525, 1 / 40]
)
# Free 4th-order continuous extension: y(t + th*h) = y + h * K^T P [th, th^2, th^3, th^4]
_P = np.array(
    [
        [1.0, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432],
        [0.0, 0.0, 0.0, 0.0],
        [0.0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799],
        [0.0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072],
        [0.0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632],
        [0.0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844],
        [0.0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
    ]
)

# PI step-size controller
_SAFETY = 0.9
_MIN_FACTOR = 0.2
_MAX_FACTOR = 5.0
_BETA = 0.04
_EXPONENT = 0.2 - 0.75 * _BETA

_MAX_BISECTIONS = 200


class Direction(Enum):
    """Which sign changes of an event function count as crossings."""

    RISING = "rising"
    FALLING = "falling"
    ANY = "any"


class TerminationStatus(Enum):
    """How an integration ended."""

    COMPLETED = "completed"
    TERMINAL_EVENT = "terminal_event"
    FAILED = "failed"


@dataclass(frozen=True)
class IntegratorConfig:
    """Tolerances and limits for one integration.

    Attributes:
        rtol: Relative tolerance.
        atol: Absolute tolerance.
        h_init: Initial step magnitude. Chosen automatically when None.
        h_min: Step floor. Defaults to 1e-14 times the integration span.
        h_max: Step ceiling. Defaults to the integration span.
        max_steps: Budget of accepted steps.
    """

    rtol: float = 1e-12
    atol: float = 1e-12
    h_init: float | None = None
    h_min: float | None = None
    h_max: float | None = None
    max_steps: int = 2_000_000

    def __post_init__(self) -> None:
        if not self.rtol > 0:
            raise ValueError(f"rtol must be positive, got {self.rtol}")
        if not self.atol > 0:
            raise ValueError(f"atol must be positive, got {self.atol}")
        for name in ("h_init", "h_min", "h_max"):
            value = getattr(self, name)
            if value is not None and not value > 0:
                raise ValueError(f"{name} must be positive, got {value}")
        if self.max_steps <= 0:
            raise ValueError(f"max_steps must be positive, got {self.max_steps}")

    def tightened(self, factor: float) -> "IntegratorConfig":
        """Copy with both tolerances divided by ``factor``."""
        return IntegratorConfig(
            rtol=self.rtol / factor,
            atol=self.atol / factor,
            h_init=self.h_init,
            h_min=self.h_min,
            h_max=self.h_max,
            max_steps=self.max_steps,
        )


@dataclass(frozen=True)
class EventSpec:
    """A scalar event function watched along the trajectory.

    Attributes:
        name: Identifier stored on every record of this event.
        function: Maps (t, state) to a real number; crossings of zero are events.
        direction: Which crossings count.
        terminal: Stop the integration at the first counted crossing.
        guard: Optional predicate on the located (t, state); crossings where it
            is false are ignored.
    """

    name: str
    function: EventFunction
    direction: Direction = Direction.ANY
    terminal: bool = False
    guard: EventGuard | None = None


@dataclass(frozen=True)
class EventRecord:
    """A located event: time, state and the event name."""

    t: float
    state: np.ndarray
    name: str


@dataclass(frozen=True)
class _Segment:
    t_old: float
    h: float
    y_old: np.ndarray
    q: np.ndarray

    def evaluate(self, t: float) -> np.ndarray:
        theta = (t - self.t_old) / self.h
        powers = np.array([theta, theta**2, theta**3, theta**4])
        return self.y_old + self.h * (self.q @ powers)


@dataclass(frozen=True)
class Trajectory:
    """Accepted nodes, per-step dense interpolants and located events.

    A trajectory is immutable once built. Node ``i`` is the start of segment
    ``i``; the last node is where integration stopped (end point or terminal
    event).
    """

    t: np.ndarray
    y: np.ndarray
    events: tuple[EventRecord, ...]
    status: TerminationStatus
    n_steps: int
    n_rejected: int
    segments: tuple[_Segment, ...] = field(repr=False)

    @property
    def direction(self) -> float:
        return 1.0 if self.t[-1] >= self.t[0] else -1.0

    @property
    def t_final(self) -> float:
        return float(self.t[-1])

    @property
    def y_final(self) -> np.ndarray:
        return self.y[-1].copy()

    def events_named(self, name: str) -> list[EventRecord]:
        return [e for e in self.events if e.name == name]

    def __call__(self, t: float) -> np.ndarray:
        return dense_eval(self, t)

    def sample(self, ts: Sequence[float]) -> np.ndarray:
        """Dense states at each time in ``ts`` (shape ``(len(ts), dim)``)."""
        return np.array([dense_eval(self, float(t)) for t in ts])


class _TrajectoryBuilder:
    def __init__(self, t0: float, y0: np.ndarray):
        self.t = [t0]
        self.y = [y0.copy()]
        self.segments: list[_Segment] = []
        self.events: list[EventRecord] = []
        self.n_rejected = 0

    def add_step(self, segment: _Segment, t_new: float, y_new: np.ndarray) -> None:
        self.segments.append(segment)
        self.t.append(t_new)
        self.y.append(y_new.copy())

    def build(self, status: TerminationStatus) -> Trajectory:
        return Trajectory(
            t=np.array(self.t),
            y=np.array(self.y),
            events=tuple(self.events),
            status=status,
            n_steps=len(self.segments),
            n_rejected=self.n_rejected,
            segments=tuple(self.segments),
        )


def _max_norm(v: np.ndarray) -> float:
    return float(np.max(np.abs(v)))


def _initial_step(
    rhs: RHS, t0: float, y0: np.ndarray, f0: np.ndarray, direction: float,
    span: float, cfg: IntegratorConfig,
) -> float:
    """Starting step magnitude (Hairer's heuristic, max-norm)."""
    scale = cfg.atol + cfg.rtol * np.abs(y0)
    d0 = _max_norm(y0 / scale)
    d1 = _max_norm(f0 / scale)
    if d0 < 1e-5 or d1 < 1e-5:
        h0 = 1e-6
    else:
        h0 = 0.01 * d0 / d1
    h0 = min(h0, span)
    y1 = y0 + direction * h0 * f0
    f1 = np.asarray(rhs(t0 + direction * h0, y1), dtype=float)
    d2 = _max_norm((f1 - f0) / scale) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** 0.2
    return min(100 * h0, h1, span)


def _dp_step(
    rhs: RHS, t: float, y: np.ndarray, f0: np.ndarray, h: float
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    k = np.empty((7, y.size))
    k[0] = f0
    for s in range(1, 6):
        k[s] = rhs(t + _C[s] * h, y + h * (_A[s] @ k[:s]))
    y_new = y + h * (_B @ k[:6])
    k[6] = rhs(t + h, y_new)
    err = h * (_E @ k)
    return y_new, k, err


def _crossed(g_old: float, g_new: float, direction: Direction) -> bool:
    if g_old == 0.0 or not np.isfinite(g_old) or not np.isfinite(g_new):
        return False
    rising = g_old < 0.0 <= g_new
    falling = g_old > 0.0 >= g_new
    if direction is Direction.RISING:
        return rising
    if direction is Direction.FALLING:
        return falling
    return rising or falling


def _locate(
    event: EventSpec, segment: _Segment, t_a: float, g_a: float, t_b: float, g_b: float,
    y_b: np.ndarray, builder: _TrajectoryBuilder,
) -> tuple[float, np.ndarray]:
    """Bisect the dense interpolant down to a machine-adjacent bracket."""
    lo, g_lo, hi, g_hi = t_a, g_a, t_b, g_b
    exact = False
    for _ in range(_MAX_BISECTIONS):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        g_mid = event.function(mid, segment.evaluate(mid))
        if not np.isfinite(g_mid):
            raise RootRefinementFailed(
                f"event '{event.name}' is not finite at t={mid!r}",
                mid,
                builder.build(TerminationStatus.FAILED),
            )
        if g_mid == 0.0:
            hi, g_hi, exact = mid, g_mid, True
            break
        if (g_mid > 0.0) == (g_lo > 0.0):
            lo, g_lo = mid, g_mid
        else:
            hi, g_hi = mid, g_mid
    scale = abs(g_a) + abs(g_b)
    if not exact and scale > 0.0 and abs(g_hi - g_lo) > 0.5 * scale:
        raise RootRefinementFailed(
            f"event '{event.name}' jumps across t={hi!r} without a zero",
            hi,
            builder.build(TerminationStatus.FAILED),
        )
    if hi == t_b:
        return hi, y_b.copy()
    return hi, segment.evaluate(hi)


def _run(
    rhs: RHS,
    t0: float,
    y0: Sequence[float] | np.ndarray,
    t_end: float,
    events: Sequence[EventSpec],
    cfg: IntegratorConfig,
) -> Trajectory:
    span = t_end - t0
    if span == 0.0:
        raise ValueError("t_end must differ from t0")
    direction = 1.0 if span > 0 else -1.0
    span = abs(span)

    y = np.array(y0, dtype=float)
    if not np.all(np.isfinite(y)):
        raise NonFinite(f"initial state is not finite: {y}", t0)
    builder = _TrajectoryBuilder(t0, y)
    f = np.asarray(rhs(t0, y), dtype=float)
    if not np.all(np.isfinite(f)):
        raise NonFinite(
            f"right-hand side is not finite at t={t0!r}", t0, builder.build(TerminationStatus.FAILED)
        )

    h_min = cfg.h_min if cfg.h_min is not None else 1e-14 * span
    h_max = cfg.h_max if cfg.h_max is not None else span
    h = cfg.h_init if cfg.h_init is not None else _initial_step(rhs, t0, y, f, direction, span, cfg)
    h = min(max(h, h_min), h_max)

    g_prev = [float(ev.function(t0, y)) for ev in events]
    err_prev = 1e-4
    t = t0

    while True:
        if len(builder.segments) >= cfg.max_steps:
            raise BudgetExceeded(
                f"max_steps={cfg.max_steps} exhausted at t={t!r}",
                t,
                builder.build(TerminationStatus.FAILED),
            )
        h = min(h, h_max)
        last = (t_end - (t + direction * h)) * direction <= 0.0
        if last:
            h = abs(t_end - t)

        while True:
            if h < h_min and not last:
                raise StepUnderflow(
                    f"step {h:.3e} below h_min={h_min:.3e} at t={t!r}",
                    t,
                    builder.build(TerminationStatus.FAILED),
                )
            step = direction * h
            y_new, k, err = _dp_step(rhs, t, y, f, step)
            if not (np.all(np.isfinite(k)) and np.all(np.isfinite(y_new))):
                raise NonFinite(
                    f"right-hand side produced a non-finite value near t={t!r}",
                    t,
                    builder.build(TerminationStatus.FAILED),
                )
            scale = cfg.atol + cfg.rtol * np.maximum(np.abs(y), np.abs(y_new))
            err_norm = _max_norm(err / scale)
            if err_norm <= 1.0:
                if err_norm == 0.0:
                    factor = _MAX_FACTOR
                else:
                    factor = _SAFETY * err_prev**_BETA / err_norm**_EXPONENT
                    factor = min(_MAX_FACTOR, max(_MIN_FACTOR, factor))
                err_prev = max(err_norm, 1e-4)
                break
            builder.n_rejected += 1
            last = False
            h *= max(_MIN_FACTOR, _SAFETY / err_norm**_EXPONENT)
            if h < h_min:
                raise StepUnderflow(
                    f"step {h:.3e} below h_min={h_min:.3e} at t={t!r}",
                    t,
                    builder.build(TerminationStatus.FAILED),
                )

        t_new = t_end if last else t + step
        segment = _Segment(t_old=t, h=step, y_old=y.copy(), q=k.T @ _P)

        hits: list[tuple[float, int, np.ndarray]] = []
        for i, ev in enumerate(events):
            g_new = float(ev.function(t_new, y_new))
            if _crossed(g_prev[i], g_new, ev.direction):
                t_star, y_star = _locate(
                    ev, segment, t, g_prev[i], t_new, g_new, y_new, builder
                )
                if ev.guard is None or ev.guard(t_star, y_star):
                    hits.append((t_star, i, y_star))
            g_prev[i] = g_new
        hits.sort(key=lambda hit: (direction * hit[0], hit[1]))

        terminal = next((hit for hit in hits if events[hit[1]].terminal), None)
        if terminal is not None:
            t_stop = terminal[0]
            for t_star, i, y_star in hits:
                if direction * t_star <= direction * t_stop:
                    builder.events.append(EventRecord(t_star, y_star, events[i].name))
                if events[i].terminal and t_star == t_stop:
                    break
            builder.add_step(segment, t_stop, terminal[2])
            trajectory = builder.build(TerminationStatus.TERMINAL_EVENT)
            logger.debug(
                f"terminal event '{events[terminal[1]].name}' at t={t_stop:.12g} "
                f"after {trajectory.n_steps} steps"
            )
            return trajectory

        for t_star, i, y_star in hits:
            builder.events.append(EventRecord(t_star, y_star, events[i].name))
        builder.add_step(segment, t_new, y_new)
        t, y, f = t_new, y_new, k[6]
        if last:
            return builder.build(TerminationStatus.COMPLETED)
        h *= factor


def integrate(
    rhs: RHS,
    t0: float,
    y0: Sequence[float] | np.ndarray,
    t_end: float,
    cfg: IntegratorConfig | None = None,
) -> Trajectory:
    """Integrate ``y' = rhs(t, y)`` from ``t0`` to ``t_end``.

    Args:
        rhs: Vector field, called as ``rhs(t, y)``.
        t0: Start time.
        y0: Initial state.
        t_end: End time; may be smaller than ``t0`` for backward integration.
        cfg: Tolerances and limits. Defaults to ``IntegratorConfig()``.

    Returns:
        Trajectory from ``t0`` to ``t_end``.

    Raises:
        StepUnderflow: The required step fell below ``h_min``.
        BudgetExceeded: ``max_steps`` accepted steps were not enough.
        NonFinite: The vector field produced NaN or Inf.
    """
    return _run(rhs, t0, y0, t_end, (), cfg or IntegratorConfig())


def integrate_with_events(
    rhs: RHS,
    t0: float,
    y0: Sequence[float] | np.ndarray,
    t_end: float,
    events: Sequence[EventSpec],
    cfg: IntegratorConfig | None = None,
) -> tuple[Trajectory, list[EventRecord]]:
    """Integrate while locating zero crossings of the given event functions.

    Every counted crossing is refined by bisection on the step's dense
    interpolant. The first terminal crossing stops the integration there.

    Args:
        rhs: Vector field, called as ``rhs(t, y)``.
        t0: Start time.
        y0: Initial state.
        t_end: End time.
        events: Event functions to watch.
        cfg: Tolerances and limits.

    Returns:
        The trajectory and the located events in integration order.

    Raises:
        RootRefinementFailed: An event function jumps instead of crossing zero.
        StepUnderflow, BudgetExceeded, NonFinite: As for ``integrate``.
    """
    trajectory = _run(rhs, t0, y0, t_end, tuple(events), cfg or IntegratorConfig())
    return trajectory, list(trajectory.events)


def dense_eval(traj: Trajectory, t: float) -> np.ndarray:
    """Interpolated state at ``t``; exact stored state at node times.

    Raises:
        OutOfSpan: ``t`` lies outside the trajectory.
    """
    direction = traj.direction
    keys = direction * traj.t
    key = direction * t
    if not keys[0] <= key <= keys[-1]:
        raise OutOfSpan(f"t={t!r} outside trajectory span [{traj.t[0]!r}, {traj.t[-1]!r}]")
    idx = int(np.searchsorted(keys, key, side="left"))
    if idx < len(keys) and keys[idx] == key:
        return traj.y[idx].copy()
    return traj.segments[idx - 1].evaluate(t)
