"""Forward shooting for the normalised similarity profile.

Solves ``f''' = alpha y f (eps^2 + f^2)^(-n/2)`` from ``y = 0`` with
``(f, f', f'') = (1, 0, mu)``, classifies each shot as an overshoot or an
undershoot of the interface, and bisects in ``mu`` for the critical shot.
The similarity constant ``alpha`` is ``1/(4+n)``. A solution ``g`` of the
problem with ``alpha = 1`` gives ``f(y) = g(y / (4+n)^(1/4))`` here.
"""

import logging
from dataclasses import dataclass
from enum import Enum

import numpy as np

from ..errors import BracketInvalid, StepUnderflow, ToleranceStall
from ..solver import (
    Direction,
    EventSpec,
    IntegratorConfig,
    TerminationStatus,
    Trajectory,
    integrate_with_events,
)

logger = logging.getLogger(__name__)

# Event names, also used as terminal reasons
ZERO = "zero"
BLOWUP = "blowup"
UNDERSHOOT = "undershoot"
SLOPE_CAP = "slope_cap"
REBOUND = "rebound"
SAG = "sag"
HORIZON = "horizon"
STEP_UNDERFLOW = "step_underflow"

_HUMP_SAMPLES = 64


class Outcome(Enum):
    """Classification of a single shot."""

    OVERSHOOT = "overshoot"
    UNDERSHOOT = "undershoot"
    INDETERMINATE = "indeterminate"


@dataclass(frozen=True)
class ProfileProblem:
    """Parameters of a forward shot.

    Attributes:
        n: Mobility exponent.
        alpha: Similarity constant; ``None`` means ``1/(4+n)``.
        eps: Regularisation of ``|f|^n`` as ``(eps^2 + f^2)^(n/2)``.
        y_max: Integration horizon.
        blowup_f: ``f`` rising through this value is an overshoot.
        undershoot_margin: ``f`` falling through ``-undershoot_margin`` is an undershoot.
        slope_cap: ``f'`` rising through this value while ``f`` exceeds its start height is an overshoot.
        zero_resolution: Humps smaller than this are treated as numerical dust.
    """

    n: float
    alpha: float | None = None
    eps: float = 1e-11
    y_max: float = 4.0
    blowup_f: float = 1e3
    undershoot_margin: float = 1e-3
    slope_cap: float = 1e3
    zero_resolution: float = 1e-7

    def __post_init__(self) -> None:
        if not self.n > 0:
            raise ValueError(f"n must be positive, got {self.n}")
        if self.alpha is None:
            object.__setattr__(self, "alpha", similarity_constant(self.n))
        if not self.alpha > 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        if not self.eps > 0:
            raise ValueError(f"eps must be positive, got {self.eps}")
        if not self.y_max > 0:
            raise ValueError(f"y_max must be positive, got {self.y_max}")
        if not self.blowup_f > 1:
            raise ValueError(f"blowup_f must exceed 1, got {self.blowup_f}")
        if not self.undershoot_margin > 0:
            raise ValueError(f"undershoot_margin must be positive, got {self.undershoot_margin}")
        if not self.slope_cap > 0:
            raise ValueError(f"slope_cap must be positive, got {self.slope_cap}")
        if not self.zero_resolution > 0:
            raise ValueError(f"zero_resolution must be positive, got {self.zero_resolution}")


@dataclass(frozen=True)
class ClosestApproach:
    """Position and depth of the minimal ``|f|`` along a shot."""

    y: float
    abs_f: float


@dataclass(frozen=True)
class ShootResult:
    """Classified outcome of one shot."""

    mu: float
    outcome: Outcome
    terminal_reason: str
    traj: Trajectory
    zeros: tuple[float, ...]
    closest_approach: ClosestApproach
    interface_estimate: float | None
    min_f: float

    @property
    def n_steps(self) -> int:
        return self.traj.n_steps


@dataclass(frozen=True)
class CriticalShoot:
    """Result of bisecting ``mu`` between an overshoot and an undershoot."""

    mu_star: float
    bracket_width: float
    y0: float
    zeros_near_interface: tuple[float, ...]
    result_low: ShootResult
    result_high: ShootResult

    @property
    def best(self) -> ShootResult:
        """The bracketing shot that approached zero more closely."""
        return _best_shot(self.result_low, self.result_high)


def similarity_constant(n: float) -> float:
    """``1/(4+n)``, the factor of ``y f`` in the integrated similarity ODE."""
    return 1.0 / (4.0 + n)


def profile_rhs(
    n: float, eps: float, state: np.ndarray, y: float, alpha: float = 1.0
) -> np.ndarray:
    """Regularised similarity ODE as a first-order system."""
    f, f1, f2 = state
    return np.array([f1, f2, alpha * y * f * (eps * eps + f * f) ** (-0.5 * n)])


def default_mu_bracket(n: float) -> tuple[float, float]:
    """Bracket of ``mu`` that contains the critical value with margin."""
    if n <= 2.2:
        return (-1.0, 0.0)
    return (-10.0, 0.0)


def scaled_initial_state(n: float, mu: float, height: float) -> tuple[np.ndarray, float]:
    """Start state of ``A f(y / B)`` for ``A^n = B^4`` and the stretch ``B``."""
    stretch = height ** (n / 4.0)
    return np.array([height, 0.0, height * mu / stretch**2]), stretch


def _shot_events(problem: ProfileProblem, height: float) -> list[EventSpec]:
    return [
        EventSpec(ZERO, lambda y, s: s[0], Direction.ANY),
        EventSpec(
            BLOWUP, lambda y, s: s[0] - problem.blowup_f * height, Direction.RISING, terminal=True
        ),
        EventSpec(
            UNDERSHOOT,
            lambda y, s: s[0] + problem.undershoot_margin * height,
            Direction.FALLING,
            terminal=True,
        ),
        EventSpec(
            SLOPE_CAP,
            lambda y, s: s[1] - problem.slope_cap,
            Direction.RISING,
            terminal=True,
            guard=lambda y, s: s[0] > height,
        ),
        # f''' has the sign of f, so a positive minimum grows for ever
        EventSpec(REBOUND, lambda y, s: s[1], Direction.RISING, terminal=True,
                  guard=lambda y, s: s[0] > 0.0),
        # and a negative maximum falls for ever
        EventSpec(SAG, lambda y, s: s[1], Direction.FALLING, terminal=True,
                  guard=lambda y, s: s[0] < 0.0),
    ]


def _classify_terminal(reason: str, final_state: np.ndarray) -> Outcome:
    if reason in (BLOWUP, SLOPE_CAP, REBOUND):
        return Outcome.OVERSHOOT
    if reason in (UNDERSHOOT, SAG):
        return Outcome.UNDERSHOOT
    f, f1 = final_state[0], final_state[1]
    if reason == STEP_UNDERFLOW:
        if f > 0:
            return Outcome.OVERSHOOT
        if f < 0:
            return Outcome.UNDERSHOOT
        return Outcome.INDETERMINATE
    if f > 0 and f1 > 0:
        return Outcome.OVERSHOOT
    return Outcome.INDETERMINATE


def classify(result: ShootResult) -> Outcome:
    """Outcome of a shot as a function of how it terminated."""
    return _classify_terminal(result.terminal_reason, result.traj.y_final)


def _closest_approach(traj: Trajectory) -> ClosestApproach:
    # located zeros count as exact zeros; ties go to the later position
    candidates = [(float(abs(s[0])), float(y)) for y, s in zip(traj.t, traj.y)]
    candidates += [
        (0.0 if e.name == ZERO else float(abs(e.state[0])), float(e.t)) for e in traj.events
    ]
    abs_f, y = min(candidates, key=lambda c: (c[0], -c[1]))
    return ClosestApproach(y=y, abs_f=abs_f)


def shoot(
    problem: ProfileProblem,
    mu: float,
    cfg: IntegratorConfig | None = None,
    height: float = 1.0,
) -> ShootResult:
    """Shoot from the symmetry axis with ``f''(0) = mu``.

    Args:
        problem: Shot parameters.
        mu: Initial second derivative.
        cfg: Integrator tolerances. Defaults to ``IntegratorConfig()``.
        height: Initial height ``f(0)``; 1 for the normalised problem.

    Returns:
        The classified shot.

    Raises:
        IntegrationError: Any integrator failure other than step underflow.
    """
    cfg = cfg or IntegratorConfig()
    y_start = np.array([height, 0.0, mu])
    n, eps, alpha = problem.n, problem.eps, problem.alpha

    def rhs(y: float, state: np.ndarray) -> np.ndarray:
        return profile_rhs(n, eps, state, y, alpha)

    try:
        traj, events = integrate_with_events(
            rhs, 0.0, y_start, problem.y_max, _shot_events(problem, height), cfg
        )
        reason = HORIZON
        if traj.status is TerminationStatus.TERMINAL_EVENT:
            reason = next(e.name for e in reversed(events) if e.name != ZERO)
    except StepUnderflow as e:
        traj = e.trajectory
        reason = STEP_UNDERFLOW
        logger.debug(f"shot mu={mu!r} hit step underflow at y={e.t:.12g}")

    outcome = _classify_terminal(reason, traj.y_final)
    zeros = tuple(sorted({float(e.t) for e in traj.events if e.name == ZERO}))
    approach = _closest_approach(traj)
    logger.debug(
        f"shot n={n} mu={mu!r}: {outcome.value} via {reason} at y={traj.t_final:.12g}, "
        f"{len(zeros)} zeros, {traj.n_steps} steps"
    )
    return ShootResult(
        mu=mu,
        outcome=outcome,
        terminal_reason=reason,
        traj=traj,
        zeros=zeros,
        closest_approach=approach,
        interface_estimate=None if outcome is Outcome.INDETERMINATE else approach.y,
        min_f=float(np.min(traj.y[:, 0])),
    )


def _best_shot(a: ShootResult, b: ShootResult) -> ShootResult:
    key_a = (a.closest_approach.abs_f, -a.closest_approach.y)
    key_b = (b.closest_approach.abs_f, -b.closest_approach.y)
    return a if key_a <= key_b else b


def find_mu(
    problem: ProfileProblem,
    mu_lo: float,
    mu_hi: float,
    mu_tol: float = 1e-12,
    cfg: IntegratorConfig | None = None,
    window: float = 0.2,
) -> CriticalShoot:
    """Bisect ``mu`` for the shot that reaches the interface.

    Args:
        problem: Shot parameters.
        mu_lo: Lower end of the bracket.
        mu_hi: Upper end of the bracket.
        mu_tol: Target bracket width.
        cfg: Integrator tolerances.
        window: Width of the sign-change window ending at the interface estimate.

    Returns:
        The critical shot summary.

    Raises:
        BracketInvalid: Both ends classify the same way or one is indeterminate.
        ToleranceStall: A midpoint shot was indeterminate.
    """
    if not mu_tol > 0:
        raise ValueError(f"mu_tol must be positive, got {mu_tol}")
    lo, hi = min(mu_lo, mu_hi), max(mu_lo, mu_hi)
    r_lo = shoot(problem, lo, cfg)
    r_hi = shoot(problem, hi, cfg)
    if Outcome.INDETERMINATE in (r_lo.outcome, r_hi.outcome) or r_lo.outcome is r_hi.outcome:
        raise BracketInvalid(
            f"mu bracket [{lo}, {hi}] classifies as {r_lo.outcome.value}/{r_hi.outcome.value}"
        )
    logger.info(f"n={problem.n}: bisecting mu on [{lo}, {hi}] to {mu_tol:g}")

    iterations = 0
    while hi - lo > mu_tol:
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        r_mid = shoot(problem, mid, cfg)
        iterations += 1
        if r_mid.outcome is Outcome.INDETERMINATE:
            raise ToleranceStall(f"indeterminate shot at mu={mid!r} (n={problem.n})", mid)
        if r_mid.outcome is r_lo.outcome:
            lo, r_lo = mid, r_mid
        else:
            hi, r_hi = mid, r_mid
        logger.debug(f"  iter {iterations}: mu={mid!r} -> {r_mid.outcome.value}")

    best = _best_shot(r_lo, r_hi)
    y0 = best.closest_approach.y
    near = sign_changes_near_interface(best, window, problem.zero_resolution)
    logger.info(
        f"n={problem.n}: mu*={0.5 * (lo + hi)!r} (width {hi - lo:.2e}, {iterations} shots), "
        f"y0={y0:.6f}, {len(near)} sign changes near interface"
    )
    return CriticalShoot(
        mu_star=0.5 * (lo + hi),
        bracket_width=hi - lo,
        y0=y0,
        zeros_near_interface=tuple(near),
        result_low=r_lo,
        result_high=r_hi,
    )


def _hump_peak(traj: Trajectory, a: float, b: float) -> float:
    if b <= a:
        return 0.0
    ys = np.linspace(a, b, _HUMP_SAMPLES)
    return float(np.max(np.abs(traj.sample(ys)[:, 0])))


def sign_changes_near_interface(
    result: ShootResult, window: float, resolution: float
) -> list[float]:
    """Zeros in ``[y0 - window, y0)`` separating two humps above ``resolution``.

    The zero at the interface estimate itself is the shot leaving the profile
    and is not counted.
    """
    y0 = result.interface_estimate
    if y0 is None:
        return []
    zeros = list(result.zeros)
    t_end = result.traj.t_final
    found = []
    for i, z in enumerate(zeros):
        if not (y0 - window <= z < y0):
            continue
        left = zeros[i - 1] if i > 0 else 0.0
        right = zeros[i + 1] if i + 1 < len(zeros) else t_end
        left_peak = _hump_peak(result.traj, left, z)
        if left_peak > resolution and _hump_peak(result.traj, z, right) > resolution:
            found.append(z)
    return found

