"""Interface-local expansions and backward shooting from the interface.

Frame: ``z = y0 - y`` with the interface normalised to ``y0 = 1``. There the
profile satisfies ``f^(n-1) f_zzz = -(1 - z)`` and the explicit solution is
``B0 z^m`` with ``m = 3/n``. The positive bundle adds ``D z^l``, where ``l`` is
the root of the characteristic cubic above 2.
"""

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Callable, Union

import numpy as np
from scipy.optimize import brentq

from ..errors import (
    FitFailed,
    NonPositiveZ,
    OrbitMissing,
    OutOfRange,
    RootBracketFailed,
    SeedUnderflow,
    ToolkitError,
)
from ..solver import IntegratorConfig, Trajectory, integrate
from .oscillation import PeriodicOrbit
from .profile import ShootResult, profile_rhs, similarity_constant

logger = logging.getLogger(__name__)

DEFAULT_EPS = 1e-11
DEFAULT_DELTA = 1e-3


class CubicForm(Enum):
    """Which constant term the characteristic cubic uses.

    ``SCALED`` uses ``(n-1) K^(2/n)`` and ``EXACT`` uses ``(n-1) K``, with
    ``K = m(m-1)(2-m)``. They agree at ``n = 2``. Only the exact form cancels
    the leading correction in the equation residual.
    """

    SCALED = "scaled"
    EXACT = "exact"


def _k_factor(n: float) -> float:
    if not 1.5 < n < 3.0:
        raise OutOfRange(f"n={n} outside (3/2, 3)")
    m = 3.0 / n
    return m * (m - 1.0) * (2.0 - m)


def b0(n: float) -> float:
    """Coefficient of the explicit interface solution, ``B0^n = 1 / (m(m-1)(2-m))``.

    Raises:
        OutOfRange: ``n`` outside (3/2, 3).
    """
    return _k_factor(n) ** (-1.0 / n)


def hn(n: float, l: float, form: CubicForm = CubicForm.SCALED) -> float:
    """Characteristic cubic ``l(l-1)(l-2) - (n-1) * const``."""
    k = _k_factor(n)
    constant = k ** (2.0 / n) if form is CubicForm.SCALED else k
    return l * (l - 1.0) * (l - 2.0) - (n - 1.0) * constant


def admissible_window(n: float) -> tuple[float, float]:
    """Open interval ``(m, 1 + m)`` an exponent must lie in."""
    m = 3.0 / n
    return m, 1.0 + m


def solve_l(n: float, form: CubicForm = CubicForm.SCALED) -> tuple[float, bool]:
    """Root of the characteristic cubic in ``[2, 4]`` and its admissibility.

    Raises:
        OutOfRange: ``n`` outside (3/2, 3).
        RootBracketFailed: No sign change on ``[2, 4]``.
    """
    lo, hi = 2.0, 4.0
    h_lo, h_hi = hn(n, lo, form), hn(n, hi, form)
    if not (h_lo < 0.0 < h_hi):
        raise RootBracketFailed(f"H_n has no sign change on [{lo}, {hi}] for n={n}")
    l = float(brentq(lambda x: hn(n, x, form), lo, hi, xtol=1e-14, rtol=4 * np.finfo(float).eps))
    w_lo, w_hi = admissible_window(n)
    return l, bool(w_lo < l < w_hi)


@dataclass(frozen=True)
class ExpansionParams:
    """Two-term interface expansion ``B0 z^m + D z^l``."""

    n: float
    m: float
    B0: float
    l: float
    D: float
    admissible: bool
    form: CubicForm = CubicForm.EXACT

    def __post_init__(self) -> None:
        if abs(self.m - 3.0 / self.n) > 1e-14 * self.m:
            raise ValueError(f"m={self.m} inconsistent with n={self.n}")
        if abs(self.B0**self.n * _k_factor(self.n) - 1.0) > 1e-12:
            raise ValueError(f"B0={self.B0} is not the interface coefficient for n={self.n}")

    @classmethod
    def for_exponent(
        cls, n: float, D: float = 0.0, form: CubicForm = CubicForm.EXACT
    ) -> "ExpansionParams":
        l, admissible = solve_l(n, form)
        return cls(n=n, m=3.0 / n, B0=b0(n), l=l, D=D, admissible=admissible, form=form)

    def with_D(self, D: float) -> "ExpansionParams":
        return replace(self, D=D)


def _power_derivatives(p: float, z: float) -> np.ndarray:
    """``d^k/dz^k z^p`` for ``k = 0..3``."""
    return np.array([
        z**p,
        p * z ** (p - 1.0),
        p * (p - 1.0) * z ** (p - 2.0),
        p * (p - 1.0) * (p - 2.0) * z ** (p - 3.0),
    ])


def eval_expansion(params: ExpansionParams, z: float) -> np.ndarray:
    """``(f, f_z, f_zz, f_zzz)`` of the two-term series at ``z``.

    Raises:
        NonPositiveZ: ``z <= 0``.
        OutOfRange: ``params`` is not admissible.
    """
    if not z > 0:
        raise NonPositiveZ(f"expansion needs z > 0, got {z}")
    if not params.admissible:
        raise OutOfRange(f"l={params.l} is not admissible for n={params.n}")
    leading = params.B0 * _power_derivatives(params.m, z)
    if params.D == 0.0:
        return leading
    return leading + params.D * _power_derivatives(params.l, z)


@dataclass(frozen=True)
class ResidualFit:
    """Measured decay of the equation residual on the series."""

    slope: float
    predicted: float
    threshold: float
    passes: bool


def residual_order(params: ExpansionParams, z_grid: np.ndarray | None = None) -> ResidualFit:
    """Fit ``log|r|`` against ``log z`` for the residual of the series.

    For ``D = 0`` the residual is ``r = f^(n-1) f_zzz + 1 - z = -z``, order 1.
    Otherwise the bundle residual ``f^(n-1) f_zzz + 1`` is fitted: with the exact
    root its ``z^(l-m)`` term cancels and ``(n/2)(n-1)(D/B0)^2 z^(2(l-m))``
    leads. The gate passes at 0.1 below the expected order.

    Raises:
        FitFailed: Residual vanishes or is not finite on the grid.
    """
    if z_grid is None:
        z_grid = np.logspace(-6, -2, 41)
    z_grid = np.asarray(z_grid, dtype=float)
    if z_grid.size < 3:
        raise FitFailed("residual fit needs at least three points")
    n = params.n
    residual = []
    for z in z_grid:
        f, _, _, f3 = eval_expansion(params, z)
        if not f > 0:
            raise FitFailed(f"series is not positive at z={z!r}")
        linear = z if params.D == 0.0 else 0.0
        residual.append(f ** (n - 1.0) * f3 + 1.0 - linear)
    r = np.abs(np.array(residual))
    if not np.all(np.isfinite(r)) or np.any(r == 0.0):
        raise FitFailed("residual vanishes or is not finite on the grid")
    slope = float(np.polyfit(np.log(z_grid), np.log(r), 1)[0])
    predicted = 1.0 if params.D == 0.0 else 2.0 * (params.l - params.m)
    threshold = predicted - 0.1
    return ResidualFit(slope=slope, predicted=predicted, threshold=threshold, passes=slope >= threshold)


def _backshoot_rhs(n: float, eps: float) -> Callable[[float, np.ndarray], np.ndarray]:
    def rhs(z: float, state: np.ndarray) -> np.ndarray:
        f, f1, f2 = state
        return np.array([f1, f2, -(1.0 - z) * f * (eps * eps + f * f) ** (-0.5 * n)])

    return rhs


@dataclass(frozen=True)
class RescaledProfile:
    """A backshoot solution mapped to ``f(0) = 1`` by the scaling group."""

    n: float
    A: float
    B: float
    mu: float
    y0: float
    source: "BackshootState" = field(repr=False)

    def state(self, y: float) -> np.ndarray:
        """``(f, f', f'')`` in the forward frame at ``y`` in ``[0, y0)``."""
        g = self.source.profile_state(y / self.B)
        return np.array([self.A * g[0], self.A * g[1] / self.B, self.A * g[2] / self.B**2])


@dataclass(frozen=True)
class BackshootState:
    """A backward shot from ``z = delta`` to the origin ``z = 1``.

    ``seed`` and ``traj`` live in the interface frame ``(F, F_z, F_zz)``;
    ``origin`` is ``(f, f', f'')`` at ``y = 0`` in the forward frame.
    """

    n: float
    eps: float
    delta: float
    seed: np.ndarray
    traj: Trajectory = field(repr=False)
    origin: np.ndarray
    D: float | None = None
    s0: float | None = None

    def __post_init__(self) -> None:
        if not 0 < self.delta < 0.5:
            raise ValueError(f"delta must lie in (0, 0.5), got {self.delta}")

    @property
    def f_origin(self) -> float:
        return float(self.origin[0])

    @property
    def slope_origin(self) -> float:
        return float(self.origin[1])

    @property
    def interface_slope(self) -> float:
        """``F_z`` at the origin, in the interface frame.

        Opposite in sign to ``slope_origin``. Large positive ``D`` makes it
        positive and large negative ``D`` negative.
        """
        return float(self.traj.y_final[1])

    def profile_state(self, y: float) -> np.ndarray:
        """``(f, f', f'')`` in the forward frame at ``y = 1 - z``."""
        F = self.traj(1.0 - y)
        return np.array([F[0], -F[1], F[2]])

    def unit_height(self, alpha: float | None = None) -> RescaledProfile:
        """Rescale so that ``f(0) = 1``; gives the implied ``mu`` and interface.

        ``A f(y / B)`` solves the forward problem with constant ``alpha`` when
        ``A^n = alpha B^4``. ``alpha`` defaults to ``1/(4+n)``.
        """
        f0 = self.f_origin
        if not f0 > 0:
            raise ValueError(f"cannot rescale a profile with f(0)={f0}")
        if alpha is None:
            alpha = similarity_constant(self.n)
        A = 1.0 / f0
        B = (A**self.n / alpha) ** 0.25
        return RescaledProfile(
            n=self.n, A=A, B=B, mu=A * float(self.origin[2]) / B**2, y0=B, source=self
        )


def _shoot_to_origin(
    n: float,
    seed: np.ndarray,
    delta: float,
    cfg: IntegratorConfig | None,
    eps: float,
    D: float | None = None,
    s0: float | None = None,
) -> BackshootState:
    traj = integrate(_backshoot_rhs(n, eps), delta, seed, 1.0, cfg)
    F = traj.y_final
    return BackshootState(
        n=n,
        eps=eps,
        delta=delta,
        seed=np.array(seed, dtype=float),
        traj=traj,
        origin=np.array([F[0], -F[1], F[2]]),
        D=D,
        s0=s0,
    )


def _check_delta(delta: float) -> None:
    if not 1e-4 <= delta <= 1e-1:
        raise ValueError(f"delta must lie in [1e-4, 1e-1], got {delta}")


def _positive_seed(params: ExpansionParams, delta: float, eps: float) -> np.ndarray:
    seed = eval_expansion(params, delta)[:3]
    if seed[0] < 10.0 * eps:
        raise SeedUnderflow(f"seed f({delta})={seed[0]:.3e} is below 10*eps")
    return seed


def backshoot_positive(
    n: float,
    D: float,
    delta: float = DEFAULT_DELTA,
    cfg: IntegratorConfig | None = None,
    eps: float = DEFAULT_EPS,
) -> BackshootState:
    """Shoot from the positive bundle member ``D`` back to the origin.

    Raises:
        OutOfRange: ``n`` outside (3/2, 3) or inadmissible root.
        SeedUnderflow: ``f(delta) < 10 eps``.
    """
    _check_delta(delta)
    params = ExpansionParams.for_exponent(n, D)
    return _shoot_to_origin(n, _positive_seed(params, delta, eps), delta, cfg, eps, D=D)


def seed_floor(params: ExpansionParams, eps: float = DEFAULT_EPS) -> float:
    """Offset where the leading term ``B0 z^m`` falls to ``100 eps``."""
    return (100.0 * eps / params.B0) ** (1.0 / params.m)


def bundle_offset(params: ExpansionParams, delta: float, eps: float = DEFAULT_EPS) -> float:
    """Seed offset no larger than ``delta`` keeping ``|D| z^(l-m) <= 0.1 B0``.

    Never below ``seed_floor``; there the correction may exceed a tenth of
    the leading term.
    """
    if params.D == 0.0:
        return delta
    limit = (0.1 * params.B0 / abs(params.D)) ** (1.0 / (params.l - params.m))
    return min(delta, max(limit, seed_floor(params, eps)))


def default_D_grid(extent: float = 3.0, count: int = 20) -> np.ndarray:
    """Symmetric log grid ``-10^extent .. -10^-extent, 0, 10^-extent .. 10^extent``."""
    positive = np.logspace(-extent, extent, count)
    return np.concatenate([-positive[::-1], [0.0], positive])


@dataclass(frozen=True)
class DScanRow:
    """Terminal data of one bundle member."""

    D: float
    delta: float
    f0: float
    slope0: float
    status: str = "ok"

    @property
    def ok(self) -> bool:
        return self.status == "ok"


@dataclass(frozen=True)
class DScan:
    """Terminal data across a D grid and the refined zeros of ``f'(0)``."""

    n: float
    rows: tuple[DScanRow, ...]
    brackets: tuple[tuple[float, float], ...]
    roots: tuple[float, ...]
    min_abs_slope: float

    @property
    def failed(self) -> tuple[DScanRow, ...]:
        return tuple(r for r in self.rows if not r.ok)


def backshoot_bundle(
    n: float,
    D: float,
    delta: float = DEFAULT_DELTA,
    cfg: IntegratorConfig | None = None,
    eps: float = DEFAULT_EPS,
) -> BackshootState:
    """``backshoot_positive`` seeded at ``bundle_offset`` instead of ``delta``."""
    _check_delta(delta)
    params = ExpansionParams.for_exponent(n, D)
    offset = bundle_offset(params, delta, eps)
    if offset < delta:
        logger.warning(f"D={D:g}: seed offset shrunk from {delta:g} to {offset:.3e}")
    return _shoot_to_origin(n, _positive_seed(params, offset, eps), offset, cfg, eps, D=D)


def bundle_row(n: float, D: float, delta: float, cfg: IntegratorConfig | None, eps: float) -> DScanRow:
    state = backshoot_bundle(n, D, delta, cfg, eps)
    return DScanRow(D=D, delta=state.delta, f0=state.f_origin, slope0=state.slope_origin)


def _d_row_task(args: tuple) -> DScanRow:
    n, D, delta, cfg, eps = args
    try:
        return bundle_row(n, D, delta, cfg, eps)
    except ToolkitError as e:
        logger.warning(f"n={n}, D={D:g}: {type(e).__name__}: {e}")
        return DScanRow(D=D, delta=delta, f0=float("nan"), slope0=float("nan"),
                        status=type(e).__name__)


def scan_D(
    n: float,
    D_grid: np.ndarray | None = None,
    delta: float = DEFAULT_DELTA,
    cfg: IntegratorConfig | None = None,
    eps: float = DEFAULT_EPS,
    workers: int = 1,
    refine: bool = True,
) -> DScan:
    """Backshoot every D on the grid and refine sign changes of ``f'(0)``.

    Rows come back in grid order regardless of ``workers``. A member that
    fails keeps its row with a non-``ok`` status and NaN data; brackets are
    taken between neighbouring successful rows.
    """
    _check_delta(delta)
    grid = default_D_grid() if D_grid is None else np.asarray(D_grid, dtype=float)
    tasks = [(n, float(D), delta, cfg, eps) for D in grid]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_d_row_task, tasks))
    else:
        rows = [_d_row_task(task) for task in tasks]

    good = [r for r in rows if r.ok]
    brackets = []
    for a, b in zip(good, good[1:]):
        if a.slope0 == 0.0:
            brackets.append((a.D, a.D))
        elif a.slope0 * b.slope0 < 0.0:
            brackets.append((a.D, b.D))

    roots = []
    if refine:
        for a, b in brackets:
            if a == b:
                roots.append(a)
                continue
            try:
                root = brentq(
                    lambda D: bundle_row(n, D, delta, cfg, eps).slope0, a, b, xtol=1e-12, rtol=1e-12
                )
            except ToolkitError as e:
                logger.warning(f"n={n}: refinement on [{a:g}, {b:g}] failed: {e}")
                continue
            roots.append(float(root))
            logger.info(f"n={n}: f'(0) changes sign on [{a:g}, {b:g}], D*={root!r}")

    return DScan(
        n=n,
        rows=tuple(rows),
        brackets=tuple(brackets),
        roots=tuple(roots),
        min_abs_slope=min((abs(r.slope0) for r in good), default=float("nan")),
    )


def oscillatory_seed(n: float, s0: float, delta: float, orbit: PeriodicOrbit) -> np.ndarray:
    """``(f, f_z, f_zz)`` of ``z^m phi(ln z + s0)`` at ``z = delta``."""
    m = 3.0 / n
    phi, phi1, phi2 = orbit.state(np.log(delta) + s0)
    return np.array([
        delta**m * phi,
        delta ** (m - 1.0) * (m * phi + phi1),
        delta ** (m - 2.0) * (m * (m - 1.0) * phi + (2.0 * m - 1.0) * phi1 + phi2),
    ])


def backshoot_oscillatory(
    n: float,
    s0: float,
    delta: float,
    orbit: PeriodicOrbit | None,
    cfg: IntegratorConfig | None = None,
    eps: float = DEFAULT_EPS,
) -> BackshootState:
    """Shoot from the oscillatory bundle member with phase ``s0`` to the origin.

    Raises:
        OrbitMissing: No orbit, or an orbit computed for another exponent.
        SeedUnderflow: The seed is lost in the regularisation floor.
    """
    _check_delta(delta)
    if orbit is None or abs(orbit.n - n) > 1e-12:
        raise OrbitMissing(f"no periodic orbit available for n={n}")
    seed = oscillatory_seed(n, s0, delta, orbit)
    if abs(seed[0]) < 10.0 * eps and abs(seed[1]) * delta < 10.0 * eps:
        raise SeedUnderflow(f"oscillatory seed at s0={s0!r} is below 10*eps")
    return _shoot_to_origin(n, seed, delta, cfg, eps, s0=s0)


@dataclass(frozen=True)
class S0Scan:
    """Terminal data over one period of phases."""

    n: float
    rows: tuple[tuple[float, float, float], ...]
    s0_star: float
    min_abs_slope: float


def scan_s0(
    n: float,
    orbit: PeriodicOrbit,
    delta: float = DEFAULT_DELTA,
    count: int = 64,
    cfg: IntegratorConfig | None = None,
    eps: float = DEFAULT_EPS,
) -> S0Scan:
    """Backshoot ``count`` phases evenly spread over one period."""
    phases = np.linspace(0.0, orbit.period, count, endpoint=False)
    rows = []
    for s0 in phases:
        state = backshoot_oscillatory(n, float(s0), delta, orbit, cfg, eps)
        rows.append((float(s0), state.f_origin, state.slope_origin))
    best = min(rows, key=lambda row: abs(row[2]))
    logger.info(f"n={n}: min |f'(0)|={abs(best[2]):.3e} at s0={best[0]:.6f}")
    return S0Scan(n=n, rows=tuple(rows), s0_star=best[0], min_abs_slope=abs(best[2]))


@dataclass(frozen=True)
class InterfaceConditions:
    """Height, slope and flux ``|f|^n f'''`` at an interface estimate."""

    y: float
    height: float
    slope: float
    flux: float

    def all_below(self, bound: float) -> bool:
        return max(abs(self.height), abs(self.slope), abs(self.flux)) < bound


def interface_conditions(
    result: Union[ShootResult, BackshootState],
    n: float,
    eps: float = DEFAULT_EPS,
    alpha: float | None = None,
) -> InterfaceConditions:
    """Evaluate the zero-height, zero-slope and zero-flux conditions.

    Forward shots are evaluated at their closest approach, with ``alpha`` the
    similarity constant of the shot (default ``1/(4+n)``). Backward shots are
    evaluated at the seed point ``z = delta`` (forward-frame slope sign).
    """
    if isinstance(result, BackshootState):
        F, F1, _ = result.seed
        F3 = _backshoot_rhs(n, eps)(result.delta, result.seed)[2]
        flux = -((eps * eps + F * F) ** (0.5 * n)) * F3
        return InterfaceConditions(
            y=1.0 - result.delta, height=float(F), slope=float(-F1), flux=float(flux)
        )

    if result.interface_estimate is None:
        raise ValueError("shot has no interface estimate")
    y = result.interface_estimate
    f, f1, f2 = result.traj(y)
    if alpha is None:
        alpha = similarity_constant(n)
    f3 = profile_rhs(n, eps, np.array([f, f1, f2]), y, alpha)[2]
    flux = (eps * eps + f * f) ** (0.5 * n) * f3
    return InterfaceConditions(y=y, height=float(f), slope=float(f1), flux=float(flux))
