"""Parameter sweeps over n, mu, D and s0.

Each point produces one ``SweepRow``. Points run in worker processes when
``workers > 1``; rows always come back in grid order.
"""

import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Callable, Sequence

import numpy as np

from ..config import RunConfig
from ..errors import OrbitMissing, ToolkitError
from ..similarity import (
    AttractorKind,
    PeriodicOrbit,
    b0,
    backshoot_oscillatory,
    bundle_row,
    classify_attractor,
    default_D_grid,
    shoot,
    solve_l,
)
from .output import write_rows_csv, write_sidecar

logger = logging.getLogger(__name__)


class SweepKind(Enum):
    """Swept parameter."""

    N = "n"
    MU = "mu"
    D = "D"
    S0 = "s0"


SUMMARY_COLUMNS: dict[SweepKind, tuple[str, ...]] = {
    SweepKind.N: ("B0", "l", "admissible", "attractor", "period", "amplitude"),
    SweepKind.MU: ("outcome", "terminal_reason", "first_zero", "closest_y", "closest_abs_f", "min_f"),
    SweepKind.D: ("delta", "f0", "slope0"),
    SweepKind.S0: ("f0", "slope0"),
}
META_COLUMNS = ("rtol", "atol", "eps", "steps")


@dataclass
class SweepRow:
    """One parameter point of a sweep.

    Attributes:
        key: Swept parameter name.
        value: Parameter value.
        summary: Summary scalars; keys fixed per sweep kind.
        meta: Tolerances, regularisation and step count.
        wall_time: Seconds spent; kept out of the CSV.
    """

    key: str
    value: float
    summary: dict[str, Any] = field(default_factory=dict)
    meta: dict[str, Any] = field(default_factory=dict)
    wall_time: float = 0.0

    def as_record(self, kind: SweepKind) -> list[Any]:
        return (
            [self.value]
            + [self.summary.get(c) for c in SUMMARY_COLUMNS[kind]]
            + [self.meta.get(c) for c in META_COLUMNS]
        )


def _n_point(n: float, config: RunConfig) -> SweepRow:
    summary: dict[str, Any] = {"B0": float("nan"), "l": float("nan"), "admissible": False}
    if 1.5 < n < 3.0:
        summary["B0"] = b0(n)
        summary["l"], summary["admissible"] = solve_l(n)
    summary.update(attractor="", period=float("nan"), amplitude=float("nan"))
    if 0 < n < 3:
        report = classify_attractor(
            config.oscillation.to_problem(n),
            config.oscillation_integrator.to_integrator_config(),
        )
        summary["attractor"] = report.kind.value
        if report.kind is AttractorKind.PERIODIC:
            summary["period"] = report.period
            summary["amplitude"] = report.amplitude
    cfg = config.oscillation_integrator
    return SweepRow(
        key="n",
        value=n,
        summary=summary,
        meta={"rtol": cfg.rtol, "atol": cfg.atol, "eps": config.oscillation.eps, "steps": 0},
    )


def _mu_point(mu: float, n: float, config: RunConfig) -> SweepRow:
    result = shoot(
        config.profile.to_problem(n), mu, config.integrator.to_integrator_config()
    )
    cfg = config.integrator
    return SweepRow(
        key="mu",
        value=mu,
        summary={
            "outcome": result.outcome.value,
            "terminal_reason": result.terminal_reason,
            "first_zero": result.zeros[0] if result.zeros else float("nan"),
            "closest_y": result.closest_approach.y,
            "closest_abs_f": result.closest_approach.abs_f,
            "min_f": result.min_f,
        },
        meta={"rtol": cfg.rtol, "atol": cfg.atol, "eps": config.profile.eps, "steps": result.n_steps},
    )


def _d_point(D: float, n: float, config: RunConfig) -> SweepRow:
    cfg = config.integrator
    row = bundle_row(n, D, config.expansion.delta, cfg.to_integrator_config(), config.expansion.eps)
    return SweepRow(
        key="D",
        value=D,
        summary={"delta": row.delta, "f0": row.f0, "slope0": row.slope0},
        meta={"rtol": cfg.rtol, "atol": cfg.atol, "eps": config.expansion.eps, "steps": 0},
    )


def _s0_point(s0: float, n: float, config: RunConfig, orbit: PeriodicOrbit | None) -> SweepRow:
    cfg = config.integrator
    state = backshoot_oscillatory(
        n, s0, config.expansion.delta, orbit, cfg.to_integrator_config(), config.expansion.eps
    )
    return SweepRow(
        key="s0",
        value=s0,
        summary={"f0": state.f_origin, "slope0": state.slope_origin},
        meta={"rtol": cfg.rtol, "atol": cfg.atol, "eps": config.expansion.eps,
              "steps": state.traj.n_steps},
    )


def _run_point(
    task: tuple[SweepKind, float, float | None, RunConfig, PeriodicOrbit | None]
) -> SweepRow:
    kind, value, n, config, orbit = task
    start = time.perf_counter()
    try:
        if kind is SweepKind.N:
            row = _n_point(value, config)
        elif kind is SweepKind.MU:
            row = _mu_point(value, n, config)
        elif kind is SweepKind.D:
            row = _d_point(value, n, config)
        else:
            row = _s0_point(value, n, config, orbit)
    except ToolkitError as e:
        logger.warning(f"{kind.value}={value}: {e}")
        row = SweepRow(key=kind.value, value=value, summary={"error": str(e)})
    row.wall_time = time.perf_counter() - start
    return row


def run_sweep(
    kind: SweepKind,
    values: Sequence[float],
    config: RunConfig,
    n: float | None = None,
    progress: Callable[[SweepRow], None] | None = None,
) -> list[SweepRow]:
    """Evaluate every grid point; ``n`` is required for mu, D and s0 sweeps."""
    if kind is not SweepKind.N and n is None:
        raise ValueError(f"a {kind.value} sweep needs n")
    orbit = _orbit(n, config) if kind is SweepKind.S0 else None
    tasks = [(kind, float(v), n, config, orbit) for v in values]
    workers = config.output.workers
    logger.info(f"sweeping {kind.value} over {len(tasks)} points with {workers} worker(s)")
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = []
            for row in pool.map(_run_point, tasks):
                rows.append(row)
                if progress:
                    progress(row)
    else:
        rows = []
        for task in tasks:
            row = _run_point(task)
            rows.append(row)
            if progress:
                progress(row)
    return rows


def default_values(kind: SweepKind, config: RunConfig, n: float | None = None) -> np.ndarray:
    """Grid used when no explicit values are given."""
    if kind is SweepKind.N:
        return np.round(np.arange(1.0, 2.95, 0.1), 10)
    if kind is SweepKind.MU:
        return np.linspace(-1.0, 0.0, 21)
    if kind is SweepKind.D:
        return default_D_grid(config.expansion.d_extent, config.expansion.d_count)
    orbit = _orbit(n, config)
    return np.linspace(0.0, orbit.period, config.expansion.s0_count, endpoint=False)


def _orbit(n: float | None, config: RunConfig) -> PeriodicOrbit:
    if n is None:
        raise ValueError("an s0 sweep needs n")
    report = classify_attractor(
        config.oscillation.to_problem(n), config.oscillation_integrator.to_integrator_config()
    )
    if report.orbit is None:
        raise OrbitMissing(
            f"no periodic orbit at n={n}; phase sweeps need n below the heteroclinic value"
        )
    return report.orbit


def write_sweep(
    path: Path, kind: SweepKind, rows: Sequence[SweepRow], config: RunConfig, n: float | None
) -> Path:
    """CSV in grid order plus a JSON sidecar with timings and errors."""
    columns = (kind.value, *SUMMARY_COLUMNS[kind], *META_COLUMNS)
    write_rows_csv(path, columns, [row.as_record(kind) for row in rows])
    write_sidecar(
        path,
        config,
        {
            "sweep": kind.value,
            "n": n,
            "points": len(rows),
            "wall_time": sum(row.wall_time for row in rows),
            "errors": {str(row.value): row.summary["error"] for row in rows if "error" in row.summary},
        },
    )
    return path
