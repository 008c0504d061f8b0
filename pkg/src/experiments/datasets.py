"""Plot-ready datasets for the published profile, scan and cubic graphs.

Each dataset is a descriptively named CSV plus a JSON sidecar. Nothing is
plotted here.
"""

import logging
from pathlib import Path

import numpy as np

from ..config import RunConfig
from ..similarity import (
    CubicForm,
    ProfileProblem,
    default_mu_bracket,
    find_mu,
    hn,
    shoot,
)
from ..solver import IntegratorConfig, Trajectory
from .output import trajectory_rows, write_rows_csv, write_sidecar, write_trajectory_csv

logger = logging.getLogger(__name__)

# Reported shooting parameters reproduced as single shots
REPORTED_SHOTS = {
    1.75: -0.434097009,
    1.75987: -0.435513146293,
}
CRITICAL_EXPONENTS = (1.7, 1.8, 2.0)
N3_FAMILY_OFFSETS = (-0.2, -0.1, 0.0, 0.1, 0.2)
CUBIC_EXPONENTS = (2.0, 1.8, 1.7)
NEAR_INTERFACE_WIDTH = 0.2


def _tag(n: float) -> str:
    return f"n{n:g}"


def _near_interface(traj: Trajectory, y0: float) -> tuple[float, float] | None:
    lo = max(float(traj.t[0]), y0 - NEAR_INTERFACE_WIDTH)
    hi = min(traj.t_final, y0)
    return None if hi <= lo else (lo, hi)


def _write_window_csv(path: Path, traj: Trajectory, lo: float, hi: float, samples: int) -> Path:
    ys = np.linspace(lo, hi, samples)
    states = traj.sample(ys)
    rows = [[float(y), *map(float, s), ""] for y, s in zip(ys, states)]
    rows += [[float(e.t), *map(float, e.state), e.name] for e in traj.events if lo <= e.t <= hi]
    rows.sort(key=lambda r: (r[0], r[4] != ""))
    return write_rows_csv(path, ("y", "f", "f1", "f2", "event"), rows)


def profile_datasets(
    config: RunConfig, out_dir: Path, mu_tol: float | None = None
) -> list[Path]:
    """Forward profiles: reported shots and critical shots, global and near the interface."""
    cfg = config.integrator.to_integrator_config()
    mu_tol = mu_tol or config.profile.mu_tol
    samples = config.output.resample or 2000
    paths = []

    for n, mu in REPORTED_SHOTS.items():
        result = shoot(config.profile.to_problem(n), mu, cfg)
        path = write_trajectory_csv(out_dir / f"profile_{_tag(n)}_reported_shot.csv", result.traj)
        write_sidecar(path, config, {"n": n, "mu": mu, "outcome": result.outcome.value,
                                     "zeros": list(result.zeros), "steps": result.n_steps})
        paths.append(path)

    for n in CRITICAL_EXPONENTS:
        problem = config.profile.to_problem(n)
        lo, hi = config.profile.mu_bracket or default_mu_bracket(n)
        critical = find_mu(problem, lo, hi, mu_tol, cfg, config.profile.interface_window)
        for side, result in (("low", critical.result_low), ("high", critical.result_high)):
            path = write_trajectory_csv(
                out_dir / f"profile_{_tag(n)}_critical_{side}_global.csv", result.traj
            )
            paths.append(path)
            window = _near_interface(result.traj, critical.y0)
            if window is not None:
                w_lo, w_hi = window
                paths.append(_write_window_csv(
                    out_dir / f"profile_{_tag(n)}_critical_{side}_near_interface.csv",
                    result.traj, w_lo, w_hi, samples,
                ))
        write_sidecar(
            out_dir / f"profile_{_tag(n)}_critical.json",
            config,
            {"n": n, "mu_star": critical.mu_star, "bracket_width": critical.bracket_width,
             "y0": critical.y0, "zeros_near_interface": list(critical.zeros_near_interface)},
        )
    return paths


def _family_rows(problem: ProfileProblem, mus: list[float], cfg: IntegratorConfig) -> list[list]:
    rows = []
    for mu in mus:
        result = shoot(problem, mu, cfg)
        rows += [[mu, *row] for row in trajectory_rows(result.traj)]
    return rows


def n3_family_dataset(config: RunConfig, out_dir: Path, mu_tol: float | None = None) -> Path:
    """Critical n = 3 shot and neighbours offset in mu."""
    cfg = config.integrator.to_integrator_config()
    problem = config.profile.to_problem(3.0)
    lo, hi = config.profile.mu_bracket or default_mu_bracket(3.0)
    critical = find_mu(problem, lo, hi, mu_tol or config.profile.mu_tol, cfg)
    mus = [critical.mu_star + d for d in N3_FAMILY_OFFSETS]
    path = write_rows_csv(
        out_dir / "profile_n3_shot_family.csv",
        ("mu", "y", "f", "f1", "f2", "event"),
        _family_rows(problem, mus, cfg),
    )
    write_sidecar(path, config, {"n": 3.0, "mu_star": critical.mu_star, "y0": critical.y0, "mus": mus})
    return path


def n4_scan_dataset(config: RunConfig, out_dir: Path) -> Path:
    """n = 4 shots over the configured mu list."""
    cfg = config.integrator.to_integrator_config()
    problem = config.profile.to_problem(4.0)
    mus = list(config.special.n4_mus)
    path = write_rows_csv(
        out_dir / "nonexistence_n4_scan.csv",
        ("mu", "y", "f", "f1", "f2", "event"),
        _family_rows(problem, mus, cfg),
    )
    write_sidecar(path, config, {"n": 4.0, "mus": mus})
    return path


def cubic_datasets(out_dir: Path, samples: int = 401) -> list[Path]:
    """``H_n(l)`` on ``l`` in [1.5, 3] for the reported exponents."""
    ls = np.linspace(1.5, 3.0, samples)
    paths = []
    for n in CUBIC_EXPONENTS:
        rows = [[float(l), hn(n, float(l), CubicForm.SCALED)] for l in ls]
        paths.append(write_rows_csv(out_dir / f"characteristic_cubic_{_tag(n)}.csv", ("l", "hn"), rows))
    return paths


def reproduce_all(config: RunConfig, out_dir: Path, mu_tol: float | None = None) -> list[Path]:
    """Every dataset; returns the data file paths."""
    out_dir = Path(out_dir)
    paths = cubic_datasets(out_dir)
    paths += profile_datasets(config, out_dir, mu_tol)
    paths.append(n3_family_dataset(config, out_dir, mu_tol))
    paths.append(n4_scan_dataset(config, out_dir))
    logger.info(f"wrote {len(paths)} datasets to {out_dir}")
    return paths
