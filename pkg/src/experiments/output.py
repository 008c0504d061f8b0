"""Deterministic CSV and JSON writers for run artifacts.

Data files carry no timestamps; floats are printed as their shortest
round-trip representation so identical runs give byte-identical files.
Run metadata goes to a JSON sidecar next to each data file.
"""

import csv
import json
import logging
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np

from ..config import RunConfig, config_echo
from ..solver import Trajectory

logger = logging.getLogger(__name__)

TRAJECTORY_COLUMNS = ("y", "f", "f1", "f2", "event")


def format_value(value: Any) -> str:
    """Text for one CSV cell."""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if value is None:
        return ""
    return str(value)


def write_rows_csv(path: Path, columns: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
    """Write a header and rows with a fixed column order."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([format_value(v) for v in row])
    logger.info(f"wrote {path}")
    return path


def trajectory_rows(traj: Trajectory, resample: int | None = None) -> list[list[Any]]:
    """Rows ``t, x0, x1, x2, event`` for nodes (or a uniform grid) and events."""
    if resample:
        ts = np.linspace(traj.t[0], traj.t[-1], resample)
        states = traj.sample(ts)
    else:
        ts, states = traj.t, traj.y
    rows: list[tuple[float, int, list[Any]]] = [
        (float(t), 0, [float(t), *map(float, s), ""]) for t, s in zip(ts, states)
    ]
    rows += [(float(e.t), 1, [float(e.t), *map(float, e.state), e.name]) for e in traj.events]
    direction = traj.direction
    rows.sort(key=lambda r: (direction * r[0], r[1]))
    return [r[2] for r in rows]


def write_trajectory_csv(
    path: Path,
    traj: Trajectory,
    resample: int | None = None,
    columns: Sequence[str] = TRAJECTORY_COLUMNS,
) -> Path:
    """Trajectory as ``y,f,f1,f2,event``; event rows name the event."""
    return write_rows_csv(path, columns, trajectory_rows(traj, resample))


def write_json(path: Path, data: dict[str, Any]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(_plain(data), f, sort_keys=True, indent=2)
        f.write("\n")
    logger.info(f"wrote {path}")
    return path


def write_sidecar(data_path: Path, config: RunConfig, metadata: dict[str, Any]) -> Path:
    """JSON next to ``data_path`` with the config echo and run metadata."""
    payload = {"config": config_echo(config), "run": metadata}
    return write_json(Path(data_path).with_suffix(".json"), payload)


def _plain(value: Any) -> Any:
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_plain(v) for v in value.tolist()]
    if isinstance(value, (np.bool_,)):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if np.isfinite(value) else repr(value)
    if isinstance(value, Path):
        return str(value)
    return value
