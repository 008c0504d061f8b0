"""Experiment orchestration: sweeps, datasets and artifact writers."""

from .datasets import (
    cubic_datasets,
    n3_family_dataset,
    n4_scan_dataset,
    profile_datasets,
    reproduce_all,
)
from .output import (
    format_value,
    trajectory_rows,
    write_json,
    write_rows_csv,
    write_sidecar,
    write_trajectory_csv,
)
from .sweep import SweepKind, SweepRow, default_values, run_sweep, write_sweep

__all__ = [
    "cubic_datasets", "n3_family_dataset", "n4_scan_dataset", "profile_datasets", "reproduce_all",
    "format_value", "trajectory_rows", "write_json", "write_rows_csv", "write_sidecar",
    "write_trajectory_csv",
    "SweepKind", "SweepRow", "default_values", "run_sweep", "write_sweep",
]
