"""Adaptive ODE integration with dense output and event location."""

from .ivp import (
    Direction,
    EventRecord,
    EventSpec,
    IntegratorConfig,
    TerminationStatus,
    Trajectory,
    dense_eval,
    integrate,
    integrate_with_events,
)

__all__ = [
    "Direction", "EventRecord", "EventSpec", "IntegratorConfig",
    "TerminationStatus", "Trajectory",
    "dense_eval", "integrate", "integrate_with_events",
]
