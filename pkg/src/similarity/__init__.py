"""Similarity profiles: forward shooting, oscillatory component, interface expansions."""

from .profile import (
    ClosestApproach,
    CriticalShoot,
    Outcome,
    ProfileProblem,
    ShootResult,
    classify,
    default_mu_bracket,
    find_mu,
    profile_rhs,
    scaled_initial_state,
    similarity_constant,
    shoot,
    sign_changes_near_interface,
)
from .oscillation import (
    AttractorKind,
    AttractorReport,
    OscProblem,
    PeriodicOrbit,
    classify_attractor,
    default_initial_state,
    equilibrium_spectrum,
    equilibrium_value,
    extract_orbit,
    find_nh,
    osc_rhs,
    run_osc,
)
from .expansion import (
    BackshootState,
    CubicForm,
    DScan,
    ExpansionParams,
    InterfaceConditions,
    RescaledProfile,
    ResidualFit,
    S0Scan,
    admissible_window,
    b0,
    backshoot_oscillatory,
    backshoot_positive,
    backshoot_bundle,
    bundle_offset,
    bundle_row,
    default_D_grid,
    seed_floor,
    eval_expansion,
    hn,
    interface_conditions,
    residual_order,
    scan_D,
    scan_s0,
    solve_l,
)
from .special import (
    CubeLogFit,
    LogFit,
    N4Row,
    cube_logfit_n3,
    fit_cube_log,
    fit_log_linear,
    logfit_n3,
    majorant_slope_cubed,
    nonexistence_scan_n4,
)

__all__ = [
    "ClosestApproach", "CriticalShoot", "Outcome", "ProfileProblem", "ShootResult",
    "classify", "default_mu_bracket", "find_mu", "profile_rhs", "scaled_initial_state",
    "shoot", "sign_changes_near_interface", "similarity_constant",
    "AttractorKind", "AttractorReport", "OscProblem", "PeriodicOrbit",
    "classify_attractor", "default_initial_state", "equilibrium_spectrum",
    "equilibrium_value", "extract_orbit", "find_nh", "osc_rhs", "run_osc",
    "BackshootState", "CubicForm", "DScan", "ExpansionParams", "InterfaceConditions",
    "RescaledProfile", "ResidualFit", "S0Scan", "admissible_window", "b0",
    "backshoot_bundle", "backshoot_oscillatory", "backshoot_positive", "bundle_offset",
    "bundle_row", "default_D_grid", "eval_expansion", "hn", "interface_conditions",
    "residual_order", "scan_D", "scan_s0", "seed_floor", "solve_l",
    "CubeLogFit", "LogFit", "N4Row", "cube_logfit_n3", "fit_cube_log", "fit_log_linear",
    "logfit_n3", "majorant_slope_cubed", "nonexistence_scan_n4",
]
