"""Configuration management for the thin-film profile toolkit."""

import os
from pathlib import Path

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from .errors import ConfigInvalid
from .similarity import OscProblem, ProfileProblem
from .solver import IntegratorConfig

OUTPUT_DIR_ENV = "TFE_OUTPUT_DIR"


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


class IntegratorSettings(_Section):
    """Tolerances and limits of the adaptive integrator."""

    rtol: float = Field(default=1e-12, gt=0)
    atol: float = Field(default=1e-12, gt=0)
    h_init: float | None = Field(default=None, gt=0)
    h_min: float | None = Field(default=None, gt=0)
    max_steps: int = Field(default=2_000_000, gt=0)

    def to_integrator_config(self) -> IntegratorConfig:
        return IntegratorConfig(
            rtol=self.rtol,
            atol=self.atol,
            h_init=self.h_init,
            h_min=self.h_min,
            max_steps=self.max_steps,
        )


class OscillationIntegratorSettings(IntegratorSettings):
    """Integrator settings for long oscillatory-component runs."""

    rtol: float = Field(default=1e-10, gt=0)
    atol: float = Field(default=1e-10, gt=0)


class ProfileSettings(_Section):
    """Forward shooting configuration."""

    eps: float = Field(default=1e-11, gt=0)
    y_max: float = Field(default=4.0, gt=0)
    blowup_f: float = Field(default=1e3, gt=1)
    undershoot_margin: float = Field(default=1e-3, gt=0)
    slope_cap: float = Field(default=1e3, gt=0)
    zero_resolution: float = Field(default=1e-7, gt=0)
    mu_tol: float = Field(default=1e-12, gt=0)
    interface_window: float = Field(default=0.2, gt=0)
    mu_bracket: tuple[float, float] | None = None

    def to_problem(self, n: float) -> ProfileProblem:
        return ProfileProblem(
            n=n,
            eps=self.eps,
            y_max=self.y_max,
            blowup_f=self.blowup_f,
            undershoot_margin=self.undershoot_margin,
            slope_cap=self.slope_cap,
            zero_resolution=self.zero_resolution,
        )


class OscillationSettings(_Section):
    """Oscillatory-component classification configuration."""

    eps: float = Field(default=1e-8, gt=0)
    s_transient: float = Field(default=200.0, ge=0)
    s_observe: float = Field(default=400.0, gt=0)
    seed_step: float = Field(default=1e-3, gt=0)
    escape_factor: float = Field(default=100.0, gt=1)
    max_retries: int = Field(default=3, ge=0)
    n_tol: float = Field(default=5e-3, gt=0)
    bracket: tuple[float, float] = (1.7, 1.8)

    def to_problem(self, n: float) -> OscProblem:
        return OscProblem(
            n=n,
            eps=self.eps,
            s_transient=self.s_transient,
            s_observe=self.s_observe,
            seed_step=self.seed_step,
            escape_factor=self.escape_factor,
        )


class ExpansionSettings(_Section):
    """Interface expansion and backward shooting configuration."""

    eps: float = Field(default=1e-11, gt=0)
    delta: float = Field(default=1e-3, ge=1e-4, le=1e-1)
    d_extent: float = Field(default=3.0, gt=0)
    d_count: int = Field(default=20, gt=0)
    s0_count: int = Field(default=64, gt=1)


class SpecialSettings(_Section):
    """Boundary-exponent configuration."""

    log_window: tuple[float, float] = (1e-3, 1e-1)
    cube_window: tuple[float, float] = (1e-5, 1e-3)
    n4_mus: list[float] = Field(default_factory=lambda: [-2.0, -10.0, -100.0, -1000.0])

    @field_validator("log_window", "cube_window")
    @classmethod
    def _window_inside(cls, v: tuple[float, float]) -> tuple[float, float]:
        if not 0 < v[0] < v[1] < 0.2:
            raise ValueError("window must satisfy 0 < lo < hi < 0.2")
        return v

    @field_validator("n4_mus")
    @classmethod
    def _negative(cls, v: list[float]) -> list[float]:
        if any(mu >= 0 for mu in v):
            raise ValueError("n4_mus must all be negative")
        return v


class OutputSettings(_Section):
    """Artifact output configuration."""

    directory: Path = Path("./output")
    workers: int = Field(default=1, ge=1)
    resample: int | None = Field(default=None, gt=1)


class RunConfig(BaseModel):
    """Main run configuration."""

    model_config = ConfigDict(extra="forbid")

    integrator: IntegratorSettings = Field(default_factory=IntegratorSettings)
    oscillation_integrator: OscillationIntegratorSettings = Field(
        default_factory=OscillationIntegratorSettings
    )
    profile: ProfileSettings = Field(default_factory=ProfileSettings)
    oscillation: OscillationSettings = Field(default_factory=OscillationSettings)
    expansion: ExpansionSettings = Field(default_factory=ExpansionSettings)
    special: SpecialSettings = Field(default_factory=SpecialSettings)
    output: OutputSettings = Field(default_factory=OutputSettings)


def _apply_env(config: RunConfig) -> RunConfig:
    override = os.environ.get(OUTPUT_DIR_ENV)
    if override:
        config.output.directory = Path(override)
    return config


def load_config(config_path: Path | str | None = None) -> RunConfig:
    """Load configuration from YAML file.

    Args:
        config_path: Path to config file. Defaults to ./config.yaml

    Returns:
        RunConfig instance with loaded or default values

    Raises:
        FileNotFoundError: An explicit path does not exist.
        ConfigInvalid: Unknown keys or invalid values, collapsed to one line.
    """
    if config_path is None:
        config_path = Path("config.yaml")
        if not config_path.exists():
            return _apply_env(RunConfig())
    else:
        config_path = Path(config_path)
        if not config_path.exists():
            raise FileNotFoundError(f"config file not found: {config_path}")

    with open(config_path, "r", encoding="utf-8") as f:
        data = yaml.safe_load(f) or {}
    try:
        config = RunConfig(**data)
    except ValidationError as e:
        raise ConfigInvalid(f"{config_path}: {describe_errors(e)}") from None
    return _apply_env(config)


def describe_errors(error: ValidationError) -> str:
    """One-line summary of a pydantic error: ``section.key: message`` joined by ``; ``."""
    parts = []
    for item in error.errors():
        where = ".".join(str(part) for part in item["loc"]) or "<root>"
        parts.append(f"{where}: {' '.join(str(item['msg']).split())}")
    return "; ".join(parts)


def save_config(config: RunConfig, config_path: Path | str | None = None) -> None:
    """Save configuration to YAML file.

    Args:
        config: RunConfig instance to save
        config_path: Path to save to. Defaults to ./config.yaml
    """
    if config_path is None:
        config_path = Path("config.yaml")
    else:
        config_path = Path(config_path)

    with open(config_path, "w", encoding="utf-8") as f:
        yaml.dump(config_echo(config), f, default_flow_style=False, sort_keys=False)


def config_echo(config: RunConfig) -> dict:
    """Plain-data dump of the config (paths as strings, tuples as lists)."""
    return config.model_dump(mode="json")

