"""Tests for configuration management."""

import tempfile
from pathlib import Path

import pytest
from pydantic import ValidationError

from src.config import (
    OUTPUT_DIR_ENV,
    ExpansionSettings,
    IntegratorSettings,
    OscillationIntegratorSettings,
    OscillationSettings,
    OutputSettings,
    ProfileSettings,
    RunConfig,
    SpecialSettings,
    config_echo,
    describe_errors,
    load_config,
    save_config,
)
from src.errors import ConfigInvalid


class TestIntegratorSettings:
    """Test integrator configuration."""

    def test_default_values(self):
        """Test default integrator tolerances."""
        config = IntegratorSettings()
        assert config.rtol == 1e-12
        assert config.atol == 1e-12
        assert config.h_init is None
        assert config.max_steps == 2_000_000

    def test_oscillation_defaults_are_looser(self):
        """Oscillatory runs default to 1e-10."""
        config = OscillationIntegratorSettings()
        assert config.rtol == 1e-10
        assert config.atol == 1e-10

    def test_to_integrator_config(self):
        """Settings convert to the solver's frozen config."""
        cfg = IntegratorSettings(rtol=1e-9, atol=1e-11).to_integrator_config()
        assert cfg.rtol == 1e-9
        assert cfg.atol == 1e-11

    def test_rejects_non_positive_tolerance(self):
        """Tolerances must be positive."""
        with pytest.raises(ValidationError):
            IntegratorSettings(rtol=0.0)


class TestProfileSettings:
    """Test forward shooting configuration."""

    def test_default_values(self):
        """Test default shooting parameters."""
        config = ProfileSettings()
        assert config.eps == 1e-11
        assert config.y_max == 4.0
        assert config.mu_tol == 1e-12
        assert config.mu_bracket is None

    def test_to_problem(self):
        """Problem carries the exponent and the configured thresholds."""
        problem = ProfileSettings(y_max=6.0).to_problem(1.8)
        assert problem.n == 1.8
        assert problem.y_max == 6.0
        assert problem.eps == 1e-11


class TestOscillationSettings:
    """Test oscillatory-component configuration."""

    def test_default_values(self):
        """Test default observation windows and bracket."""
        config = OscillationSettings()
        assert config.s_transient == 200.0
        assert config.eps == 1e-8
        assert config.s_observe == 400.0
        assert config.max_retries == 3
        assert config.bracket == (1.7, 1.8)

    def test_to_problem(self):
        """Problem carries the exponent."""
        problem = OscillationSettings(s_observe=100.0).to_problem(1.5)
        assert problem.n == 1.5
        assert problem.s_total == 300.0


class TestExpansionSettings:
    """Test backward shooting configuration."""

    def test_default_delta(self):
        """Default seed offset."""
        assert ExpansionSettings().delta == 1e-3

    @pytest.mark.parametrize("delta", [1e-5, 0.5])
    def test_delta_out_of_range(self, delta):
        """delta must stay within [1e-4, 1e-1]."""
        with pytest.raises(ValidationError):
            ExpansionSettings(delta=delta)


class TestSpecialSettings:
    """Test boundary-exponent configuration."""

    def test_default_values(self):
        """Test default fit window and mu list."""
        config = SpecialSettings()
        assert config.log_window == (1e-3, 1e-1)
        assert config.cube_window == (1e-5, 1e-3)
        assert config.n4_mus == [-2.0, -10.0, -100.0, -1000.0]

    def test_window_must_be_ordered(self):
        """Window bounds must increase and stay below 0.2."""
        with pytest.raises(ValidationError):
            SpecialSettings(log_window=(1e-2, 1e-4))
        with pytest.raises(ValidationError):
            SpecialSettings(log_window=(1e-3, 0.5))

    def test_mus_must_be_negative(self):
        """Positive mu is rejected."""
        with pytest.raises(ValidationError):
            SpecialSettings(n4_mus=[-1.0, 2.0])


class TestRunConfig:
    """Test main run configuration."""

    def test_default_config(self):
        """Test default config creation."""
        config = RunConfig()
        assert isinstance(config.integrator, IntegratorSettings)
        assert isinstance(config.profile, ProfileSettings)
        assert isinstance(config.oscillation, OscillationSettings)
        assert isinstance(config.output, OutputSettings)
        assert config.output.directory == Path("./output")
        assert config.output.workers == 1

    def test_unknown_key_rejected(self):
        """Unknown keys are configuration errors."""
        with pytest.raises(ValidationError):
            RunConfig(**{"profile": {"y_maximum": 5.0}})
        with pytest.raises(ValidationError):
            RunConfig(**{"plotting": {}})

    def test_echo_is_plain_data(self):
        """Echo converts paths and tuples to JSON-friendly values."""
        echo = config_echo(RunConfig())
        assert echo["output"]["directory"] == "output"
        assert echo["oscillation"]["bracket"] == [1.7, 1.8]


class TestConfigFileOperations:
    """Test config file save/load operations."""

    def test_save_and_load_config(self):
        """Test saving and loading configuration."""
        with tempfile.TemporaryDirectory() as tmpdir:
            config_path = Path(tmpdir) / "test_config.yaml"

            config = RunConfig(
                integrator=IntegratorSettings(rtol=1e-10),
                profile=ProfileSettings(y_max=5.0),
            )

            save_config(config, config_path)
            assert config_path.exists()

            loaded = load_config(config_path)
            assert loaded.integrator.rtol == 1e-10
            assert loaded.profile.y_max == 5.0

    def test_load_nonexistent_config(self):
        """An explicit missing path is an error."""
        with pytest.raises(FileNotFoundError):
            load_config(Path("/nonexistent/path/config.yaml"))

    def test_partial_yaml(self, tmp_path):
        """Missing sections fall back to defaults."""
        config_path = tmp_path / "partial.yaml"
        config_path.write_text("expansion:\n  delta: 0.01\n")
        loaded = load_config(config_path)
        assert loaded.expansion.delta == 0.01
        assert loaded.integrator.rtol == 1e-12

    def test_config_yaml_format(self, tmp_path):
        """Test that saved config is valid YAML."""
        config_path = tmp_path / "test.yaml"
        save_config(RunConfig(), config_path)
        content = config_path.read_text()
        assert "integrator:" in content
        assert "profile:" in content
        assert "directory: output" in content

    def test_env_overrides_output_directory(self, tmp_path, monkeypatch):
        """The environment variable replaces the file's output directory."""
        config_path = tmp_path / "env.yaml"
        config_path.write_text("output:\n  directory: ./from_file\n")
        monkeypatch.setenv(OUTPUT_DIR_ENV, str(tmp_path / "from_env"))
        loaded = load_config(config_path)
        assert loaded.output.directory == tmp_path / "from_env"

    def test_invalid_file_is_one_line(self, tmp_path):
        """Every validation problem ends up on a single line naming the key."""
        config_path = tmp_path / "bad.yaml"
        config_path.write_text("profile:\n  y_maximum: 5\n  eps: -1\n")
        with pytest.raises(ConfigInvalid) as excinfo:
            load_config(config_path)
        message = str(excinfo.value)
        assert "\n" not in message
        assert "profile.y_maximum" in message
        assert "profile.eps" in message
        assert message.startswith(str(config_path))

    def test_describe_errors(self):
        """Locations are dotted and problems joined by semicolons."""
        with pytest.raises(ValidationError) as excinfo:
            RunConfig(**{"output": {"workers": 0}, "plotting": {}})
        summary = describe_errors(excinfo.value)
        assert "output.workers" in summary
        assert "plotting" in summary
        assert summary.count("; ") == 1
