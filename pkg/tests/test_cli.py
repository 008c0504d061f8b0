"""Tests for the command-line entry point."""

import json

import pytest

from src.config import OUTPUT_DIR_ENV
from src.main import EXIT_FAILURE, EXIT_OK, EXIT_USAGE, build_parser, main


@pytest.fixture(autouse=True)
def isolated(tmp_path, monkeypatch):
    """Run every command in an empty directory."""
    monkeypatch.chdir(tmp_path)
    monkeypatch.delenv(OUTPUT_DIR_ENV, raising=False)


class TestParser:
    """Test argument parsing."""

    def test_every_command_registered(self):
        """All subcommands parse."""
        parser = build_parser()
        for argv in (
            ["shoot", "--n", "2", "--mu", "-0.5"],
            ["findmu", "--n", "2"],
            ["osc", "--n", "1"],
            ["nh"],
            ["cubic", "--n", "2"],
            ["expand", "--n", "2", "--D", "1"],
            ["backshoot", "--n", "2", "--s0", "0.3"],
            ["scan-d", "--n", "2"],
            ["scan-s0", "--n", "1.7"],
            ["log3"],
            ["noexist4", "--mus", "-2", "-10"],
            ["sweep", "--kind", "n"],
            ["repro-figs"],
        ):
            args = parser.parse_args(argv)
            assert args.command == argv[0]

    def test_global_flags(self):
        """Shared flags are accepted after the subcommand."""
        args = build_parser().parse_args(["cubic", "--n", "2", "--rtol", "1e-8", "-v"])
        assert args.rtol == 1e-8
        assert args.verbose


class TestExitCodes:
    """Test exit codes."""

    def test_cubic_succeeds(self):
        """The cubic root at n = 2 is printed."""
        assert main(["cubic", "--n", "2"]) == EXIT_OK

    def test_missing_command(self):
        """No subcommand is a usage error."""
        assert main([]) == EXIT_USAGE

    def test_unknown_option(self):
        """Unknown flags are usage errors."""
        assert main(["cubic", "--n", "2", "--bogus"]) == EXIT_USAGE

    def test_help(self):
        """--help exits cleanly."""
        assert main(["--help"]) == EXIT_OK

    def test_out_of_range_exponent(self):
        """n outside (3/2, 3) is a computation error."""
        assert main(["cubic", "--n", "1.0"]) == EXIT_FAILURE

    def test_invalid_config(self, tmp_path):
        """Unknown config keys are usage errors."""
        config = tmp_path / "bad.yaml"
        config.write_text("profile:\n  y_maximum: 5\n")
        assert main(["cubic", "--n", "2", "--config", str(config)]) == EXIT_USAGE

    def test_missing_config(self, tmp_path):
        """An explicit config path must exist."""
        assert main(["cubic", "--n", "2", "--config", str(tmp_path / "none.yaml")]) == EXIT_USAGE

    def test_invalid_override(self):
        """Flag values go through the same validation."""
        assert main(["cubic", "--n", "2", "--workers", "0"]) == EXIT_USAGE


class TestArtifacts:
    """Test files written by commands."""

    def test_expand_writes_csv_and_sidecar(self, tmp_path):
        """Relative --out lands in the output directory."""
        out_dir = tmp_path / "results"
        code = main(["expand", "--n", "2", "--D", "1", "--out", "series.csv",
                     "--out-dir", str(out_dir), "-q"])
        assert code == EXIT_OK
        lines = (out_dir / "series.csv").read_text().splitlines()
        assert lines[0] == "z,f,f1,f2,f3"
        assert len(lines) == 102
        sidecar = json.loads((out_dir / "series.json").read_text())
        assert sidecar["run"]["D"] == 1.0
        assert sidecar["config"]["output"]["directory"] == str(out_dir)

    def test_env_output_directory(self, tmp_path, monkeypatch):
        """The environment variable sets the output directory."""
        monkeypatch.setenv(OUTPUT_DIR_ENV, str(tmp_path / "env_out"))
        assert main(["expand", "--n", "2", "--out", "series.csv", "-q"]) == EXIT_OK
        assert (tmp_path / "env_out" / "series.csv").exists()

    def test_flag_beats_environment(self, tmp_path, monkeypatch):
        """--out-dir wins over the environment variable."""
        monkeypatch.setenv(OUTPUT_DIR_ENV, str(tmp_path / "env_out"))
        code = main(["expand", "--n", "2", "--out", "series.csv", "--out-dir",
                     str(tmp_path / "flag_out"), "-q"])
        assert code == EXIT_OK
        assert (tmp_path / "flag_out" / "series.csv").exists()
        assert not (tmp_path / "env_out").exists()

    def test_shoot_output_is_byte_identical(self, tmp_path):
        """Two identical shoot runs write byte-identical data and sidecar files."""
        out_dir = tmp_path / "runs"
        argv = ["shoot", "--n", "2", "--mu", "-1", "--out", "shot.csv",
                "--out-dir", str(out_dir), "-q"]
        assert main(argv) == EXIT_OK
        first = {p.name: p.read_bytes() for p in out_dir.iterdir()}
        assert main(argv) == EXIT_OK
        second = {p.name: p.read_bytes() for p in out_dir.iterdir()}
        assert set(first) == {"shot.csv", "shot.json"}
        assert first == second
