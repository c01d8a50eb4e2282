"""Tests for core app."""

import json
import logging

import numpy as np
import pytest
from django.conf import settings
from django.core.management import get_commands, load_command_class
from pydantic import BaseModel, Field

from apps.core.commands import EXIT_OK, EXIT_RUNTIME, EXIT_USAGE, WorkbenchCommand, error_line
from apps.core.exceptions import ConfigError, DataError, StorageError, WorkbenchError
from apps.core.logging import CommandContextFilter, JsonFormatter
from apps.core.rng import STREAM_DROPOUT, STREAM_INIT, derive_seed, make_rng
from apps.core.storage import read_archive, write_archive
from apps.core.utils import build_config, load_toml_table
from workbench.settings.base import build_logging


class TestExceptions:
    """Tests for the error hierarchy."""

    def test_default_code(self):
        """Test subclasses carry their stable code."""
        assert DataError("x").code == "DATA"
        assert ConfigError("x").code == "CONFIG"

    def test_explicit_code_and_details(self):
        """Test code and details can be overridden."""
        exc = WorkbenchError("broken", code="CUSTOM", details={"row": 3})
        assert exc.code == "CUSTOM"
        assert exc.details == {"row": 3}
        assert str(exc) == "broken"


class TestRng:
    """Tests for seeded generators."""

    def test_same_seed_same_draws(self):
        """Test equal seeds give equal streams."""
        assert np.array_equal(make_rng(7).random(5), make_rng(7).random(5))

    def test_streams_are_independent(self):
        """Test different stream tags give different draws."""
        a = make_rng(7, STREAM_INIT).random(5)
        b = make_rng(7, STREAM_DROPOUT).random(5)
        assert not np.array_equal(a, b)

    def test_derive_seed(self):
        """Test per-item seeds are seed + index."""
        assert derive_seed(42, 3) == 45


class TestArchive:
    """Tests for versioned npz artifacts."""

    def test_round_trip(self, tmp_path):
        """Test header and arrays survive exactly."""
        values = np.array([[0.1, 1e-300], [np.pi, -2.5]])
        path = write_archive(tmp_path / "a.npz", "thing", 1, {"note": "x"}, {"values": values})
        header, arrays = read_archive(path, "thing", (1,))
        assert header["note"] == "x"
        assert header["format"] == "thing"
        assert np.array_equal(arrays["values"], values)

    def test_wrong_kind(self, tmp_path):
        """Test reading as another kind fails."""
        path = write_archive(tmp_path / "a.npz", "thing", 1, {}, {"v": np.zeros(2)})
        with pytest.raises(StorageError):
            read_archive(path, "other", (1,))

    def test_unsupported_version(self, tmp_path):
        """Test version checks."""
        path = write_archive(tmp_path / "a.npz", "thing", 2, {}, {"v": np.zeros(2)})
        with pytest.raises(StorageError):
            read_archive(path, "thing", (1,))

    def test_missing_file(self, tmp_path):
        """Test a missing file is a StorageError."""
        with pytest.raises(StorageError):
            read_archive(tmp_path / "nope.npz", "thing", (1,))

    def test_reserved_name(self, tmp_path):
        """Test the header name cannot be used for an array."""
        with pytest.raises(StorageError):
            write_archive(tmp_path / "a.npz", "thing", 1, {}, {"header": np.zeros(1)})


class Sample(BaseModel):
    size: int = Field(default=1, gt=0)


class TestConfigHelpers:
    """Tests for build_config and TOML loading."""

    def test_build_config(self):
        """Test valid data builds the model."""
        assert build_config(Sample, size=3).size == 3

    def test_build_config_invalid(self):
        """Test validation errors become ConfigError."""
        with pytest.raises(ConfigError) as exc_info:
            build_config(Sample, size=0)
        assert "size" in exc_info.value.message

    def test_load_toml_table(self, tmp_path):
        """Test one table is returned."""
        path = tmp_path / "run.toml"
        path.write_text("[lstm]\nhidden = 64\n", encoding="utf-8")
        assert load_toml_table(path, "lstm") == {"hidden": 64}
        assert load_toml_table(path, "cnn") == {}

    def test_load_toml_malformed(self, tmp_path):
        """Test parse errors become ConfigError."""
        path = tmp_path / "run.toml"
        path.write_text("[lstm\nhidden = ", encoding="utf-8")
        with pytest.raises(ConfigError):
            load_toml_table(path, "lstm")


class TestLogging:
    """Tests for the JSON formatter and command filter."""

    def make_record(self, **attrs):
        record = logging.LogRecord(
            "apps.test", logging.INFO, __file__, 10, "hello %s", ("x",), None
        )
        for key, value in attrs.items():
            setattr(record, key, value)
        return record

    def test_json_fields(self):
        """Test the formatter emits one JSON object with the core fields."""
        payload = json.loads(JsonFormatter().format(self.make_record(extra={"epoch": 1})))
        assert payload["message"] == "hello x"
        assert payload["level"] == "INFO"
        assert payload["logger"] == "apps.test"
        assert payload["extra"] == {"epoch": 1}

    def test_command_filter(self):
        """Test the running subcommand is stamped on records."""
        record = self.make_record()
        assert CommandContextFilter("build_map").filter(record)
        assert json.loads(JsonFormatter().format(record))["command"] == "build_map"

    def test_logging_config_levels(self):
        """Test the apps logger follows the configured level."""
        config = build_logging("DEBUG", "simple")
        assert config["loggers"]["apps"]["level"] == "DEBUG"
        assert config["handlers"]["console"]["formatter"] == "simple"
        assert config["handlers"]["console"]["stream"] == "ext://sys.stderr"


class TestSettings:
    """Tests for the Django settings module."""

    def test_installed_apps(self):
        """Test every workbench app is installed and the seed is set."""
        assert "apps.pipelines" in settings.INSTALLED_APPS
        assert settings.DEFAULT_SEED >= 0


class TestCommandLine:
    """Tests for subcommand discovery and exit codes."""

    def test_discovers_every_subcommand(self):
        """Test all subcommands are registered with Django."""
        commands = get_commands()
        assert {
            "ingest",
            "validate",
            "filter",
            "build_map",
            "rasterize",
            "gen_traces",
            "make_dataset",
            "train_lstm",
            "train_cnn",
            "estimate",
            "evaluate",
            "render_images",
            "synth_db",
            "sweep",
            "annotate",
        } <= set(commands)

    def test_seed_flag_only_on_stochastic(self):
        """Test --seed is added to stochastic commands only."""
        gen_traces = load_command_class("apps.mobility", "gen_traces")
        ingest = load_command_class("apps.fingerprints", "ingest")
        assert isinstance(gen_traces, WorkbenchCommand)
        seeded = gen_traces.create_parser("manage.py", "gen_traces").parse_args(
            ["--bed", "3x1.8", "--steps", "5", "--out", "t.csv"]
        )
        assert seeded.seed == settings.DEFAULT_SEED
        plain = ingest.create_parser("manage.py", "ingest").parse_args(["--in", "db.csv"])
        assert not hasattr(plain, "seed")

    def test_error_line(self):
        """Test quotes and newlines are flattened."""
        assert error_line("DATA", 'bad "x"\nrow') == "code=DATA message=\"bad 'x' row\""

    def test_help(self, run_command):
        """Test --help exits 0."""
        assert run_command("--help").code == EXIT_OK

    def test_subcommand_help(self, run_command):
        """Test subcommand --help exits 0."""
        assert run_command("build_map", "--help").code == EXIT_OK

    def test_hyphenated_alias(self, run_command):
        """Test hyphenated subcommand names reach the same command."""
        result = run_command("build-map", "--help")
        assert result.code == EXIT_OK
        assert "--fine-pitch" in result.out

    def test_unknown_subcommand(self, run_command):
        """Test an unknown subcommand is a usage error."""
        result = run_command("no-such-command")
        assert result.code == EXIT_USAGE
        assert "Unknown command" in result.err

    def test_unknown_flag(self, run_command):
        """Test an unknown flag is a usage error."""
        assert run_command("ingest", "--bogus").code == EXIT_USAGE

    def test_stochastic_commands_take_seed(self, run_command, tmp_path):
        """Test --seed is accepted by stochastic subcommands."""
        result = run_command(
            "gen_traces", "--bed", "3x1.8", "--steps", "5", "--seed", "3",
            "--out", tmp_path / "t.csv",
        )
        assert result.code == EXIT_OK

    def test_runtime_error_line(self, run_command, tmp_path):
        """Test runtime errors print one machine-parseable line and exit 1."""
        result = run_command(
            "build_map", "--in", tmp_path / "missing.csv", "--bed", "3x1.8",
            "--out", tmp_path / "m.npz",
        )
        assert result.code == EXIT_RUNTIME
        lines = result.err.strip().splitlines()
        assert len(lines) == 1
        assert lines[0].startswith("CommandError: code=IO ")
        assert 'message="' in lines[0]

    def test_config_error_code(self, run_command, tmp_path):
        """Test a bad bed is reported with the CONFIG code."""
        result = run_command(
            "gen_traces", "--bed", "3by2", "--steps", "5", "--out", tmp_path / "t.csv"
        )
        assert result.code == EXIT_RUNTIME
        assert result.err.startswith("CommandError: code=CONFIG ")
