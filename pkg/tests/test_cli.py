import json

import pytest
from click.testing import CliRunner

from hybridstream.cli import main


@pytest.fixture()
def runner():
    return CliRunner()


SMALL_ARGS = [
    "run",
    "--scenario", "none",
    "--deployment", "local",
    "--weighting", "dynamic",
    "--windows", "2",
    "--window", "count:60",
    "--fidelity", "desk",
    "--seed", "3",
    "--data", "synth",
]


class TestRunCommand:
    def test_success_exit_zero_and_files(self, runner, tmp_path):
        out = tmp_path / "run1"
        result = runner.invoke(main, SMALL_ARGS + ["--out", str(out)])
        assert result.exit_code == 0, result.output
        assert "mean rmse" in result.output
        summary = json.loads((out / "summary.json").read_text())
        assert summary["n_windows"] == 2
        assert (out / "windows.csv").exists()
        assert (out / "latency.csv").exists()

    def test_bad_flag_value_exits_2(self, runner):
        result = runner.invoke(main, ["run", "--scenario", "sideways"])
        assert result.exit_code == 2

    def test_bad_weighting_exits_2(self, runner):
        result = runner.invoke(main, SMALL_ARGS[:3] + ["--weighting", "static:0.9:0.5"])
        assert result.exit_code == 2

    def test_oom_placement_exits_3(self, runner):
        result = runner.invoke(
            main,
            ["run", "--scenario", "none", "--deployment", "edge", "--topology", "pi-lab",
             "--windows", "2", "--window", "count:60"],
        )
        assert result.exit_code == 3
        assert "placement" in result.output

    def test_missing_data_file_exits_2(self, runner):
        result = runner.invoke(main, SMALL_ARGS[:-2] + ["--data", "/nope/missing.csv"])
        assert result.exit_code == 2


class TestHelp:
    def test_help_lists_subcommands(self, runner):
        result = runner.invoke(main, ["--help"])
        assert result.exit_code == 0
        assert "run" in result.output and "serve" in result.output

    def test_run_help_lists_spec_flags(self, runner):
        result = runner.invoke(main, ["run", "--help"])
        for flag in ("--scenario", "--deployment", "--weighting", "--windows", "--window",
                     "--fidelity", "--seed", "--data", "--out"):
            assert flag in result.output
