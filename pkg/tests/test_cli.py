"""Tests for the command line interface."""

import json
from unittest.mock import patch

import pytest
from typer.testing import CliRunner

from umbilic_lab.__main__ import cli
from umbilic_lab.core.config import TOOL_VERSION
from umbilic_lab.core.exceptions import ScenarioConfigError
from umbilic_lab.schemas.certificate import Certificate
from umbilic_lab.schemas.report import Report
from umbilic_lab.services import io_service


@pytest.fixture
def runner():
    """Click test runner."""
    return CliRunner()


def write_report(path, margin):
    """Write a one-certificate tube report."""
    report = Report(
        scenario={"kind": "tube"},
        certificates=[
            Certificate(
                claim_id="1.1/embedded",
                verdict="holds",
                sample_count=1,
                details={"denominator_min": margin},
            )
        ],
        tool_version=TOOL_VERSION,
    )
    return io_service.write_report(report, path)


class TestRunCommand:
    """Exit codes of `umbilic-lab run`."""

    def test_all_hold(self, runner, tmp_path):
        """A passing scenario exits with 0 and writes its report."""
        config = tmp_path / "sphere.toml"
        config.write_text('kind = "comparison-sphere"\ngrid_n = 11\n', encoding="utf-8")
        result = runner.invoke(cli, ["run", str(config), "--out", str(tmp_path / "out")])
        assert result.exit_code == 0
        assert (tmp_path / "out" / "report.json").exists()

    def test_failing_certificate(self, runner, tmp_path):
        """A failing certificate exits with 2."""
        config = tmp_path / "tube.toml"
        config.write_text('kind = "tube"\n\n[tube]\nradius = 1.5\n', encoding="utf-8")
        result = runner.invoke(cli, ["run", str(config), "--out", str(tmp_path / "out")])
        assert result.exit_code == 2

    def test_hard_error(self, runner, tmp_path):
        """An invalid scenario exits with 1 and prints the error as JSON."""
        config = tmp_path / "bad.toml"
        config.write_text('kind = "tube"\n\n[tube]\nradius = -1.0\n', encoding="utf-8")
        result = runner.invoke(cli, ["run", str(config)])
        assert result.exit_code == 1
        assert '"error"' in result.output

    def test_exit_code_passthrough(self, runner, tmp_path):
        """The command exits with whatever code the scenario run returns."""
        with patch("umbilic_lab.__main__.scenario_service.run") as mock_run:
            mock_run.return_value = 2
            result = runner.invoke(cli, ["run", str(tmp_path / "any.toml")])
        assert result.exit_code == 2
        mock_run.assert_called_once()

    def test_lab_error_details(self, runner, tmp_path):
        """Error details raised by a run are echoed with the message."""
        with patch("umbilic_lab.__main__.scenario_service.run") as mock_run:
            mock_run.side_effect = ScenarioConfigError("broken", details={"path": "x.toml"})
            result = runner.invoke(cli, ["run", str(tmp_path / "x.toml")])
        assert result.exit_code == 1
        assert "x.toml" in result.output


class TestDiffCommand:
    """Exit codes of `umbilic-lab diff`."""

    def test_identical_reports(self, runner, tmp_path):
        """Identical reports exit with 0."""
        a = write_report(tmp_path / "a.json", 0.95)
        b = write_report(tmp_path / "b.json", 0.95)
        result = runner.invoke(cli, ["diff", str(a), str(b)])
        assert result.exit_code == 0
        assert json.loads(result.output)["entries"] == []

    def test_drift(self, runner, tmp_path):
        """A changed field exits with 2."""
        a = write_report(tmp_path / "a.json", 0.95)
        b = write_report(tmp_path / "b.json", 0.96)
        result = runner.invoke(cli, ["diff", str(a), str(b)])
        assert result.exit_code == 2

    def test_field_tolerance(self, runner, tmp_path):
        """A field tolerance absorbs the change."""
        a = write_report(tmp_path / "a.json", 0.95)
        b = write_report(tmp_path / "b.json", 0.9501)
        result = runner.invoke(
            cli, ["diff", str(a), str(b), "--field-tolerance", "certificates=1e-3"]
        )
        assert result.exit_code == 0

    def test_unreadable_report(self, runner, tmp_path):
        """A missing report exits with 1."""
        a = write_report(tmp_path / "a.json", 0.95)
        result = runner.invoke(cli, ["diff", str(a), str(tmp_path / "missing.json")])
        assert result.exit_code == 1


class TestInfoCommands:
    """list-scenarios and version."""

    def test_list_scenarios(self, runner):
        """Every scenario kind is printed as JSON."""
        result = runner.invoke(cli, ["list-scenarios"])
        assert result.exit_code == 0
        assert "elliptic-scan" in json.loads(result.output)

    def test_version(self, runner):
        """The version command prints the tool version."""
        result = runner.invoke(cli, ["version"])
        assert result.exit_code == 0
        assert TOOL_VERSION in result.output
