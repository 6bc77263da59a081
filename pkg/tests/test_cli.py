"""
Tests for the command-line entry point and the subcommand orchestrator.
"""

import json
from unittest.mock import patch

import pandas as pd
import pytest

from scripts.workbench import main
from src.convergence import build_convergence_report
from src.errors import NumericalFailure, SolverConvergenceError
from src.models import KernelViolation, ValidationReport


@pytest.fixture
def config_file(tmp_path, make_config):
    def _write(**overrides):
        path = tmp_path / "config.json"
        path.write_text(make_config(**overrides).model_dump_json(indent=2))
        return str(path)

    return _write


def read_error(capsys):
    return json.loads(capsys.readouterr().out)


class TestSubcommands:
    """Each subcommand writes its artifacts and exits 0."""

    def test_validate_kernels(self, config_file, tmp_path):
        out = tmp_path / "kernels"
        assert main(["validate-kernels", "-c", config_file(), "-o", str(out), "-q"]) == 0
        report = json.loads((out / "kernel_report.json").read_text())
        assert report["ok"] is True
        assert report["n_max"] == 6
        assert (out / "resolved_config.json").exists()

    def test_cell_with_corrector(self, config_file, tmp_path):
        out = tmp_path / "cell"
        assert main(["cell", "-c", config_file(corrector_csv=True), "-o", str(out), "-q"]) == 0
        cell = json.loads((out / "cell.json").read_text())
        assert len(cell["A"]) == 4
        corrector = pd.read_csv(out / "corrector.csv")
        assert list(corrector.columns) == ["voxel", "y0", "y1", "w1", "w2"]

    def test_micro(self, config_file, tmp_path):
        out = tmp_path / "micro"
        assert main(["micro", "-c", config_file(write_snapshots=True), "-o", str(out), "-q"]) == 0
        audit = pd.read_csv(out / "micro_eps0.25_audit.csv")
        assert list(audit.columns) == ["step", "t", "total_mass", "injected", "lost", "residual"]
        assert audit["residual"].max() <= 1e-8
        snapshots = sorted((out / "snapshots" / "micro_eps0.25").glob("*.csv"))
        assert [p.name for p in snapshots] == ["micro_0000.csv", "micro_0001.csv", "micro_0002.csv"]
        mask = pd.read_csv(out / "mask.csv")
        assert len(mask) == 32 * 32
        summary = json.loads((out / "micro_summary.json").read_text())
        assert summary["steps"] == 4

    def test_macro(self, config_file, tmp_path):
        out = tmp_path / "macro"
        assert main(["macro", "-c", config_file(), "-o", str(out), "-q"]) == 0
        assert (out / "macro_audit.csv").exists()
        summary = json.loads((out / "macro_summary.json").read_text())
        assert 0 < summary["theta"] < 1

    def test_compare(self, config_file, tmp_path, capsys):
        out = tmp_path / "compare"
        assert main(["compare", "-c", config_file(), "-o", str(out), "-t", "2"]) == 0
        printed = capsys.readouterr().out
        assert "compare finished" in printed
        report = json.loads((out / "convergence_report.json").read_text())
        assert [e["epsilon"] for e in report["entries"]] == [0.5, 0.25]
        table = pd.read_csv(out / "convergence.csv")
        assert len(table) == 2 * 4
        for eps in ("0.5", "0.25"):
            assert (out / f"micro_eps{eps}_audit.csv").exists()

    def test_compare_failed_gates_are_flagged(self, config_file, tmp_path, capsys, caplog):
        def failing_report(*args, **kwargs):
            return build_convergence_report(*args, **kwargs).model_copy(update={"passed": False})

        out = tmp_path / "compare"
        with patch("src.workflow.build_convergence_report", side_effect=failing_report):
            assert main(["compare", "-c", config_file(), "-o", str(out)]) == 0
        printed = capsys.readouterr().out
        assert printed.startswith("❌ compare finished (acceptance gates failed)")
        assert "Convergence gates failed" in caplog.text
        assert json.loads((out / "convergence_report.json").read_text())["passed"] is False

    def test_zerod_with_closed_form(self, config_file, tmp_path):
        out = tmp_path / "zerod"
        path = config_file(kernel={"fragmentation": "none"}, zerod={"n_max": 40, "T": 1.0, "dt": 0.01, "samples": 11})
        assert main(["zerod", "-c", path, "-o", str(out), "-q"]) == 0
        table = pd.read_csv(out / "zerod.csv")
        assert list(table.columns) == ["t", "N", "N_closed_form", "mass"]
        assert len(table) == 11
        report = json.loads((out / "zerod.json").read_text())
        assert report["relative_error"] < 1e-2


class TestDeterminism:
    """Identical inputs give byte-identical data files."""

    def test_micro_outputs_repeat(self, config_file, tmp_path):
        path = config_file(write_snapshots=True)
        first, second = tmp_path / "a", tmp_path / "b"
        assert main(["micro", "-c", path, "-o", str(first), "-q"]) == 0
        assert main(["micro", "-c", path, "-o", str(second), "-q"]) == 0
        for name in ("micro_eps0.25_audit.csv", "mask.csv", "snapshots/micro_eps0.25/micro_0002.csv"):
            assert (first / name).read_bytes() == (second / name).read_bytes()


class TestExitCodes:
    """Failures map to exit codes and a JSON error on stdout."""

    def test_config_error(self, tmp_path, capsys):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps({"schema_version": 1, "epsilon": 0.3, "dt": 0.003}))
        assert main(["micro", "-c", str(path)]) == 2
        error = read_error(capsys)
        assert error["reason"] == "config_error"
        assert set(error["keys"]) == {"epsilon", "dt"}

    def test_geometry_error(self, config_file, tmp_path, capsys):
        # Holes close to the cell edges cut the fluid into islands
        path = config_file(radius=0.49)
        assert main(["micro", "-c", path, "-o", str(tmp_path / "geo")]) == 2
        assert read_error(capsys)["reason"] == "geometry_error"

    def test_numerical_failure(self, config_file, tmp_path, capsys):
        with patch("src.orchestrator.run_micro", side_effect=NumericalFailure("Mass audit failed", step=3)):
            assert main(["micro", "-c", config_file(), "-o", str(tmp_path / "num")]) == 3
        error = read_error(capsys)
        assert error["reason"] == "numerical_failure"
        assert "step 3" in error["explanation"]

    def test_solver_non_convergence(self, config_file, tmp_path, capsys):
        with patch("src.orchestrator.solve_cell_problem", side_effect=SolverConvergenceError(20000, 1e-6, 1e-10)):
            assert main(["cell", "-c", config_file(), "-o", str(tmp_path / "cg")]) == 4
        assert read_error(capsys)["reason"] == "solver_non_convergence"

    def test_invalid_kernels(self, config_file, tmp_path):
        bad = ValidationReport(violations=[
            KernelViolation(constraint="monomer_no_breakup", indices=[1], detail="B(1)=1 != 0"),
        ])
        out = tmp_path / "kernels"
        with patch("src.orchestrator.validate_kernels", return_value=bad):
            assert main(["validate-kernels", "-c", config_file(), "-o", str(out), "-q"]) == 2
        assert json.loads((out / "kernel_report.json").read_text())["ok"] is False

    def test_short_diffusion_list_for_zerod(self, config_file, tmp_path, capsys):
        path = config_file(n_max=4, kernel={"diffusion": "list", "d_list": [1.0, 0.5, 0.25, 0.125]})
        assert main(["zerod", "-c", path, "-o", str(tmp_path / "z")]) == 2
        error = read_error(capsys)
        assert error["reason"] == "config_error"
        assert error["keys"] == ["kernel.d_list"]

    def test_stray_value_error_becomes_config_error(self, config_file, tmp_path, capsys):
        with patch("src.orchestrator.run_zerod", side_effect=ValueError("T=0.0001 must be at least one step")):
            assert main(["zerod", "-c", config_file(), "-o", str(tmp_path / "z")]) == 2
        error = read_error(capsys)
        assert error["reason"] == "config_error"
        assert "at least one step" in error["explanation"]

    def test_nonpositive_threads(self, config_file, capsys):
        assert main(["micro", "-c", config_file(), "-t", "0"]) == 2
        assert read_error(capsys)["keys"] == ["threads"]

    def test_quiet_success_prints_nothing(self, config_file, tmp_path, capsys):
        assert main(["validate-kernels", "-c", config_file(), "-o", str(tmp_path / "q"), "-q"]) == 0
        assert capsys.readouterr().out == ""
