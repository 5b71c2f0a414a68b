"""End-to-end tests of the command-line interface."""

import filecmp
import os
import subprocess
import sys

import numpy as np
import pytest

from winkler_eki.cli import OUTPUT_ROOT_ENV, main
from winkler_eki.grid import ScalarField

FAST_INVERT = ["--n", "6", "--J", "6", "--N", "3", "--beta", "1e4", "--seed", "2"]


def run_cli(*argv):
    return main(list(argv))


class TestForward:
    def test_writes_coefficient_and_displacement(self, tmp_path, capsys):
        code = run_cli("forward", "--n", "6", "--out", str(tmp_path))
        assert code == 0
        assert sorted(p.name for p in tmp_path.iterdir()) == ["k.csv", "w.csv"]
        out = capsys.readouterr().out
        assert "k.csv" in out and "w.csv" in out
        w = ScalarField.read_csv(tmp_path / "w.csv")
        assert np.all(np.isfinite(w.values))

    def test_reruns_are_byte_identical(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        run_cli("forward", "--n", "8", "--k", "exp", "--out", str(a))
        run_cli("forward", "--n", "8", "--k", "exp", "--out", str(b))
        for name in ("k.csv", "w.csv"):
            assert filecmp.cmp(a / name, b / name, shallow=False)

    def test_constant_and_csv_coefficients(self, tmp_path):
        first = tmp_path / "first"
        code = run_cli("forward", "--n", "6", "--k", "constant:2.5", "--out", str(first))
        assert code == 0
        k = ScalarField.read_csv(first / "k.csv")
        assert np.all(k.values == 2.5)
        second = tmp_path / "second"
        code = run_cli("forward", "--n", "6", "--k", f"csv:{first / 'k.csv'}",
                       "--out", str(second))
        assert code == 0
        assert filecmp.cmp(first / "w.csv", second / "w.csv", shallow=False)

    def test_unknown_coefficient_flag(self, tmp_path, capsys):
        code = run_cli("forward", "--k", "bumps", "--out", str(tmp_path))
        assert code == 1
        assert "--k" in capsys.readouterr().err

    def test_csv_grid_mismatch(self, tmp_path, capsys):
        first = tmp_path / "first"
        run_cli("forward", "--n", "6", "--out", str(first))
        code = run_cli("forward", "--n", "8", "--k", f"csv:{first / 'k.csv'}",
                       "--out", str(tmp_path / "second"))
        assert code == 1
        assert "does not match" in capsys.readouterr().err

    def test_bad_load_point(self, tmp_path, capsys):
        code = run_cli("forward", "--p0", "0,0.5", "--out", str(tmp_path))
        assert code == 1
        assert "strictly inside" in capsys.readouterr().err


class TestObserve:
    def test_writes_truth_and_data(self, tmp_path, capsys):
        code = run_cli("observe", "--n", "6", "--seed", "3", "--out", str(tmp_path))
        assert code == 0
        assert sorted(p.name for p in tmp_path.iterdir()) == ["obs.csv", "truth.csv"]
        assert "noise norm" in capsys.readouterr().out

    def test_noise_free_flag(self, tmp_path, capsys):
        code = run_cli("observe", "--n", "6", "--noise-free", "--out", str(tmp_path))
        assert code == 0
        assert "gamma = 0" in capsys.readouterr().out


class TestInvert:
    def test_fast_run_layout(self, tmp_path, capsys):
        code = run_cli("invert", *FAST_INVERT, "--out", str(tmp_path))
        assert code == 0
        names = sorted(p.name for p in tmp_path.iterdir())
        assert names == ["manifest", "obs.csv", "prior_member0.csv", "recon.csv",
                         "recon_snake.csv", "report.csv", "truth.csv"]
        assert "stop_reason=" in capsys.readouterr().out

    def test_direct_mode(self, tmp_path):
        code = run_cli("invert", "--mode", "direct", *FAST_INVERT,
                       "--out", str(tmp_path))
        assert code == 0
        assert (tmp_path / "recon.csv").exists()

    def test_negative_gamma_is_a_usage_error(self, tmp_path, capsys):
        code = run_cli("invert", "--gamma", "-1", "--out", str(tmp_path))
        assert code == 1
        assert "gamma" in capsys.readouterr().err

    def test_test_case_alias(self, tmp_path):
        code = run_cli("invert", "--test-case", "piecewise", *FAST_INVERT,
                       "--out", str(tmp_path))
        assert code == 0
        assert "truth=piecewise" in (tmp_path / "manifest").read_text()


class TestReport:
    def test_summarizes_a_run_directory(self, tmp_path, capsys):
        run_cli("invert", *FAST_INVERT, "--out", str(tmp_path))
        capsys.readouterr()
        code = run_cli("report", str(tmp_path))
        assert code == 0
        out = capsys.readouterr().out
        assert "stop_reason:" in out
        assert "theta:" in out
        assert "iterations:" in out

    def test_missing_report_is_a_usage_error(self, tmp_path, capsys):
        code = run_cli("report", str(tmp_path / "nowhere"))
        assert code == 1
        assert "no report" in capsys.readouterr().err


class TestReproduce:
    def test_requires_a_selection(self, capsys):
        code = run_cli("reproduce")
        assert code == 1
        assert "--figure" in capsys.readouterr().err

    def test_single_bundle_desk_scale(self, tmp_path, capsys):
        code = run_cli("reproduce", "--figure", "3", "--out", str(tmp_path))
        assert code == 0
        rundir = tmp_path / "fig3" / "exp-gamma-0.01"
        assert (rundir / "recon.csv").exists()
        # Desk scale caps the ensemble; the manifest records what actually ran.
        assert "J=100" in (rundir / "manifest").read_text()

    def test_seed_override(self, tmp_path):
        code = run_cli("reproduce", "--figure", "3", "--seed", "5",
                       "--out", str(tmp_path))
        assert code == 0
        text = (tmp_path / "fig3" / "exp-gamma-0.01" / "manifest").read_text()
        assert "seed=5" in text


class TestParsing:
    def test_unknown_command_exits_one(self):
        with pytest.raises(SystemExit) as info:
            run_cli("frobnicate")
        assert info.value.code == 1

    def test_output_root_env(self, tmp_path, monkeypatch, capsys):
        monkeypatch.setenv(OUTPUT_ROOT_ENV, str(tmp_path / "root"))
        monkeypatch.chdir(tmp_path)
        code = run_cli("forward", "--n", "5")
        assert code == 0
        assert (tmp_path / "root" / "forward" / "w.csv").exists()

    def test_console_script_help(self):
        proc = subprocess.run([sys.executable, "-m", "winkler_eki.cli", "--help"],
                              capture_output=True, text=True)
        assert proc.returncode == 0
        for command in ("forward", "observe", "invert", "reproduce", "report"):
            assert command in proc.stdout
