"""Experiment driver: config validation, outputs, exit codes, reproducibility."""
import csv
import json
import os
import subprocess
import sys

import numpy as np
import pytest

from pinn_spectral.cli import main

TOY_TINY = {
    "grid_n": 201,
    "grid_x_max": 40.0,
    "n_bulk_list": [64, 128],
    "inset_n_list": [128, 256, 512],
    "x_star_max": 4.0,
    "x_star_step": 0.2,
    "n_k": 4001,
}


def write_cfg(tmp_path, payload, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(payload))
    return str(p)


def read_csv(path):
    with open(path) as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


class TestToyCommand:
    def test_outputs_and_summary(self, tmp_path):
        cfg = write_cfg(tmp_path, TOY_TINY)
        out = tmp_path / "out"
        assert main(["toy", "--config", cfg, "--out", str(out)]) == 0
        for name in ("curve_n64.csv", "curve_n128.csv", "inset.csv", "summary.json"):
            assert (out / name).exists()
            assert (out / (name + ".meta.json")).exists()
        summary = json.loads((out / "summary.json").read_text())
        assert len(summary["per_n"]) == 2
        assert summary["powerlaw"]["r2"] > 0.99
        assert -0.6 < summary["powerlaw"]["slope"] < -0.4
        for rec in summary["per_n"]:
            assert rec["max_gap_gpr_vs_analytic"] < 2.5
            assert rec["nie_residual_norm"] < 1e-8

    def test_curve_columns_and_agreement(self, tmp_path):
        cfg = write_cfg(tmp_path, TOY_TINY)
        out = tmp_path / "out"
        assert main(["toy", "--config", cfg, "--out", str(out)]) == 0
        header, rows = read_csv(out / "curve_n128.csv")
        assert header == ["x_star", "f_gpr", "f_nie_analytic", "f_nie_grid"]
        data = np.array(rows, dtype=float)
        assert data[0, 0] == 0.0 and data[-1, 0] == 4.0
        # the two equation solvers agree much more tightly than the sampler
        assert np.max(np.abs(data[:, 2] - data[:, 3])) < 0.05

    def test_byte_stable_reruns(self, tmp_path):
        cfg = write_cfg(tmp_path, TOY_TINY)
        out1, out2 = tmp_path / "a", tmp_path / "b"
        assert main(["toy", "--config", cfg, "--out", str(out1)]) == 0
        assert main(["toy", "--config", cfg, "--out", str(out2)]) == 0
        for name in sorted(os.listdir(out1)):
            assert (out1 / name).read_bytes() == (out2 / name).read_bytes()

    def test_sidecar_carries_no_timestamps(self, tmp_path):
        cfg = write_cfg(tmp_path, TOY_TINY)
        out = tmp_path / "out"
        assert main(["toy", "--config", cfg, "--out", str(out)]) == 0
        meta = json.loads((out / "inset.csv.meta.json").read_text())
        assert set(meta) == {"command", "config", "version"}
        assert meta["command"] == "toy"
        assert meta["config"]["grid_n"] == 201

    def test_step_off_grid_rejected(self, tmp_path):
        cfg = write_cfg(tmp_path, dict(TOY_TINY, x_star_step=0.3))
        assert main(["toy", "--config", cfg, "--out", str(tmp_path / "o")]) == 2


class TestSpectralCommand:
    def test_toy_spectrum_files(self, tmp_path):
        cfg = write_cfg(tmp_path, {"problem": "toy", "grid_n": 65, "grid_x_max": 16.0})
        out = tmp_path / "out"
        assert main(["spectral", "--config", cfg, "--out", str(out)]) == 0
        header, rows = read_csv(out / "eigenvalues.csv")
        assert header == ["k", "lambda"]
        lam = np.array([r[1] for r in rows], dtype=float)
        assert lam.size == 65
        assert np.all(np.diff(lam) <= 1e-12)
        header, rows = read_csv(out / "ak.csv")
        assert header == ["k", "lambda", "neg_log_lambda", "a_k"]
        ak = np.array([r[3] for r in rows], dtype=float)
        assert ak[0] == 0.0
        assert np.all(np.diff(ak) >= -1e-12)
        assert ak[-1] == pytest.approx(1.0, abs=1e-6)

    def test_toy_qn_ladder_decreases(self, tmp_path):
        cfg = write_cfg(tmp_path, {"problem": "toy", "grid_n": 65, "grid_x_max": 16.0})
        out = tmp_path / "out"
        assert main(["spectral", "--config", cfg, "--out", str(out)]) == 0
        payload = json.loads((out / "qn.json").read_text())
        assert payload["problem"] == "toy"
        vals = [payload["qn"][k] for k in ("1", "10", "100", "1000")]
        assert all(0 < v <= 1 for v in vals)
        assert vals == sorted(vals, reverse=True)

    def test_heat_problem_variant(self, tmp_path):
        cfg = write_cfg(tmp_path, {"problem": "heat", "nx": 12, "nt": 6})
        out = tmp_path / "out"
        assert main(["spectral", "--config", cfg, "--out", str(out)]) == 0
        payload = json.loads((out / "qn.json").read_text())
        assert payload["n_modes"] == 72
        assert payload["n_retained"] >= 1

    def test_grid_realization(self, tmp_path):
        cfg = write_cfg(
            tmp_path,
            {"problem": "toy", "realization": "grid", "grid_n": 65, "grid_x_max": 16.0},
        )
        out = tmp_path / "out"
        assert main(["spectral", "--config", cfg, "--out", str(out)]) == 0
        assert json.loads((out / "qn.json").read_text())["realization"] == "grid"


class TestHeatCommand:
    CFG = {
        "nx": 16,
        "nt": 8,
        "residual_nx": 41,
        "residual_nt": 21,
        "n_list": [8, 16],
        "eta_bulk_ladder": [1.0, 100.0],
    }

    def test_outputs_and_summary(self, tmp_path):
        cfg = write_cfg(tmp_path, self.CFG)
        out = tmp_path / "out"
        assert main(["heat", "--config", cfg, "--out", str(out)]) == 0
        summary = json.loads((out / "summary.json").read_text())
        assert summary["kernel"]["family"] == "ErfArcsine"
        assert summary["kernel"]["sigma_a2"] == pytest.approx(4.0)
        assert summary["n_modes"] == 128
        # sharper target crosses the alignment threshold later
        cross = summary["ak_crossing_k_by_a"]
        assert cross["0p03125"] > cross["0p0625"]
        for rec in summary["residuals"]:
            assert rec["boundary_max_abs"] <= 1e-12
            assert rec["initial_mismatch"] <= 1e-14

    def test_alignment_curves_per_basis_and_field(self, tmp_path):
        cfg = write_cfg(tmp_path, self.CFG)
        out = tmp_path / "out"
        assert main(["heat", "--config", cfg, "--out", str(out)]) == 0
        for a_tag in ("0p0625", "0p03125"):
            for q in ("K", "LKL"):
                for f in ("u", "phihat"):
                    path = out / f"ak_a{a_tag}_q{q}_f{f}.csv"
                    assert path.exists()
                    _, rows = read_csv(path)
                    ak = np.array([r[3] for r in rows], dtype=float)
                    assert np.all(np.diff(ak) >= -1e-12)

    def test_qn_decreasing_in_eta(self, tmp_path):
        cfg = write_cfg(tmp_path, self.CFG)
        out = tmp_path / "out"
        assert main(["heat", "--config", cfg, "--out", str(out)]) == 0
        payload = json.loads((out / "qn.json").read_text())
        assert len(payload) == 2
        for rec in payload:
            assert rec["qn"]["1"] > rec["qn"]["100"] > 0.0

    def test_gpr_error_table(self, tmp_path):
        cfg = write_cfg(tmp_path, self.CFG)
        out = tmp_path / "out"
        assert main(["heat", "--config", cfg, "--out", str(out)]) == 0
        header, rows = read_csv(out / "gpr_error.csv")
        assert header == ["a", "n_bulk", "max_err", "rms_err"]
        assert len(rows) == 4  # two a values x two collocation sizes
        assert all(float(r[2]) >= float(r[3]) for r in rows)


class TestKernelCheckCommand:
    def test_small_run_within_three_se(self, tmp_path):
        cfg = write_cfg(tmp_path, {"C": 50, "n_nets": 200, "n_pairs": 3})
        out = tmp_path / "out"
        assert main(["kernel-check", "--config", cfg, "--out", str(out)]) == 0
        stats = json.loads((out / "kernel_check_stats.json").read_text())
        assert stats["all_within_3se"] is True
        assert stats["samples_per_pair"] == 10000
        header, rows = read_csv(out / "kernel_check.csv")
        assert header == ["x", "y", "exact", "estimate", "std_error", "z"]
        assert len(rows) == 3

    def test_family_without_feature_map_rejected(self, tmp_path):
        cfg = write_cfg(tmp_path, {"kernel": {"family": "SquaredExponential"}})
        assert main(["kernel-check", "--config", cfg, "--out", str(tmp_path / "o")]) == 2

    def test_insufficient_budget_is_numerical_failure(self, tmp_path):
        cfg = write_cfg(tmp_path, {"C": 10, "n_nets": 10, "n_pairs": 2})
        out = tmp_path / "out"
        assert main(["kernel-check", "--config", cfg, "--out", str(out)]) == 1
        err = json.loads((out / "error.json").read_text())
        assert err["error"] == "DomainError"
        assert "message" in err


class TestConfigHandling:
    def test_unknown_key_rejected(self, tmp_path):
        cfg = write_cfg(tmp_path, {"grid_m": 10})
        assert main(["toy", "--config", cfg, "--out", str(tmp_path / "o")]) == 2

    def test_wrong_type_rejected(self, tmp_path):
        cfg = write_cfg(tmp_path, {"grid_n": "many"})
        assert main(["toy", "--config", cfg, "--out", str(tmp_path / "o")]) == 2

    def test_malformed_json_rejected(self, tmp_path):
        p = tmp_path / "cfg.json"
        p.write_text("{not json")
        assert main(["toy", "--config", str(p), "--out", str(tmp_path / "o")]) == 2

    def test_missing_file_rejected(self, tmp_path):
        assert (
            main(["toy", "--config", str(tmp_path / "nope.json"), "--out", str(tmp_path / "o")])
            == 2
        )

    def test_version_flag(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["--version"])
        assert exc.value.code == 0
        assert "pinn-spectral" in capsys.readouterr().out

    def test_defaults_need_no_config(self, tmp_path):
        out = tmp_path / "out"
        cfg = write_cfg(tmp_path, {"problem": "toy", "grid_n": 33, "grid_x_max": 8.0})
        assert main(["spectral", "--config", cfg, "--out", str(out)]) == 0


class TestThreadEnvironment:
    def test_invalid_thread_count_rejected(self, tmp_path, monkeypatch):
        monkeypatch.setenv("PINN_SPECTRAL_THREADS", "zero")
        cfg = write_cfg(tmp_path, {"problem": "toy", "grid_n": 33, "grid_x_max": 8.0})
        assert main(["spectral", "--config", cfg, "--out", str(tmp_path / "o")]) == 2

    def test_thread_limit_applies(self, tmp_path, monkeypatch):
        monkeypatch.setenv("PINN_SPECTRAL_THREADS", "1")
        cfg = write_cfg(tmp_path, {"problem": "toy", "grid_n": 33, "grid_x_max": 8.0})
        assert main(["spectral", "--config", cfg, "--out", str(tmp_path / "o")]) == 0

    def test_console_entry_point(self, tmp_path):
        out = subprocess.run(
            [sys.executable, "-m", "pinn_spectral.cli", "--version"],
            capture_output=True,
            text=True,
        )
        assert out.returncode == 0
        assert "pinn-spectral" in out.stdout
