"""CLI contract: schemas, exit codes, formats, determinism."""

import csv
import io
import json
import os
import subprocess
import sys

import pytest

from rnpm.cli import run

PERF_COLS = ["detector", "beta_sq", "T_A", "T_B", "eta", "p", "epsilon",
             "p_oracle", "epsilon_oracle"]
REPEATER_COLS = ["L_km", "F_target", "detector", "geometry", "n_opt",
                 "beta_g_sq", "beta_s_sq", "T_seconds", "F", "direct_seconds",
                 "errors"]
DISTILL_COLS = ["F", "beta_sq", "P_s", "F_prime"]
MC_COLS = ["quantity", "n", "p_g", "p_s", "trials", "seed",
           "empirical_mean", "std_error", "predicted"]


def invoke(tmp_path, command, config, *extra):
    path = tmp_path / "config.json"
    path.write_text(json.dumps(config))
    out = io.StringIO()
    code = run([command, "--config", str(path), *extra], stdout=out)
    return code, out.getvalue()


def parse_csv(text):
    rows = list(csv.DictReader(io.StringIO(text)))
    header = text.splitlines()[0].split(",")
    return header, rows


class TestPerf:
    def test_schema_and_oracle_agreement(self, tmp_path):
        cfg = {"hardware": {"tau": 0.98, "eta": 0.95},
               "perf": {"beta_sq": [0.02, 0.04], "L_A_km": 10, "L_B_km": 10,
                        "detectors": ["single_photon", "threshold",
                                      "number_resolving"]}}
        code, text = invoke(tmp_path, "perf", cfg)
        assert code == 0
        header, rows = parse_csv(text)
        assert header == PERF_COLS
        assert len(rows) == 6
        for row in rows:
            assert abs(float(row["p"]) - float(row["p_oracle"])) < 1e-9
            assert abs(float(row["epsilon"]) - float(row["epsilon_oracle"])) < 1e-9

    def test_zero_beta_gives_zero_p(self, tmp_path):
        cfg = {"perf": {"beta_sq": [0.0]}}
        code, text = invoke(tmp_path, "perf", cfg)
        assert code == 0
        _, rows = parse_csv(text)
        assert float(rows[0]["p"]) == 0.0

    def test_json_format(self, tmp_path):
        cfg = {"perf": {"beta_sq": [0.04]}}
        code, text = invoke(tmp_path, "perf", cfg, "--format", "json")
        assert code == 0
        data = json.loads(text)
        assert isinstance(data[0]["p"], float)


class TestRepeater:
    def test_schema(self, tmp_path):
        cfg = {"repeater": {"L_km": [100], "F_targets": [0.9]}}
        code, text = invoke(tmp_path, "repeater", cfg)
        assert code == 0
        header, rows = parse_csv(text)
        assert header == REPEATER_COLS
        assert rows[0]["errors"] == ""

    def test_empty_grid_is_config_error(self, tmp_path):
        cfg = {"repeater": {"L_km": []}}
        code, _ = invoke(tmp_path, "repeater", cfg)
        assert code == 2

    def test_all_infeasible_exit_3(self, tmp_path):
        cfg = {"repeater": {"L_km": [100], "F_targets": [1.0]}}
        code, text = invoke(tmp_path, "repeater", cfg)
        assert code == 3
        _, rows = parse_csv(text)
        assert rows[0]["errors"] != ""


class TestDistill:
    def test_default_beta_grid(self, tmp_path):
        cfg = {"distill": {"F_grid": [0.5, 0.85, 1.0]}}
        code, text = invoke(tmp_path, "distill", cfg)
        assert code == 0
        header, rows = parse_csv(text)
        assert header == DISTILL_COLS
        assert sorted({row["beta_sq"] for row in rows}) == ["0.04", "0.08", "0.12"]

    def test_boundary_F_half_ok(self, tmp_path):
        cfg = {"distill": {"F_grid": [0.5]}}
        code, _ = invoke(tmp_path, "distill", cfg)
        assert code == 0


class TestMontecarlo:
    def test_waiting_mode(self, tmp_path):
        cfg = {"montecarlo": {"mode": "waiting", "n": 0, "p_g": 0.05}}
        code, text = invoke(tmp_path, "montecarlo", cfg,
                            "--seed", "7", "--trials", "50000")
        assert code == 0
        header, rows = parse_csv(text)
        assert header == MC_COLS
        row = rows[0]
        assert abs(float(row["empirical_mean"]) - float(row["predicted"])) < \
            5 * float(row["std_error"])

    def test_rnpm_mode_within_error_bars(self, tmp_path):
        cfg = {"hardware": {"tau": 0.98, "eta": 0.95},
               "montecarlo": {"mode": "rnpm", "beta_sq": 0.04,
                              "L_A_km": 5, "L_B_km": 5}}
        code, text = invoke(tmp_path, "montecarlo", cfg,
                            "--seed", "3", "--trials", "40000")
        assert code == 0
        _, rows = parse_csv(text)
        for row in rows:
            assert abs(float(row["empirical_mean"]) - float(row["predicted"])) \
                < 5 * float(row["std_error"])

    def test_trials_required(self, tmp_path):
        cfg = {"montecarlo": {"mode": "waiting", "n": 0, "p_g": 0.1}}
        code, _ = invoke(tmp_path, "montecarlo", cfg)
        assert code == 2

    def test_byte_identical_across_threads(self, tmp_path):
        path = tmp_path / "mc.json"
        path.write_text(json.dumps(
            {"montecarlo": {"mode": "waiting", "n": 2, "p_g": 0.3,
                            "p_s": 0.5}}))
        outputs = []
        for threads in ("1", "4"):
            env = dict(os.environ, RNPM_THREADS=threads)
            r = subprocess.run(
                [sys.executable, "-m", "rnpm.cli", "montecarlo", "--config",
                 str(path), "--seed", "11", "--trials", "3000"],
                env=env, capture_output=True, check=False)
            assert r.returncode == 0, r.stderr
            outputs.append(r.stdout)
        assert outputs[0] == outputs[1]


class TestOptics:
    def test_outcome_dump(self, tmp_path):
        cfg = {"hardware": {"tau": 1.0, "eta": 1.0,
                            "detector": "number_resolving"},
               "optics": {"beta_sq": 0.04}}
        code, text = invoke(tmp_path, "optics", cfg)
        assert code == 0
        doc = json.loads(text)
        total = sum(o["probability"] for o in doc["outcomes"])
        assert abs(total - 1.0) < 1e-9
        assert {"m", "n", "probability", "parity"} <= set(doc["outcomes"][0])

    def test_alpha_theta_pair(self, tmp_path):
        cfg = {"optics": {"alpha": 0.3, "theta": 2.0}}
        code, text = invoke(tmp_path, "optics", cfg)
        assert code == 0
        cfg_bad = {"optics": {"alpha": 0.3}}
        code, _ = invoke(tmp_path, "optics", cfg_bad)
        assert code == 2


class TestConfigHandling:
    def test_unknown_top_level_key(self, tmp_path):
        code, _ = invoke(tmp_path, "perf", {"nope": 1})
        assert code == 2

    def test_unknown_block_key(self, tmp_path):
        code, _ = invoke(tmp_path, "perf", {"perf": {"bogus": 1}})
        assert code == 2

    def test_unknown_detector(self, tmp_path):
        code, _ = invoke(tmp_path, "perf", {"hardware": {"detector": "psychic"}})
        assert code == 2

    def test_missing_config_file(self):
        out = io.StringIO()
        assert run(["perf", "--config", "/nonexistent.json"], stdout=out) == 2

    def test_malformed_json(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{not json")
        out = io.StringIO()
        assert run(["perf", "--config", str(path)], stdout=out) == 2

    def test_out_flag_writes_file(self, tmp_path):
        path = tmp_path / "config.json"
        path.write_text(json.dumps({"perf": {"beta_sq": [0.04]}}))
        dest = tmp_path / "table.csv"
        out = io.StringIO()
        code = run(["perf", "--config", str(path), "--out", str(dest)],
                   stdout=out)
        assert code == 0
        assert out.getvalue() == ""
        assert dest.read_text().splitlines()[0] == ",".join(PERF_COLS)

    def test_config_roundtrip(self, tmp_path):
        cfg = {"hardware": {"tau": 0.9, "eta": 0.8,
                            "detector": "threshold"},
               "geometry": {"kind": "endpoint"},
               "perf": {"beta_sq": [0.01]}}
        path = tmp_path / "config.json"
        path.write_text(json.dumps(cfg))
        assert json.loads(path.read_text()) == cfg
        out = io.StringIO()
        assert run(["perf", "--config", str(path)], stdout=out) == 0
