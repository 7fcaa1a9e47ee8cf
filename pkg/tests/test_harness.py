"""Config parsing, CSV contracts, sweeps, and the CLI surface."""

import subprocess
import sys

import numpy as np
import pytest

from cal import ConfigError
from cal.harness import (
    SUMMARY_HEADER,
    cell_from_config,
    emit_csv,
    instance_for,
    main,
    parse_config_text,
    read_summary_csv,
    resolve_params,
    run_verify,
    sweep,
)

RUN_CFG = """
# one explicit instance, exact-parameter baseline
horizon = 12
seed = 42
replications = 2
mechanism.kind = oracle-vcg
env.n_slots = 2
env.qualities = 0.3, 0.2, 0.5, 0.1
env.true_values = 0.8, 0.9, 0.4, 0.7
model.kind = position-dependent
model.lambdas = 0.8
"""

SWEEP_CFG = """
horizon = 200
seed = 7
replications = 2
preset = paper-posdep
env.n_ads = 6
env.n_slots = 2
mechanism.kind = avcg1
mechanism.theorem = T1
"""


class TestConfigParsing:
    def test_unknown_key_rejected(self):
        with pytest.raises(ConfigError, match="unknown config key"):
            parse_config_text("horizon = 5\nbogus = 1\n")

    def test_duplicate_key_rejected(self):
        with pytest.raises(ConfigError, match="duplicate"):
            parse_config_text("horizon = 5\nhorizon = 6\n")

    def test_comments_and_blanks_ignored(self):
        cfg = parse_config_text("# intro\n\nhorizon = 5  # trailing\n")
        assert cfg == {"horizon": "5"}

    def test_preset_conflicts_with_explicit_env(self):
        text = RUN_CFG + "preset = paper-posdep\nenv.n_ads = 4\n"
        with pytest.raises(ConfigError, match="conflicts"):
            cell_from_config(parse_config_text(text))

    def test_missing_model_rejected(self):
        with pytest.raises(ConfigError, match="preset or explicit"):
            cell_from_config(parse_config_text("horizon = 5\nseed = 1\nmechanism.kind = avcg2\n"))

    def test_explicit_cell_round_trips_instance(self):
        cell = cell_from_config(parse_config_text(RUN_CFG))
        env, model = instance_for(cell, 0)
        assert env.n_ads == 4 and env.n_slots == 2
        assert model.cumulative_lambda()[1] == 0.8

    def test_preset_redraws_per_replication_deterministically(self):
        cell = cell_from_config(parse_config_text(SWEEP_CFG))
        e0a, _ = instance_for(cell, 0)
        e0b, _ = instance_for(cell, 0)
        e1, _ = instance_for(cell, 1)
        assert np.array_equal(e0a.qualities, e0b.qualities)
        assert not np.array_equal(e0a.qualities, e1.qualities)
        assert e0a.qualities.min() >= 0.01 and e0a.qualities.max() <= 0.1

    def test_auto_parameters_require_theorem(self):
        text = RUN_CFG.replace("mechanism.kind = oracle-vcg",
                               "mechanism.kind = avcg1\nmechanism.tau = auto")
        with pytest.raises(ConfigError, match="theorem"):
            resolve_params(cell_from_config(parse_config_text(text)))

    def test_theorem_tunes_auto_parameters(self):
        cell = cell_from_config(parse_config_text(SWEEP_CFG))
        params = resolve_params(cell)
        assert params.tau >= 3 and 0 < params.delta <= 1


class TestSummaryCsv:
    def test_header_only_for_empty_rows(self, tmp_path):
        path = tmp_path / "empty.csv"
        emit_csv([], path)
        assert path.read_text() == SUMMARY_HEADER + "\n"

    def test_round_trip_is_exact(self, tmp_path):
        rows = [("T", 2000.0, 1, 1 / 3, 2 / 7, 0.1234567890123456789, 31.25,
                 (1 / 3) / 31.25, 0.0125, 7),
                ("T", 2000.0, 0, np.pi, np.e, 1e-17, 31.25, np.pi / 31.25, 0.0125, 7)]
        path = tmp_path / "rt.csv"
        emit_csv(rows, path)
        back = read_summary_csv(path)
        # emit sorts by (value, replication)
        assert back[0][2] == 0 and back[1][2] == 1
        for got, want in zip(back, sorted(rows, key=lambda r: (r[1], r[2]))):
            assert got == want

    def test_sweep_rows_shape_and_order(self, tmp_path):
        cell = cell_from_config(parse_config_text(SWEEP_CFG))
        rows = sweep(cell, "T", [100, 150, 200])
        assert len(rows) == 6  # 3 points x 2 replications
        path = tmp_path / "sweep.csv"
        emit_csv(rows, path)
        back = read_summary_csv(path)
        assert [(r[1], r[2]) for r in back] == [(100.0, 0), (100.0, 1), (150.0, 0),
                                                (150.0, 1), (200.0, 0), (200.0, 1)]
        for r in back:
            assert r[6] > 0  # bound column
            assert r[7] == pytest.approx(r[3] / r[6])

    def test_points_must_increase(self):
        cell = cell_from_config(parse_config_text(SWEEP_CFG))
        with pytest.raises(ConfigError, match="strictly increasing"):
            sweep(cell, "T", [200, 100])

    def test_thread_cap_serial_path_matches_pool(self, monkeypatch):
        cell = cell_from_config(parse_config_text(SWEEP_CFG))
        monkeypatch.setenv("CAL_THREADS", "1")
        serial = sweep(cell, "T", [100, 200])
        monkeypatch.setenv("CAL_THREADS", "2")
        pooled = sweep(cell, "T", [100, 200])
        assert serial == pooled

    def test_axis_needs_generator_for_shape_changes(self):
        cell = cell_from_config(parse_config_text(RUN_CFG))
        with pytest.raises(ConfigError, match="preset"):
            sweep(cell, "N", [4, 5])


class TestCli:
    def write(self, tmp_path, text, name="cfg.txt"):
        path = tmp_path / name
        path.write_text(text)
        return path

    def test_run_is_deterministic_bytes(self, tmp_path):
        cfg = self.write(tmp_path, RUN_CFG)
        out1, out2 = tmp_path / "a.csv", tmp_path / "b.csv"
        assert main(["run", "--config", str(cfg), "--out", str(out1)]) == 0
        assert main(["run", "--config", str(cfg), "--out", str(out2)]) == 0
        assert out1.read_bytes() == out2.read_bytes()
        lines = out1.read_text().splitlines()
        assert lines[0] == "replication,t,phase,slots,expected_total,realized_total,sw"
        assert len(lines) == 1 + 2 * 12

    def test_sweep_cli_writes_csv(self, tmp_path):
        cfg = self.write(tmp_path, SWEEP_CFG)
        out = tmp_path / "sweep.csv"
        rc = main(["sweep", "--config", str(cfg), "--axis", "T",
                   "--points", "100,200", "--out", str(out)])
        assert rc == 0
        assert len(read_summary_csv(out)) == 4

    def test_bounds_prints_tuned_values(self, capsys):
        assert main(["bounds", "--theorem", "T7", "--N", "8", "--T", "512"]) == 0
        text = capsys.readouterr().out
        assert "mu = 0.03125" in text
        assert "delta = 0.25" in text

    def test_bounds_with_k_prints_bound(self, capsys):
        rc = main(["bounds", "--theorem", "T1", "--N", "10", "--T", "10000",
                   "--K", "2", "--lambda-min", "0.8"])
        assert rc == 0
        assert "bound = " in capsys.readouterr().out

    def test_config_error_exits_2(self, tmp_path, capsys):
        cfg = self.write(tmp_path, "horizon = 5\nbogus = 1\n")
        rc = main(["run", "--config", str(cfg), "--out", str(tmp_path / "x.csv")])
        assert rc == 2
        assert "configuration error" in capsys.readouterr().err

    def test_verify_passes_and_filters(self, capsys):
        assert run_verify() == 0
        out = capsys.readouterr().out
        assert out.count("PASS") == 4 and "FAIL" not in out
        assert run_verify("contingent") == 0
        assert capsys.readouterr().out.count("PASS") == 2
        assert run_verify("no-such-check") == 2

    def test_module_entry_point(self, tmp_path):
        proc = subprocess.run([sys.executable, "-m", "cal", "verify"],
                              capture_output=True, text=True)
        assert proc.returncode == 0
        assert proc.stdout.count("PASS") == 4
