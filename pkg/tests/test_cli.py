"""Configuration handling, artifact formats, and exit codes of the CLI."""

import json
import math
import os

import pytest

from sedes.cli import (EXIT_CHECK_FAILURE, EXIT_CONFIG_ERROR,
                       EXIT_NUMERICAL_FAILURE, EXIT_OK, ConfigError,
                       load_config, main)


def run_cli(args):
    return main(args)


def quick_heat_flags(out, extra=()):
    return ["--preset", "heat", "--grid-n", "31", "--t-final", "0.5",
            "--tau", "0.25", "--paths", "2", "--n-samples", "200",
            "--out-dir", str(out)] + list(extra)


def test_load_config_defaults_and_file(tmp_path):
    cfgfile = tmp_path / "run.json"
    cfgfile.write_text(json.dumps({"preset": "heat", "grid_n": 127,
                                   "dt": 0.001, "t_final": 1.0}))
    cfg = load_config(str(cfgfile), {})
    assert cfg["preset"] == "heat"
    assert cfg["grid_n"] == 127
    assert cfg["n_paths"] == 200          # default
    # flags override the file
    cfg2 = load_config(str(cfgfile), {"grid_n": 63})
    assert cfg2["grid_n"] == 63


def test_load_config_unknown_keys_listed(tmp_path):
    cfgfile = tmp_path / "run.json"
    cfgfile.write_text(json.dumps({"preset": "heat", "grid_m": 1,
                                   "dtt": 0.1}))
    with pytest.raises(ConfigError, match="unknown config keys: dtt, grid_m"):
        load_config(str(cfgfile), {})


def test_load_config_rejects_unstable_eq24_citing_hypothesis():
    with pytest.raises(ConfigError, match="c\\^4 < 2"):
        load_config(None, {"preset": "eq24", "c": 1.3})
    with pytest.raises(ConfigError, match="nu-a > b\\^2 > 0"):
        load_config(None, {"preset": "eq24", "b": 2.0})
    # --allow-unstable lifts the construction-time rejection
    cfg = load_config(None, {"preset": "eq24", "c": 1.3,
                             "allow_unstable": True})
    assert cfg["c"] == 1.3


def test_heat_default_run_passes(tmp_path):
    out = tmp_path / "run"
    code = run_cli(["--preset", "heat", "--grid-n", "63", "--paths", "2",
                    "--n-samples", "500", "--out-dir", str(out)])
    assert code == EXIT_OK
    for name in ("report.json", "conditions.json", "ms_curve.csv",
                 "paths_sample.csv", "config.resolved.json"):
        assert (out / name).exists()
    rep = json.loads((out / "report.json").read_text())
    lam = rep["metadata"]["lambda1h"]
    assert rep["fitted_rate"] == pytest.approx(-2 * lam, rel=0.02)
    # enough metadata to replay the run
    for key in ("grid_n", "dt", "lambda1h", "seed", "scheme", "version"):
        assert key in rep["metadata"]
    resolved = json.loads((out / "config.resolved.json").read_text())
    assert resolved["preset"] == "heat"
    assert resolved["grid_n"] == 63


def test_csv_format_and_byte_reproducibility(tmp_path):
    out1, out2 = tmp_path / "a", tmp_path / "b"
    for out in (out1, out2):
        assert run_cli(quick_heat_flags(out)) == EXIT_OK
    for name in ("ms_curve.csv", "paths_sample.csv"):
        b1 = (out1 / name).read_bytes()
        b2 = (out2 / name).read_bytes()
        assert b1 == b2
        assert b"\r" not in b1
    header = (out1 / "ms_curve.csv").read_text().splitlines()[0]
    assert header == "t,mean_h_norm_sq,std_err,n_alive"
    header2 = (out1 / "paths_sample.csv").read_text().splitlines()[0]
    assert header2 == "t,path_id,h_norm,v_norm"
    # 17 significant digits survive a round trip
    row = (out1 / "ms_curve.csv").read_text().splitlines()[1].split(",")
    assert float(row[1]) == pytest.approx(math.pi / 2, rel=1e-6)
    assert len(row[1].replace(".", "").replace("-", "").lstrip("0")) >= 16


def test_dt_adjustment_recorded(tmp_path):
    out = tmp_path / "adj"
    code = run_cli(["--preset", "heat", "--grid-n", "31", "--t-final", "0.3",
                    "--tau", "0.25", "--dt", "0.0003", "--paths", "2",
                    "--no-check-conditions", "--out-dir", str(out)])
    assert code == EXIT_OK
    resolved = json.loads((out / "config.resolved.json").read_text())
    assert resolved["dt_adjusted"] is True
    assert resolved["dt"] <= 0.0003
    assert resolved["m_delay"] * resolved["dt"] == pytest.approx(0.25)


def test_sedes_out_env_override(tmp_path, monkeypatch):
    out = tmp_path / "env-out"
    monkeypatch.setenv("SEDES_OUT", str(out))
    code = run_cli(["--preset", "heat", "--grid-n", "31", "--t-final", "0.2",
                    "--tau", "0.1", "--paths", "2", "--n-samples", "100"])
    assert code == EXIT_OK
    assert (out / "report.json").exists()


def test_broken_eq16_exits_with_check_failure(tmp_path):
    out = tmp_path / "broken16"
    code = run_cli(["--preset", "eq16", "--lam2", "10", "--t-final", "2",
                    "--n-samples", "2000", "--no-ms-ensemble",
                    "--out-dir", str(out)])
    assert code == EXIT_CHECK_FAILURE
    conds = json.loads((out / "conditions.json").read_text())
    assert conds[0]["passed"] is False
    assert conds[0]["max_violation"] > 0


def test_broken_eq6_exits_with_check_failure(tmp_path):
    out = tmp_path / "broken6"
    code = run_cli(["--preset", "eq6", "--g-factor", "3", "--t-final", "2",
                    "--n-samples", "2000", "--no-ms-ensemble",
                    "--out-dir", str(out)])
    assert code == EXIT_CHECK_FAILURE


def test_broken_eq24_rejected_then_reported(tmp_path):
    # without --allow-unstable the config is rejected, citing c^4 < 2
    code = run_cli(["--preset", "eq24", "--c", "1.3",
                    "--out-dir", str(tmp_path / "rej")])
    assert code == EXIT_CONFIG_ERROR
    # with it, the run proceeds and the violated hypothesis fails the check
    out = tmp_path / "allowed"
    code = run_cli(["--preset", "eq24", "--c", "1.3", "--allow-unstable",
                    "--t-final", "2", "--n-samples", "200",
                    "--no-ms-ensemble", "--out-dir", str(out)])
    assert code == EXIT_CHECK_FAILURE
    rep = json.loads((out / "report.json").read_text())
    assert rep["checks"]["conditions"] is False
    assert rep["checks"]["decay_solver"] is False
    assert rep["exit_code"] == EXIT_CHECK_FAILURE


def test_explosion_budget_gives_numerical_failure(tmp_path):
    # coarse dt on the cubic-drift preset with a large state blows up
    out = tmp_path / "boom"
    code = run_cli(["--preset", "eq16", "--amplitude", "5.0", "--dt", "0.05",
                    "--tau", "0.5", "--t-final", "3", "--paths", "4",
                    "--no-check-conditions", "--out-dir", str(out)])
    assert code == EXIT_NUMERICAL_FAILURE
    assert (out / "report.json").exists()


def test_unknown_preset_and_custom_are_config_errors(tmp_path):
    assert run_cli(["--out-dir", str(tmp_path)]) == EXIT_CONFIG_ERROR
    cfgfile = tmp_path / "c.json"
    cfgfile.write_text(json.dumps({"preset": "custom"}))
    assert run_cli(["--config", str(cfgfile)]) == EXIT_CONFIG_ERROR


def test_eq6_with_conditions_and_as_stats_passes(tmp_path):
    out = tmp_path / "eq6run"
    code = run_cli(["--preset", "eq6", "--t-final", "15", "--paths", "40",
                    "--n-samples", "2000", "--as-stats",
                    "--out-dir", str(out)])
    assert code == EXIT_OK
    rep = json.loads((out / "report.json").read_text())
    assert rep["checks"]["as_stats"] is True
    assert rep["as_stats"]["fraction"] >= 0.99
