import json
import math
import os

import numpy as np
import pytest

import pwlab
from pwlab import ScenarioConfig, config_to_dict, parse_config, run_scenario
from pwlab.cli import main as cli_main
from pwlab.errors import ConfigError
from pwlab.scenario import load_config, save_config


def test_config_round_trip():
    cfg = parse_config({
        "scenario": "evolve",
        "geometry": "interval",
        "size": math.pi,
        "n_modes": 32,
        "damping": {"kind": "indicator", "a": 0.1, "b": 0.9, "level": 2.0},
        "initial": {"kind": "lambda_q", "value": 0.5},
    })
    again = parse_config(config_to_dict(cfg))
    assert again == cfg
    # and a second serialization is byte-identical
    assert json.dumps(config_to_dict(again)) == json.dumps(config_to_dict(cfg))


def test_config_unknown_key_named():
    with pytest.raises(ConfigError, match="frobnicate"):
        parse_config({"frobnicate": 1})
    with pytest.raises(ConfigError, match="damping.widht"):
        parse_config({"damping": {"widht": 1}})


def test_config_bad_values():
    with pytest.raises(ConfigError, match="scenario"):
        parse_config({"scenario": "explode"})
    with pytest.raises(ConfigError, match="geometry"):
        parse_config({"geometry": "moebius"})
    with pytest.raises(ConfigError, match="initial.kind"):
        parse_config({"initial": {"kind": "telepathy"}})


def test_config_file_round_trip(tmp_path):
    cfg = ScenarioConfig(scenario="check", n_modes=16, t_end=1.0)
    path = str(tmp_path / "cfg.json")
    save_config(cfg, path)
    assert load_config(path) == cfg


def test_config_parse_error_has_location(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text('{"scenario": "evolve",}')
    with pytest.raises(ConfigError, match="line 1"):
        load_config(str(path))


def _small_cfg(**kw):
    base = {
        "scenario": "evolve",
        "n_modes": 48,
        "t_end": 5.0,
        "dt": 0.01,
        "sample_every": 10,
        "ground_state": {"tol": 1e-12, "certify_trials": 50},
        "initial": {"kind": "lambda_q", "value": 0.5},
    }
    base.update(kw)
    return parse_config(base)


def test_run_scenario_evolve(tmp_path):
    report = run_scenario(_small_cfg(), out_dir=str(tmp_path))
    assert report.all_passed
    assert report.verdicts["cause"] == "completed"
    assert os.path.exists(os.path.join(str(tmp_path), "run.csv"))
    assert os.path.exists(os.path.join(str(tmp_path), "report.json"))
    with open(os.path.join(str(tmp_path), "report.json")) as fh:
        data = json.load(fh)
    assert {c["name"] for c in data["checks"]} >= {"energy_equality",
                                                   "k_sign_invariant"}


def test_run_scenario_blowup(tmp_path):
    cfg = _small_cfg(scenario="blowup", t_end=20.0,
                     initial={"kind": "lambda_q", "value": 1.2})
    report = run_scenario(cfg, out_dir=str(tmp_path))
    assert report.all_passed
    assert report.verdicts["cause"] == "blowup"
    assert report.verdicts["t_detect"] < 20.0


def test_run_scenario_dichotomy_small(tmp_path):
    cfg = _small_cfg(scenario="dichotomy", t_end=25.0,
                     lambdas=[0.5], lambdas_minus=[1.2], alphas=[0.0, 1.0],
                     checks={"decay_factor": 1e-5, "blowup_by": 25.0})
    report = run_scenario(cfg, out_dir=str(tmp_path))
    assert report.all_passed
    rows = report.verdicts["runs"]
    assert len(rows) == 3
    assert all(r["ok"] for r in rows)


def test_run_scenario_ground_state_with_oracle(tmp_path):
    cfg = _small_cfg(scenario="ground-state",
                     ground_state={"tol": 1e-12, "certify_trials": 50,
                                   "run_oracle": True})
    report = run_scenario(cfg, out_dir=str(tmp_path))
    assert report.all_passed
    gs_path = os.path.join(str(tmp_path), "ground_state.json")
    assert os.path.exists(gs_path)
    loaded = pwlab.load_ground_state(gs_path)
    assert loaded.d_level == report.verdicts["d"]

    # reuse the saved record through a config
    cfg2 = _small_cfg(ground_state={"path": gs_path, "certify_trials": 50})
    report2 = run_scenario(cfg2, out_dir=str(tmp_path / "reuse"))
    assert report2.all_passed


def test_run_scenario_check(tmp_path):
    report = run_scenario(_small_cfg(scenario="check"), out_dir=str(tmp_path))
    assert report.all_passed
    names = {c.name for c in report.checks}
    assert {"residual", "mountain_pass", "sobolev_slack"} <= names


def test_determinism_byte_identical_csv(tmp_path):
    cfg = _small_cfg()
    run_scenario(cfg, out_dir=str(tmp_path / "a"))
    run_scenario(cfg, out_dir=str(tmp_path / "b"))
    a = (tmp_path / "a" / "run.csv").read_bytes()
    b = (tmp_path / "b" / "run.csv").read_bytes()
    assert a == b


def test_cli_end_to_end(tmp_path, capsys):
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps({
        "scenario": "evolve",
        "n_modes": 48,
        "t_end": 2.0,
        "sample_every": 10,
        "ground_state": {"tol": 1e-12, "certify_trials": 20},
        "initial": {"kind": "lambda_q", "value": 0.5},
    }))
    code = cli_main(["evolve", str(cfg_path), "--out", str(tmp_path / "out")])
    out = capsys.readouterr().out
    assert code == 0
    assert "[PASS]" in out
    assert "result=ok" in out


def test_cli_overrides_and_bad_config(tmp_path, capsys):
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps({
        "scenario": "evolve", "n_modes": 48, "t_end": 1.0,
        "sample_every": 5,
        "ground_state": {"tol": 1e-12, "certify_trials": 10},
        "initial": {"kind": "lambda_q", "value": 0.4},
    }))
    code = cli_main(["evolve", str(cfg_path), "--out", str(tmp_path / "o"),
                     "--modes", "32", "--dt", "0.005"])
    assert code == 0

    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"no_such_key": 1}))
    code = cli_main(["evolve", str(bad), "--out", str(tmp_path / "o2")])
    err = capsys.readouterr().err
    assert code == 2
    assert "no_such_key" in err


def test_shipped_configs_parse():
    import glob

    root = os.path.join(os.path.dirname(__file__), "..", "configs")
    paths = sorted(glob.glob(os.path.join(root, "*.json")))
    assert len(paths) >= 5
    for path in paths:
        cfg = load_config(path)
        assert cfg.scenario in pwlab.scenario.SCENARIOS


def test_initial_from_coeffs_and_file(tmp_path):
    c = [0.0] * 48
    c[0] = 0.3
    cfg = _small_cfg(initial={"kind": "coeffs", "u": c}, t_end=1.0)
    report = run_scenario(cfg, out_dir=str(tmp_path / "c"))
    assert report.verdicts["classification"] == "KPlus"

    data = {"u_coeffs": [f"{x:.17g}" for x in c]}
    p = tmp_path / "init.json"
    p.write_text(json.dumps(data))
    cfg = _small_cfg(initial={"kind": "file", "path": str(p)}, t_end=1.0)
    report = run_scenario(cfg, out_dir=str(tmp_path / "f"))
    assert report.verdicts["classification"] == "KPlus"
