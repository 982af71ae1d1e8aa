"""Config loading, sweep plumbing, seeding, CSV contract and validation."""

import json
import os

import numpy as np
import pytest

from conftest import et_config, point_config
from isacpart import cli, designer, harness, scene


def test_csv_header_contract():
    assert harness.CSV_HEADER == \
        "strategy,param,value,root_bcrb_deg,rmse_deg,trials,seed"


def test_dbm_to_watts():
    assert harness.dbm_to_watts(-80.0) == pytest.approx(1e-11)
    assert harness.dbm_to_watts(30.0) == pytest.approx(1.0)


def test_load_scenario_unit_conversions():
    raw = point_config(n=8, k=2, t=2, power_db=20.0)
    cfg = harness.load_scenario(raw)
    assert cfg.power == pytest.approx(100.0)
    assert cfg.sigma_radar == pytest.approx(1e-11)
    assert np.allclose(cfg.sinr_min, 10.0)
    assert np.allclose(cfg.user_angles, np.radians([-40.0, 50.0]))
    assert np.allclose(cfg.target.mean_angles, np.radians([-10.0, 25.0]))
    assert np.allclose(cfg.target.angle_cov,
                       np.radians(0.3) ** 2 * np.eye(2))
    # SI modulus: target path loss times the configured power ratio (0 dB)
    beta2 = scene.path_loss(50.0, 2.0, 1e-3)
    assert cfg.si_amplitude == pytest.approx(beta2)


def test_load_scenario_linear_power_override():
    raw = point_config()
    raw["power_w"] = 2.5
    assert harness.load_scenario(raw).power == pytest.approx(2.5)


def test_load_scenario_extended_target():
    cfg = harness.load_scenario(et_config(n_bins=5))
    assert cfg.is_extended
    assert cfg.target.n_bins == 5
    assert cfg.n_angle_params == 2
    assert np.allclose(cfg.target.offsets, np.linspace(-1, 1, 5))
    assert cfg.target.center_mean == pytest.approx(np.radians(30.0))


def test_load_scenario_rejects_unknown_target_type():
    raw = point_config()
    raw["target"]["type"] = "blob"
    with pytest.raises(ValueError):
        harness.load_scenario(raw)


def test_sweep_spec_validation():
    base = point_config()
    with pytest.raises(ValueError):
        harness.SweepSpec(base=base, param="bandwidth", values=[1.0])
    with pytest.raises(ValueError):
        harness.SweepSpec(base=base, param="power", values=[])
    with pytest.raises(ValueError):
        harness.SweepSpec(base=base, param="power", values=[1.0], trials=0)
    with pytest.raises(ValueError):
        harness.SweepSpec(base=base, param="power", values=[1.0],
                          strategies=("prop", "magic"))


def test_apply_sweep_value_each_parameter():
    base = point_config()
    assert harness.apply_sweep_value(base, "power", 15)["power_db"] == 15.0
    assert harness.apply_sweep_value(base, "num_users", 1)["k"] == 1
    out = harness.apply_sweep_value(base, "prior_std", 0.5)
    assert out["target"]["prior_std_deg"] == 0.5
    out = harness.apply_sweep_value(base, "target1_doa", -5.0)
    assert out["target"]["mean_angles_deg"][0] == -5.0
    assert out["target"]["mean_angles_deg"][1] == 25.0
    out = harness.apply_sweep_value(base, "si_strength", -10.0)
    assert out["si"]["power_ratio_db"] == -10.0
    assert base == point_config()        # the base dict is never mutated


def test_apply_sweep_value_angular_spread_keeps_bin_width():
    base = et_config()
    out = harness.apply_sweep_value(base, "angular_spread", 3.0)
    assert out["target"]["n_bins"] == 5          # 2*3/1.5 + 1
    out = harness.apply_sweep_value(base, "angular_spread", 6.0)
    assert out["target"]["n_bins"] == 9
    out = harness.apply_sweep_value(base, "angular_spread", 0.5)
    assert out["target"]["n_bins"] == 2          # floor of the grid


def test_trial_rng_counter_based():
    a = harness.trial_rng(7, 0, 1, 2).integers(2 ** 31)
    b = harness.trial_rng(7, 0, 1, 2).integers(2 ** 31)
    c = harness.trial_rng(7, 0, 1, 3).integers(2 ** 31)
    assert a == b
    assert a != c


def test_wrapped_error_deg():
    assert harness.wrapped_error_deg(np.radians(179.0), np.radians(-179.0)) \
        == pytest.approx(-2.0)
    assert harness.wrapped_error_deg(0.0, 0.0) == 0.0


def test_root_bcrb_deg_averages_per_parameter_roots():
    result = designer.DesignResult(
        a=np.ones(4), beam=None, r_n=None, weighted_bcrb=0.0,
        angle_bounds=np.array([0.04, 0.09]), trace=[], iterations=0,
        converged=True)
    assert harness.root_bcrb_deg(result) == pytest.approx(0.25)


def test_validate_accepts_shipped_configs():
    assert harness.validate("configs/point_desk.json") == []
    assert harness.validate("configs/et_desk.json") == []


def test_validate_rejects_undersized_array():
    raw = point_config(n=8, k=2, t=2)
    raw["n"] = 3
    problems = harness.validate(raw)
    assert problems
    assert any("N=3" in p for p in problems)


def test_validate_rejects_nonpositive_power():
    raw = point_config()
    raw["power_w"] = -1.0
    problems = harness.validate(raw)
    assert any("power" in p for p in problems)


def test_validate_rejects_degenerate_prior():
    raw = point_config()
    raw["target"]["angle_cov_deg2"] = [[0.0, 0.0], [0.0, 0.0]]
    problems = harness.validate(raw)
    assert any("covariance" in p for p in problems)


def test_run_design_artifact_is_byte_stable(tmp_path):
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps(point_config(n=8, k=2, t=2)))
    out1 = tmp_path / "a" / "design_even.json"
    out2 = tmp_path / "b" / "design_even.json"
    art1 = harness.run_design(cfg_path, "even", out1)
    art2 = harness.run_design(cfg_path, "even", out2)
    assert out1.read_bytes() == out2.read_bytes()
    assert art1["a"] == [1, 1, 1, 1, 0, 0, 0, 0]
    assert art1["root_bcrb_deg"] > 0
    assert art1 == art2


def test_run_sweep_writes_contract_csvs(tmp_path):
    spec = harness.SweepSpec(base=point_config(n=8, k=1, t=1), param="power",
                             values=[10.0], trials=2,
                             strategies=("even", "heu"), master_seed=3)
    paths = harness.run_sweep(spec, tmp_path)
    assert sorted(os.path.basename(p) for p in paths) == \
        ["power_even.csv", "power_heu.csv"]
    for path in paths:
        lines = open(path).read().splitlines()
        assert lines[0] == harness.CSV_HEADER
        fields = lines[1].split(",")
        assert fields[1] == "power"
        assert float(fields[3]) > 0
        assert float(fields[4]) > 0
        assert fields[5] == "2"


def test_run_sweep_independent_of_worker_count(tmp_path, monkeypatch):
    spec = harness.SweepSpec(base=point_config(n=8, k=1, t=1), param="power",
                             values=[10.0], trials=4, strategies=("heu",),
                             master_seed=5)
    p1 = harness.run_sweep(spec, tmp_path / "serial")[0]
    monkeypatch.setenv(harness.WORKERS_ENV, "2")
    p2 = harness.run_sweep(spec, tmp_path / "parallel")[0]
    assert open(p1).read() == open(p2).read()


def test_run_sweep_survives_failing_point(tmp_path, monkeypatch):
    spec = harness.SweepSpec(base=point_config(n=8, k=1, t=1), param="power",
                             values=[10.0], trials=1, strategies=("even",),
                             master_seed=1)

    def boom(*args, **kwargs):
        raise designer.DesignError("forced failure")

    monkeypatch.setattr(harness, "design_for_strategy", boom)
    path = harness.run_sweep(spec, tmp_path)[0]
    lines = open(path).read().splitlines()
    assert lines[0] == harness.CSV_HEADER
    assert lines[1].split(",")[3] == ""         # empty metric fields
    assert lines[1].split(",")[4] == ""


def test_et_campaign_requires_extended_target(tmp_path):
    with pytest.raises(ValueError):
        harness.run_et_campaign(point_config(), tmp_path)


def test_cli_validate_exit_codes(tmp_path, capsys):
    good = tmp_path / "good.json"
    good.write_text(json.dumps(point_config(n=8, k=1, t=1)))
    assert cli.main(["validate", "--config", str(good)]) == 0
    bad = tmp_path / "bad.json"
    raw = point_config()
    raw["n"] = 3
    bad.write_text(json.dumps(raw))
    assert cli.main(["validate", "--config", str(bad)]) == 1
    assert "violation:" in capsys.readouterr().err


def test_cli_design_writes_artifact(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps(point_config(n=8, k=1, t=1)))
    code = cli.main(["design", "--config", str(cfg), "--strategy", "even",
                     "--out", str(tmp_path / "out")])
    assert code == 0
    artifact = json.load(open(tmp_path / "out" / "design_even.json"))
    assert artifact["strategy"] == "even"
    assert len(artifact["a"]) == 8


def test_cli_surfaces_errors_as_exit_status(tmp_path, capsys):
    code = cli.main(["design", "--config", str(tmp_path / "missing.json"),
                     "--strategy", "even", "--out", str(tmp_path)])
    assert code == 1
    assert "error:" in capsys.readouterr().err


def test_load_sweep_from_file(tmp_path):
    base_path = tmp_path / "base.json"
    base_path.write_text(json.dumps(point_config()))
    spec_path = tmp_path / "spec.json"
    spec_path.write_text(json.dumps({
        "base_config_path": str(base_path), "param": "power",
        "values": [5.0, 10.0], "trials": 3, "strategies": ["even"],
        "master_seed": 9}))
    spec = harness.load_sweep(spec_path)
    assert spec.param == "power"
    assert spec.values == [5.0, 10.0]
    assert spec.trials == 3
    assert spec.strategies == ("even",)
    assert spec.master_seed == 9
