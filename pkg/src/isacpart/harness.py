"""Experiment harness: config loading, design artifacts, sweep campaigns.

Configs are JSON with angles in degrees and powers in dB (noise in dBm);
everything is converted once at load, and all library math runs in radians
and linear watts.  Sweeps run the three partition strategies over a
parameter grid, estimate per-trial angles from synthesized echoes, and write
one CSV per strategy with the fixed header
``strategy,param,value,root_bcrb_deg,rmse_deg,trials,seed``.

Reproducibility: every trial's generator is derived from the master seed and
the (strategy, point, trial) counters via ``numpy.random.SeedSequence`` spawn
keys, so results do not depend on execution order or worker count
(``ISACPART_WORKERS`` enables a process pool over trials).
"""

import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import designer, estimator, fim, scene

LOG = logging.getLogger("isacpart")

CSV_HEADER = "strategy,param,value,root_bcrb_deg,rmse_deg,trials,seed"
SWEEP_PARAMS = ("power", "num_users", "prior_std", "target1_doa",
                "si_strength", "angular_spread")
STRATEGIES = ("prop", "even", "heu")
ET_BIN_WIDTH_DEG = 1.5
WORKERS_ENV = "ISACPART_WORKERS"

DEG = np.pi / 180.0


def dbm_to_watts(x):
    return 10.0 ** ((float(x) - 30.0) / 10.0)


def _as_list(value, count, name):
    arr = np.atleast_1d(np.asarray(value, dtype=float))
    if arr.size == 1:
        arr = np.full(count, float(arr[0]))
    if arr.size < count:
        raise ValueError(f"{name} needs at least {count} entries")
    return arr[:count]


def _complex_array(value, count, default):
    if value is None:
        return np.full(count, default, dtype=complex)
    arr = np.asarray(value, dtype=float)
    if arr.ndim == 1:          # interleaved [re, im] for a single value
        arr = np.tile(arr, (count, 1))
    return (arr[:, 0] + 1j * arr[:, 1])[:count]


def _load_target(tgt: dict):
    kind = tgt.get("type", "point")
    dist = float(tgt.get("distance_m", 50.0))
    if kind == "point":
        mean = np.atleast_1d(np.asarray(tgt["mean_angles_deg"], dtype=float)) * DEG
        t = mean.shape[0]
        if "angle_cov_deg2" in tgt:
            cov = np.asarray(tgt["angle_cov_deg2"], dtype=float) * DEG * DEG
        else:
            std = float(tgt.get("prior_std_deg", 0.3)) * DEG
            cov = np.eye(t) * std * std
        return scene.PointTargetConfig(
            mean_angles=mean, angle_cov=cov,
            rcs_mean=_complex_array(tgt.get("rcs_mean"), t, 1.0 + 1.0j),
            rcs_cov=float(tgt.get("rcs_cov_scale", 0.01)) * np.eye(t),
            distance=dist)
    if kind == "extended":
        n_bins = int(tgt.get("n_bins", 5))
        return scene.ExtendedTargetConfig(
            center_mean=float(tgt["center_mean_deg"]) * DEG,
            spread_mean=float(tgt["spread_mean_deg"]) * DEG,
            center_var=(float(tgt.get("center_std_deg", 0.3)) * DEG) ** 2,
            spread_var=(float(tgt.get("spread_std_deg", 0.3)) * DEG) ** 2,
            offsets=np.linspace(-1.0, 1.0, n_bins),
            rcs_mean=_complex_array(tgt.get("rcs_mean"), n_bins, 1.0 + 1.0j),
            rcs_cov=float(tgt.get("rcs_cov_scale", 1.0)) * np.eye(n_bins),
            distance=dist)
    raise ValueError(f"unknown target type '{kind}'")


def load_scenario(source) -> scene.ScenarioConfig:
    """Build a ScenarioConfig from a JSON file path or an equivalent dict."""
    if isinstance(source, (str, os.PathLike)):
        with open(source) as fh:
            raw = json.load(fh)
    else:
        raw = dict(source)

    n = int(raw["n"])
    k = int(raw["k"])
    target = _load_target(raw["target"])
    pl = raw.get("pathloss", {})
    c0 = 10.0 ** (float(pl.get("c0_db", -30.0)) / 10.0)
    d0 = float(pl.get("d0_m", 1.0))
    target_exp = float(pl.get("target_exponent", 2.0))

    si = raw.get("si", {})
    if "amplitude" in si:
        alpha_si = float(si["amplitude"])
    else:
        # power_ratio_db parameterizes |H_SI|_F^2 / |h_t h_t^T|_F^2
        beta2 = scene.path_loss(target.distance, target_exp, c0, d0)
        alpha_si = beta2 * 10.0 ** (float(si.get("power_ratio_db", 0.0)) / 20.0)

    return scene.ScenarioConfig(
        n=n, k=k, l=int(raw.get("l", 32)),
        carrier_freq=float(raw.get("carrier_freq_hz", 28e9)),
        bandwidth=float(raw.get("bandwidth_hz", 100e6)),
        user_angles=_as_list(raw["user_angles_deg"], k, "user_angles_deg") * DEG,
        user_distances=_as_list(raw.get("user_distances_m", 100.0), k,
                                "user_distances_m"),
        target=target,
        rician_kappa=10.0 ** (float(raw.get("rician_factor_db", 3.0)) / 10.0),
        c0=c0, d0=d0,
        user_exponent=float(pl.get("user_exponent", 2.6)),
        target_exponent=target_exp,
        si_amplitude=alpha_si,
        si_delay=int(si.get("delay", 1)),
        si_advance=bool(si.get("advance", False)),
        sigma_user=np.array([dbm_to_watts(v) for v in
                             _as_list(raw.get("noise_user_dbm", -80.0), k,
                                      "noise_user_dbm")]),
        sigma_radar=dbm_to_watts(raw.get("noise_radar_dbm", -80.0)),
        sinr_min=10.0 ** (_as_list(raw.get("sinr_min_db", 10.0), k,
                                   "sinr_min_db") / 10.0),
        power=(float(raw["power_w"]) if "power_w" in raw
               else 10.0 ** (float(raw.get("power_db", 10.0)) / 10.0)),
        channel_seed=int(raw.get("channel_seed", 0)))


@dataclass(frozen=True)
class SweepSpec:
    """One sweep campaign: a base scenario, a parameter grid and trial counts."""

    base: dict                   # raw scenario dict (degrees/dB units)
    param: str
    values: list
    trials: int = 100
    strategies: tuple = STRATEGIES
    master_seed: int = 0

    def __post_init__(self):
        if self.param not in SWEEP_PARAMS:
            raise ValueError(f"unknown sweep parameter '{self.param}'")
        if not self.values:
            raise ValueError("sweep grid must be non-empty")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        bad = set(self.strategies) - set(STRATEGIES)
        if bad:
            raise ValueError(f"unknown strategies {sorted(bad)}")


def load_sweep(source) -> SweepSpec:
    if isinstance(source, (str, os.PathLike)):
        with open(source) as fh:
            raw = json.load(fh)
    else:
        raw = dict(source)
    if "base_config_path" in raw:
        with open(raw["base_config_path"]) as fh:
            base = json.load(fh)
    else:
        base = raw["base_config"]
    return SweepSpec(base=base, param=raw["param"],
                     values=list(raw["values"]),
                     trials=int(raw.get("trials", 100)),
                     strategies=tuple(raw.get("strategies", STRATEGIES)),
                     master_seed=int(raw.get("master_seed", 0)))


def apply_sweep_value(base: dict, param, value):
    """Return a config dict with one swept parameter overridden."""
    cfg = json.loads(json.dumps(base))      # deep copy
    if param == "power":
        cfg["power_db"] = float(value)
    elif param == "num_users":
        cfg["k"] = int(value)
    elif param == "prior_std":
        tgt = cfg["target"]
        if tgt.get("type", "point") == "point":
            tgt.pop("angle_cov_deg2", None)
            tgt["prior_std_deg"] = float(value)
        else:
            tgt["center_std_deg"] = float(value)
            tgt["spread_std_deg"] = float(value)
    elif param == "target1_doa":
        cfg["target"]["mean_angles_deg"][0] = float(value)
    elif param == "si_strength":
        cfg.setdefault("si", {})["power_ratio_db"] = float(value)
    elif param == "angular_spread":
        tgt = cfg["target"]
        tgt["spread_mean_deg"] = float(value)
        # keep the scatterer bins at a fixed angular width
        tgt["n_bins"] = max(2, int(round(2.0 * float(value) / ET_BIN_WIDTH_DEG))
                            + 1)
    else:
        raise ValueError(f"unknown sweep parameter '{param}'")
    return cfg


def trial_rng(master_seed, *key):
    """Counter-based child generator; independent of execution order."""
    return np.random.default_rng(np.random.SeedSequence(master_seed,
                                                        spawn_key=key))


def design_for_strategy(cfg: scene.ScenarioConfig, strategy,
                        params: designer.DesignParams = None,
                        channels: scene.ChannelSet = None):
    """Design (a, W) for one strategy.  'prop' runs the full alternating
    optimization; 'even'/'heu' only solve the beamformers at the fixed split."""
    params = params or designer.DesignParams()
    channels = channels or scene.build_channels(cfg)
    if strategy == "prop":
        res = designer.run_algorithm1(cfg, params, channels)
        return res
    a = designer.benchmark_partition(strategy, cfg.n)
    beam, r_n, weighted, bounds = designer.design_for_partition(
        cfg, a, params, channels=channels)
    dim_u = cfg.n_angle_params
    return designer.DesignResult(a=a, beam=beam, r_n=r_n,
                                 weighted_bcrb=weighted,
                                 angle_bounds=np.asarray(bounds)[:dim_u],
                                 trace=[], iterations=0, converged=True)


def root_bcrb_deg(result: designer.DesignResult):
    """Average of the per-parameter root bounds, degrees."""
    return float(np.mean(np.sqrt(result.angle_bounds)))


def wrapped_error_deg(est_rad, true_rad):
    err = np.degrees(np.asarray(est_rad) - np.asarray(true_rad))
    return (err + 180.0) % 360.0 - 180.0


def _estimate_trial(cfg, channels, a, w, master_seed, key):
    rng = trial_rng(master_seed, *key)
    s = scene.generate_symbols(cfg.k, cfg.n, cfg.l, rng)
    theta, alpha = scene.draw_true_params(cfg, rng)
    echoes = scene.synthesize_echoes(cfg, channels, a, w, s, theta, alpha, rng)
    res = estimator.run_algorithm2(cfg, channels, a, w, s, echoes.y)
    return wrapped_error_deg(res.theta, echoes.true_theta)


def _trial_worker(args):
    return _estimate_trial(*args)


def monte_carlo_rmse(cfg, channels, a, w, trials, master_seed, strat_idx,
                     point_idx):
    """RMSE (deg) over `trials` synthesized CPIs, wrapped angular errors."""
    jobs = [(cfg, channels, a, w, master_seed,
             (strat_idx, point_idx, t)) for t in range(trials)]
    workers = int(os.environ.get(WORKERS_ENV, "1") or "1")
    if workers > 1 and trials > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            errors = list(pool.map(_trial_worker, jobs, chunksize=8))
    else:
        errors = [_estimate_trial(*job) for job in jobs]
    stacked = np.concatenate([np.atleast_1d(e) for e in errors])
    return float(np.sqrt(np.mean(stacked ** 2)))


def _json_default(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    raise TypeError(f"not JSON serializable: {type(obj)}")


def run_design(config_path, strategy, out_path, design_seed=0):
    """Design one scenario and persist a JSON artifact (deterministic)."""
    cfg = load_scenario(config_path)
    params = designer.DesignParams(seed=design_seed)
    result = design_for_strategy(cfg, strategy, params)
    artifact = {
        "strategy": strategy,
        "a": result.a.astype(int).tolist(),
        "root_bcrb_deg": root_bcrb_deg(result),
        "weighted_bcrb_deg2": result.weighted_bcrb,
        "angle_bounds_deg2": result.angle_bounds.tolist(),
        "iterations": result.iterations,
        "converged": result.converged,
        "trace": result.trace,
        "w_re": result.beam.w.real.tolist(),
        "w_im": result.beam.w.imag.tolist(),
        "design_seed": design_seed,
    }
    os.makedirs(os.path.dirname(os.path.abspath(out_path)), exist_ok=True)
    with open(out_path, "w") as fh:
        json.dump(artifact, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")
    return artifact


def run_sweep(spec: SweepSpec, out_dir):
    """Run the campaign; one CSV per strategy, rows per grid point.

    Per-point failures are logged and emitted as rows with empty metric
    fields so the sweep always completes.
    """
    os.makedirs(out_dir, exist_ok=True)
    paths = []
    for si, strategy in enumerate(spec.strategies):
        rows = []
        for pi, value in enumerate(spec.values):
            cfg_dict = apply_sweep_value(spec.base, spec.param, value)
            try:
                cfg = load_scenario(cfg_dict)
                channels = scene.build_channels(cfg)
                seed = int(trial_rng(spec.master_seed, si, pi).integers(2**31))
                params = designer.DesignParams(seed=seed)
                result = design_for_strategy(cfg, strategy, params, channels)
                bound = root_bcrb_deg(result)
                rmse = monte_carlo_rmse(cfg, channels, result.a, result.beam.w,
                                        spec.trials, spec.master_seed, si, pi)
                rows.append(f"{strategy},{spec.param},{value},"
                            f"{bound:.10g},{rmse:.10g},{spec.trials},"
                            f"{spec.master_seed}")
            except (designer.DesignError, ValueError) as exc:
                LOG.error("sweep point failed: strategy=%s %s=%s: %s",
                          strategy, spec.param, value, exc)
                rows.append(f"{strategy},{spec.param},{value},,,"
                            f"{spec.trials},{spec.master_seed}")
        path = os.path.join(out_dir, f"{spec.param}_{strategy}.csv")
        with open(path, "w") as fh:
            fh.write(CSV_HEADER + "\n")
            fh.write("\n".join(rows) + "\n")
        paths.append(path)
    return paths


def run_et_campaign(config_path, out_dir, values=None, trials=100,
                    master_seed=0, strategies=STRATEGIES):
    """Power sweep for an extended-target scenario (same CSV schema)."""
    if isinstance(config_path, (str, os.PathLike)):
        with open(config_path) as fh:
            base = json.load(fh)
    else:
        base = dict(config_path)
    if base.get("target", {}).get("type") != "extended":
        raise ValueError("extended-target campaign needs target.type='extended'")
    spec = SweepSpec(base=base, param="power",
                     values=list(values or (5.0, 10.0, 15.0, 20.0)),
                     trials=trials, strategies=tuple(strategies),
                     master_seed=master_seed)
    return run_sweep(spec, out_dir)


def validate(config_source):
    """Static feasibility checks plus a shrunken-scene FIM oracle smoke test.

    Returns a list of violation strings; empty means the config is usable.
    """
    problems = []
    try:
        cfg = load_scenario(config_source)
    except (KeyError, ValueError, TypeError) as exc:
        return [f"config rejected: {exc}"]

    t_min = cfg.target.n_targets if cfg.is_point else 1
    if cfg.n < cfg.k + t_min:
        problems.append(f"N={cfg.n} < K+T={cfg.k + t_min}")
    if cfg.power <= 0:
        problems.append("power budget must be positive")
    if np.any(cfg.sigma_user <= 0) or cfg.sigma_radar <= 0:
        problems.append("noise powers must be positive")
    for name, mat in (("angle prior", np.atleast_2d(
            cfg.target.angle_cov if cfg.is_point
            else np.diag([cfg.target.center_var, cfg.target.spread_var]))),
                      ("RCS prior", np.atleast_2d(cfg.target.rcs_cov))):
        if np.any(np.linalg.eigvalsh(np.asarray(mat, complex)).real <= 0):
            problems.append(f"{name} covariance not positive definite")
    if problems:
        return problems

    # one-shot oracle check on a shrunken clone of the scene
    small = load_scenario(_shrink_config(config_source))
    channels = scene.build_channels(small)
    rng = np.random.default_rng(0)
    a = rng.uniform(0.2, 0.8, small.n)
    w = (rng.standard_normal((small.n, small.n + small.k))
         + 1j * rng.standard_normal((small.n, small.n + small.k)))
    w *= np.sqrt(small.power / np.sum(np.abs(w) ** 2))
    r_w = w @ w.conj().T
    r_n = scene.noise_covariance(a, w, channels.h_si, small.sigma_radar)
    priors = fim.PriorSpec.from_scenario(small)
    if small.is_point:
        f = fim.likelihood_fim_point(channels, a, r_w, r_n, priors.mu_alpha,
                                     small.l, small.sigma_radar)
    else:
        et = fim.build_et_response(small.target.center_mean,
                                   small.target.spread_mean,
                                   small.target.offsets, priors.mu_alpha,
                                   small.n, small.target_gain)
        f = fim.likelihood_fim_extended(channels, a, r_w, r_n, et, small.l,
                                        small.sigma_radar)
    oracle = fim.fim_fd_oracle(small, a, r_w, r_n)
    rel = np.abs(f - oracle).max() / max(np.abs(oracle).max(), 1e-300)
    if rel > 1e-4:
        problems.append(f"FIM oracle smoke test failed (rel error {rel:.2e})")
    return problems


def _shrink_config(source):
    if isinstance(source, (str, os.PathLike)):
        with open(source) as fh:
            raw = json.load(fh)
    else:
        raw = json.loads(json.dumps(dict(source)))
    raw["n"] = min(int(raw["n"]), 8)
    raw["k"] = min(int(raw["k"]), 2)
    raw["l"] = min(int(raw.get("l", 32)), 16)
    tgt = raw["target"]
    if tgt.get("type", "point") == "point":
        tgt["mean_angles_deg"] = tgt["mean_angles_deg"][:2]
        tgt.pop("angle_cov_deg2", None)
        if "rcs_mean" in tgt and tgt["rcs_mean"] is not None:
            tgt["rcs_mean"] = tgt["rcs_mean"][:2]
    else:
        tgt["n_bins"] = min(int(tgt.get("n_bins", 5)), 3)
        tgt.pop("rcs_mean", None)
    return raw
