"""Shared scenario factories for the test suite.

Configs are built as raw dicts (degrees / dB, the external contract) and
loaded through `harness.load_scenario` so every test exercises the same
conversion path as the CLI.
"""

import numpy as np
import pytest

from isacpart import harness, scene

POINT_ANGLES_DEG = (-10.0, 25.0, 40.0)
USER_ANGLES_DEG = (-40.0, 50.0, 10.0, -65.0)


def point_config(n=8, k=2, t=2, power_db=10.0, seed=3, l=32,
                 prior_std_deg=0.3, rcs_cov_scale=0.01, si_ratio_db=0.0,
                 sinr_min_db=10.0):
    return {
        "n": n, "k": k, "l": l,
        "user_angles_deg": list(USER_ANGLES_DEG[:k]),
        "user_distances_m": 100.0,
        "target": {"type": "point",
                   "mean_angles_deg": list(POINT_ANGLES_DEG[:t]),
                   "prior_std_deg": prior_std_deg,
                   "rcs_cov_scale": rcs_cov_scale,
                   "distance_m": 50.0},
        "pathloss": {"c0_db": -30.0, "d0_m": 1.0,
                     "user_exponent": 2.6, "target_exponent": 2.0},
        "si": {"power_ratio_db": si_ratio_db, "delay": 1},
        "noise_user_dbm": -80.0, "noise_radar_dbm": -80.0,
        "sinr_min_db": sinr_min_db, "rician_factor_db": 3.0,
        "power_db": power_db, "channel_seed": seed,
    }


def et_config(n=8, k=2, n_bins=3, power_db=10.0, seed=5, l=32,
              center_mean_deg=30.0, spread_mean_deg=3.0, std_deg=0.3):
    return {
        "n": n, "k": k, "l": l,
        "user_angles_deg": list(USER_ANGLES_DEG[:k]),
        "user_distances_m": 100.0,
        "target": {"type": "extended",
                   "center_mean_deg": center_mean_deg,
                   "spread_mean_deg": spread_mean_deg,
                   "center_std_deg": std_deg, "spread_std_deg": std_deg,
                   "n_bins": n_bins, "rcs_cov_scale": 1.0,
                   "distance_m": 50.0},
        "pathloss": {"c0_db": -30.0, "d0_m": 1.0,
                     "user_exponent": 2.6, "target_exponent": 2.0},
        "si": {"power_ratio_db": 0.0, "delay": 1},
        "noise_user_dbm": -80.0, "noise_radar_dbm": -80.0,
        "sinr_min_db": 10.0, "rician_factor_db": 3.0,
        "power_db": power_db, "channel_seed": seed,
    }


def load(cfg_dict):
    return harness.load_scenario(cfg_dict)


def random_design(cfg, rng, fractional=True):
    """Random (a, W, R_w, R_n) consistent with the scenario's power budget."""
    n, k = cfg.n, cfg.k
    if fractional:
        a = rng.uniform(0.2, 0.8, n)
    else:
        a = np.zeros(n)
        a[rng.permutation(n)[: n // 2]] = 1.0
    w = (rng.standard_normal((n, n + k))
         + 1j * rng.standard_normal((n, n + k)))
    w *= np.sqrt(cfg.power / np.sum(np.abs(w) ** 2))
    channels = scene.build_channels(cfg)
    r_w = w @ w.conj().T
    r_n = scene.noise_covariance(a, w, channels.h_si, cfg.sigma_radar)
    return channels, a, w, r_w, r_n


@pytest.fixture
def rng():
    return np.random.default_rng(42)
