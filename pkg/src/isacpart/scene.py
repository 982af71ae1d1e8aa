"""Scenario construction for a monostatic ISAC base station with a partitioned ULA.

Builds user/target/self-interference channels, communication symbols, the
receiver-side interference-plus-noise covariance, and synthetic radar echoes
for both point-like and extended targets.  All angles are radians and all
powers are linear scale internally; unit conversion happens once at config
load (see `harness`).
"""

from dataclasses import dataclass

import numpy as np

BINARY_TOL = 1e-9


def db_to_linear(x_db):
    return 10.0 ** (np.asarray(x_db, dtype=float) / 10.0)


def linear_to_db(x):
    return 10.0 * np.log10(x)


@dataclass(frozen=True)
class PointTargetConfig:
    """Prior description of T point-like targets sharing one range cell."""

    mean_angles: np.ndarray      # (T,) radians
    angle_cov: np.ndarray        # (T, T) rad^2
    rcs_mean: np.ndarray         # (T,) complex
    rcs_cov: np.ndarray          # (T, T) complex Hermitian
    distance: float              # meters, BS-target link

    @property
    def n_targets(self):
        return self.mean_angles.shape[0]


@dataclass(frozen=True)
class ExtendedTargetConfig:
    """Prior description of one extended target made of N_bins scatterers.

    Scatterer angles are theta_c + delta * offsets with offsets in [-1, 1];
    the two unknown angle parameters are the central angle and the spread.
    """

    center_mean: float           # radians
    spread_mean: float           # radians
    center_var: float            # rad^2
    spread_var: float            # rad^2
    offsets: np.ndarray          # (N_bins,) in [-1, 1]
    rcs_mean: np.ndarray         # (N_bins,) complex
    rcs_cov: np.ndarray          # (N_bins, N_bins)
    distance: float

    @property
    def n_bins(self):
        return self.offsets.shape[0]


@dataclass(frozen=True)
class ScenarioConfig:
    """Immutable description of array, users, target priors, SI and budgets."""

    n: int                       # antennas
    k: int                       # users
    l: int                       # snapshots per CPI
    carrier_freq: float          # Hz
    bandwidth: float             # Hz
    user_angles: np.ndarray      # (K,) radians
    user_distances: np.ndarray   # (K,) meters
    target: object               # PointTargetConfig | ExtendedTargetConfig
    rician_kappa: float          # linear
    c0: float                    # linear reference path loss
    d0: float                    # meters
    user_exponent: float
    target_exponent: float
    si_amplitude: float          # linear, per-entry modulus of H_SI
    si_delay: int                # samples
    si_advance: bool             # flip the shift direction of the SI term
    sigma_user: np.ndarray       # (K,) linear noise powers
    sigma_radar: float           # linear
    sinr_min: np.ndarray         # (K,) linear thresholds
    power: float                 # linear budget
    channel_seed: int

    def __post_init__(self):
        t_min = self.target.n_targets if self.is_point else 1
        if self.n < self.k + t_min:
            raise ValueError(
                f"need N >= K + {t_min} receive/transmit split, got N={self.n}, K={self.k}"
            )
        if self.is_extended:
            off = np.asarray(self.target.offsets)
            if off.size and (off.min() < -1 - 1e-12 or off.max() > 1 + 1e-12):
                raise ValueError("extended-target offsets must lie in [-1, 1]")

    @property
    def is_point(self):
        return isinstance(self.target, PointTargetConfig)

    @property
    def is_extended(self):
        return isinstance(self.target, ExtendedTargetConfig)

    @property
    def n_angle_params(self):
        """Number of unknown angle parameters (T point, 2 for ET)."""
        return self.target.n_targets if self.is_point else 2

    @property
    def n_rcs(self):
        return self.target.n_targets if self.is_point else self.target.n_bins

    @property
    def target_gain(self):
        return np.sqrt(path_loss(self.target.distance, self.target_exponent,
                                 self.c0, self.d0))


@dataclass(frozen=True)
class ChannelSet:
    """Realized channels for one scenario (users random, targets at prior means)."""

    h_users: np.ndarray          # (K, N)
    h_si: np.ndarray             # (N, N)
    q: np.ndarray                # (N,) element index offsets
    h_targets: np.ndarray        # (T or N_bins, N) steering at prior-mean angles
    target_angles: np.ndarray    # (T or N_bins,) radians, prior means
    target_gain: float


@dataclass(frozen=True)
class EchoBatch:
    """One CPI of synthesized radar returns and the generating ground truth."""

    y: np.ndarray                # (N, L)
    s: np.ndarray                # (N+K, L)
    true_theta: np.ndarray       # (T,) point or (2,) = [theta_c, delta] ET
    true_alpha: np.ndarray       # (T,) or (N_bins,)

    @property
    def y_vec(self):
        """vec{Y_r} in column-major order, matching I_L (x) R_n structure."""
        return self.y.reshape(-1, order="F")


def element_offsets(n):
    """Symmetric element index offsets q = [(1-N)/2, ..., (N-1)/2]."""
    return np.arange(n) - (n - 1) / 2.0


def steering_vector(theta, n, gain=1.0):
    """Half-wavelength ULA steering vector with constant per-element modulus."""
    q = element_offsets(n)
    return gain * np.exp(-1j * np.pi * q * np.sin(theta))


def steering_derivatives(theta, n, gain=1.0):
    """First and second angular derivatives of steering_vector."""
    q = element_offsets(n)
    h = steering_vector(theta, n, gain)
    hd = -1j * np.pi * np.cos(theta) * q * h
    hdd = (1j * np.pi * np.sin(theta) * q - (np.pi * np.cos(theta) * q) ** 2) * h
    return hd, hdd


def path_loss(d, exponent, c0, d0=1.0):
    """Distance-dependent path loss C0*(d/d0)^(-beta), linear scale."""
    d = float(d)
    if d <= 0:
        raise ValueError(f"distance must be positive, got {d}")
    return c0 * (d / d0) ** (-exponent)


def rician_user_channel(phi, kappa, pl, n, rng):
    """Rician-faded user channel: LoS steering plus seeded NLoS scattering."""
    los = steering_vector(phi, n)
    nlos = (rng.standard_normal(n) + 1j * rng.standard_normal(n)) / np.sqrt(2.0)
    return np.sqrt(pl) * (np.sqrt(kappa / (1.0 + kappa)) * los
                          + np.sqrt(1.0 / (1.0 + kappa)) * nlos)


def si_channel(n, alpha_si):
    """Near-field self-interference channel between co-located elements.

    Entry (i,j) has modulus alpha_si and phase set by the element spacing
    (half wavelength), giving exp(-j*pi*|i-j|); the wavelength cancels.
    """
    idx = np.arange(n)
    dist = np.abs(idx[:, None] - idx[None, :])
    return alpha_si * np.exp(-1j * np.pi * dist)


def generate_symbols(k, n, l, rng):
    """(N+K) x L unit-variance i.i.d. circularly-symmetric Gaussian symbols."""
    shape = (n + k, l)
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


def build_channels(cfg: ScenarioConfig) -> ChannelSet:
    """Realize all channels; users are random (seeded), targets at prior means."""
    rng = np.random.default_rng(cfg.channel_seed)
    h_users = np.zeros((cfg.k, cfg.n), dtype=complex)
    for k in range(cfg.k):
        pl = path_loss(cfg.user_distances[k], cfg.user_exponent, cfg.c0, cfg.d0)
        h_users[k] = rician_user_channel(cfg.user_angles[k], cfg.rician_kappa,
                                         pl, cfg.n, rng)
    beta = cfg.target_gain
    if cfg.is_point:
        angles = cfg.target.mean_angles
    else:
        angles = cfg.target.center_mean + cfg.target.spread_mean * cfg.target.offsets
    angles = np.asarray(angles, dtype=float)
    h_targets = np.stack([steering_vector(th, cfg.n, beta) for th in angles])
    return ChannelSet(
        h_users=h_users,
        h_si=si_channel(cfg.n, cfg.si_amplitude),
        q=element_offsets(cfg.n),
        h_targets=h_targets,
        target_angles=angles,
        target_gain=beta,
    )


def noise_covariance(a, w, h_si, sigma_r2):
    """Self-interference-plus-noise covariance at the receive elements.

    R_n = (I-A)[sigma_r^2 I + H_SI A W W^H A H_SI^H](I-A), Hermitian PSD.
    """
    a = np.asarray(a, dtype=float)
    b = 1.0 - a
    n = a.shape[0]
    g = h_si * a[None, :]           # H_SI A
    inner = sigma_r2 * np.eye(n) + (g @ w) @ (g @ w).conj().T
    r_n = b[:, None] * inner * b[None, :]
    return 0.5 * (r_n + r_n.conj().T)


def _require_binary(a):
    a = np.asarray(a, dtype=float)
    if np.any(np.abs(a * (1.0 - a)) > BINARY_TOL):
        raise ValueError("echo synthesis requires a binary partition vector")
    return np.round(a)


def draw_true_params(cfg: ScenarioConfig, rng):
    """Sample ground-truth (theta, alpha) from the scenario priors."""
    tgt = cfg.target
    if cfg.is_point:
        theta = rng.multivariate_normal(tgt.mean_angles, tgt.angle_cov)
    else:
        theta = np.array([
            tgt.center_mean + np.sqrt(tgt.center_var) * rng.standard_normal(),
            tgt.spread_mean + np.sqrt(tgt.spread_var) * rng.standard_normal(),
        ])
    cov = np.asarray(tgt.rcs_cov, dtype=complex)
    chol = np.linalg.cholesky(cov + 1e-15 * np.eye(cov.shape[0]))
    z = (rng.standard_normal(cov.shape[0])
         + 1j * rng.standard_normal(cov.shape[0])) / np.sqrt(2.0)
    alpha = np.asarray(tgt.rcs_mean, dtype=complex) + chol @ z
    return theta, alpha


def synthesize_echoes(cfg: ScenarioConfig, channels: ChannelSet, a, w, s,
                      true_theta, true_alpha, rng) -> EchoBatch:
    """Generate one CPI of radar returns: target echoes + SI leakage + noise."""
    a = _require_binary(a)
    b = 1.0 - a
    n, l = cfg.n, s.shape[1]
    beta = channels.target_gain
    x = w @ s                                   # transmitted N x L block
    y = np.zeros((n, l), dtype=complex)

    true_theta = np.atleast_1d(np.asarray(true_theta, dtype=float))
    true_alpha = np.atleast_1d(np.asarray(true_alpha, dtype=complex))
    if cfg.is_point:
        angles = true_theta
    else:
        angles = true_theta[0] + true_theta[1] * cfg.target.offsets
    # each scatterer contributes alpha * (b o h)(h o a)^T x  (rank-one echo)
    for alpha_i, th in zip(true_alpha, angles):
        h = steering_vector(th, n, beta)
        y += alpha_i * np.outer(b * h, a * h) @ x

    if cfg.si_amplitude != 0.0:
        shift = -cfg.si_delay if cfg.si_advance else cfg.si_delay
        x_shift = np.roll(x, shift, axis=1)
        y += b[:, None] * (channels.h_si @ (a[:, None] * x_shift))

    if cfg.sigma_radar > 0.0:
        noise = (rng.standard_normal((n, l)) + 1j * rng.standard_normal((n, l)))
        noise *= np.sqrt(cfg.sigma_radar / 2.0)
        y += b[:, None] * noise

    return EchoBatch(y=y, s=s, true_theta=true_theta, true_alpha=true_alpha)
