"""Fisher information and Bayesian Cramér-Rao bounds for partitioned-array sensing.

Computes the prior FIM, the likelihood FIM for point-like and extended
targets in closed form, weighted BCRBs via the Schur complement, and a
finite-difference oracle used to validate the closed forms.

The likelihood FIM entries all reduce to traces of the form
Tr{R_n^{-1} P_j R_w P_i^H} where P_i is the derivative of the echo response
with respect to the i-th real parameter.  At fixed partition those traces
are linear in R_w; at fixed beamformer they are quadratic forms in a (or b),
which is what the lifted rewrites below expose for the design SDPs.
"""

import warnings
from dataclasses import dataclass

import numpy as np

from . import scene

SUPPORT_TOL = 1e-9
RN_REG_FACTOR = 1e-12


@dataclass(frozen=True)
class PriorSpec:
    """Gaussian priors on target angles and complex reflection coefficients."""

    mu_theta: np.ndarray         # (T,) or (2,) radians
    sigma_theta: np.ndarray      # covariance, rad^2
    mu_alpha: np.ndarray         # complex
    sigma_alpha: np.ndarray      # complex Hermitian covariance

    @classmethod
    def from_scenario(cls, cfg: scene.ScenarioConfig):
        tgt = cfg.target
        if cfg.is_point:
            mu_theta = np.asarray(tgt.mean_angles, dtype=float)
            sigma_theta = np.asarray(tgt.angle_cov, dtype=float)
        else:
            mu_theta = np.array([tgt.center_mean, tgt.spread_mean])
            sigma_theta = np.diag([tgt.center_var, tgt.spread_var])
        return cls(mu_theta=mu_theta, sigma_theta=sigma_theta,
                   mu_alpha=np.asarray(tgt.rcs_mean, dtype=complex),
                   sigma_alpha=np.asarray(tgt.rcs_cov, dtype=complex))


@dataclass(frozen=True)
class FimBlocks:
    """Likelihood FIM plus prior blocks, partitioned by angle/RCS parameters."""

    f_l: np.ndarray              # (n_xi, n_xi) real symmetric
    f_theta: np.ndarray          # (n_angles, n_angles)
    f_alpha: np.ndarray          # (2*n_rcs, 2*n_rcs)
    n_angles: int

    @property
    def f_theta_theta(self):
        return self.f_l[: self.n_angles, : self.n_angles]

    @property
    def f_theta_alpha(self):
        return self.f_l[: self.n_angles, self.n_angles:]

    @property
    def f_alpha_alpha(self):
        return self.f_l[self.n_angles:, self.n_angles:]

    @property
    def f_b(self):
        """Full Bayesian FIM: likelihood part plus block-diagonal prior part."""
        f = self.f_l.copy()
        t = self.n_angles
        f[:t, :t] += self.f_theta
        f[t:, t:] += self.f_alpha
        return f


@dataclass(frozen=True)
class EtResponse:
    """Extended-target response built from N_bins scatterers at prior means."""

    angles: np.ndarray           # (N_bins,) scatterer angles theta_c + delta*w
    offsets: np.ndarray          # (N_bins,)
    alpha: np.ndarray            # (N_bins,) RCS values used for aggregates
    h: np.ndarray                # (N_bins, N) steering vectors
    h_mats: np.ndarray           # (N_bins, N, N) H_i = h_i h_i^T
    h_theta: np.ndarray          # (N, N) dG/dtheta_c
    h_delta: np.ndarray          # (N, N) dG/ddelta
    g: np.ndarray                # (N, N) aggregate response


def build_et_response(center, spread, offsets, alpha, n, gain=1.0) -> EtResponse:
    """Assemble per-bin responses and their angle-derivative aggregates."""
    offsets = np.asarray(offsets, dtype=float)
    alpha = np.asarray(alpha, dtype=complex)
    angles = center + spread * offsets
    q = scene.element_offsets(n)
    h = np.stack([scene.steering_vector(th, n, gain) for th in angles])
    h_mats = np.einsum("in,im->inm", h, h)
    h_theta = np.zeros((n, n), dtype=complex)
    h_delta = np.zeros((n, n), dtype=complex)
    for i, th in enumerate(angles):
        qh = q[:, None] * h_mats[i] + h_mats[i] * q[None, :]
        d = -1j * np.pi * np.cos(th) * alpha[i] * qh
        h_theta += d
        h_delta += offsets[i] * d
    g = np.einsum("i,inm->nm", alpha, h_mats)
    return EtResponse(angles=angles, offsets=offsets, alpha=alpha, h=h,
                      h_mats=h_mats, h_theta=h_theta, h_delta=h_delta, g=g)


def prior_fim(priors: PriorSpec):
    """Prior information: inverse angle covariance and the real-split RCS block."""
    try:
        f_theta = np.linalg.inv(np.atleast_2d(priors.sigma_theta))
        si = np.linalg.inv(np.atleast_2d(priors.sigma_alpha))
    except np.linalg.LinAlgError as exc:
        raise ValueError(f"singular prior covariance: {exc}") from exc
    re, im = si.real, si.imag
    f_alpha = 2.0 * np.block([[re, -im], [im, re]])
    f_theta = 0.5 * (f_theta + f_theta.T)
    f_alpha = 0.5 * (f_alpha + f_alpha.T)
    if np.any(np.linalg.eigvalsh(f_theta) <= 0) or np.any(np.linalg.eigvalsh(f_alpha) <= 0):
        raise ValueError("prior covariances must be positive definite")
    return f_theta, f_alpha


def rn_inverse(r_n, b, sigma_r2):
    """Invert R_n on the receive support; zero rows/columns elsewhere.

    Every FIM term touches R_n^{-1} only through b-masked vectors, so the
    support-restricted inverse is exact for binary partitions and reduces
    to the full (regularized) inverse for fractional ones.
    """
    b = np.asarray(b, dtype=float)
    n = b.shape[0]
    support = b > SUPPORT_TOL
    out = np.zeros((n, n), dtype=complex)
    if not np.any(support):
        return out
    sub = r_n[np.ix_(support, support)]
    eps = RN_REG_FACTOR * sigma_r2
    inv = np.linalg.inv(sub + eps * np.eye(sub.shape[0]))
    out[np.ix_(support, support)] = 0.5 * (inv + inv.conj().T)
    return out


# ---------------------------------------------------------------------------
# Parameter-derivative structure of the echo mean.
#
# A point part is (coef, [(x_p, y_p), ...]) meaning the derivative matrix
# coef * sum_p diag(x_p) b a^T diag(y_p).  An ET part is (coef, P) with the
# bare N x N matrix P, sandwiched as B P A when used.
# ---------------------------------------------------------------------------


def point_signal_parts(angles, alpha, n, gain=1.0):
    """Derivative structure of the point-target echo mean, one entry per
    real parameter in the order [theta_1..T, Re alpha_1..T, Im alpha_1..T]."""
    angles = np.atleast_1d(np.asarray(angles, dtype=float))
    alpha = np.atleast_1d(np.asarray(alpha, dtype=complex))
    hs = [scene.steering_vector(th, n, gain) for th in angles]
    hds = [scene.steering_derivatives(th, n, gain)[0] for th in angles]
    theta_parts = [(alpha[t], [(hds[t], hs[t]), (hs[t], hds[t])])
                   for t in range(len(angles))]
    re_parts = [(1.0 + 0.0j, [(hs[t], hs[t])]) for t in range(len(angles))]
    im_parts = [(1.0j, [(hs[t], hs[t])]) for t in range(len(angles))]
    return theta_parts + re_parts + im_parts


def et_signal_parts(et: EtResponse):
    """Derivative structure of the ET echo mean: [theta_c, delta, Re alpha_i, Im alpha_i]."""
    parts = [(1.0 + 0.0j, et.h_theta), (1.0 + 0.0j, et.h_delta)]
    parts += [(1.0 + 0.0j, et.h_mats[i]) for i in range(len(et.offsets))]
    parts += [(1.0j, et.h_mats[i]) for i in range(len(et.offsets))]
    return parts


def _sandwiched(parts, a, b, extended):
    """Materialize each part as the full derivative matrix (a, b folded in)."""
    mats = []
    if extended:
        for coef, p in parts:
            mats.append((coef, b[:, None] * p * a[None, :]))
    else:
        for coef, facs in parts:
            m = sum(np.outer(b * x, a * y) for x, y in facs)
            mats.append((coef, m))
    return mats


def _fim_from_mats(mats, r_w, rn_inv, n_snapshots):
    """F(i,j) = 2L Re{conj(c_i) c_j Tr(R_n^{-1} P_j R_w P_i^H)}."""
    m = len(mats)
    f = np.zeros((m, m))
    rp = [rn_inv @ p @ r_w for _, p in mats]
    for i in range(m):
        ci, pi = mats[i]
        for j in range(i, m):
            cj = mats[j][0]
            tr = np.sum(rp[j] * pi.conj())
            val = 2.0 * n_snapshots * np.real(np.conj(ci) * cj * tr)
            f[i, j] = val
            f[j, i] = val
    return f


def _empty_support(b):
    return not np.any(np.asarray(b) > SUPPORT_TOL)


def likelihood_fim_point(channels: scene.ChannelSet, a, r_w, r_n, alpha,
                         n_snapshots, sigma_r2, b=None):
    """Closed-form likelihood FIM (3T x 3T) at the prior-mean linearization."""
    a = np.asarray(a, dtype=float)
    b = 1.0 - a if b is None else np.asarray(b, dtype=float)
    parts = point_signal_parts(channels.target_angles, alpha, a.shape[0],
                               channels.target_gain)
    if _empty_support(b):
        warnings.warn("empty receive support: likelihood FIM is zero")
        return np.zeros((len(parts), len(parts)))
    rn_inv = rn_inverse(r_n, b, sigma_r2)
    return _fim_from_mats(_sandwiched(parts, a, b, extended=False),
                          r_w, rn_inv, n_snapshots)


def likelihood_fim_extended(channels: scene.ChannelSet, a, r_w, r_n,
                            et: EtResponse, n_snapshots, sigma_r2, b=None):
    """Closed-form likelihood FIM ((2+2N_bins)^2) for the extended target."""
    a = np.asarray(a, dtype=float)
    b = 1.0 - a if b is None else np.asarray(b, dtype=float)
    parts = et_signal_parts(et)
    if _empty_support(b):
        warnings.warn("empty receive support: likelihood FIM is zero")
        return np.zeros((len(parts), len(parts)))
    rn_inv = rn_inverse(r_n, b, sigma_r2)
    return _fim_from_mats(_sandwiched(parts, a, b, extended=True),
                          r_w, rn_inv, n_snapshots)


# ---------------------------------------------------------------------------
# Linear-map rewrites of the same entries, consumed by the design SDPs.
# Each returns an (n_xi, n_xi) grid of N x N coefficient matrices M with
# F(i,j) = Re Tr{M[i][j] X} for X in {R_w, A_1 = a a^T, B_1 = b b^T}.
# ---------------------------------------------------------------------------


def fim_maps_rw(parts, a, b, rn_inv, n_snapshots, extended):
    """Coefficients of the FIM entries as linear functions of R_w (Hermitian)."""
    mats = _sandwiched(parts, a, b, extended)
    m = len(mats)
    grid = [[None] * m for _ in range(m)]
    rpj = [rn_inv @ p for _, p in mats]
    for i in range(m):
        ci, pi = mats[i]
        for j in range(m):
            cj = mats[j][0]
            coef = 2.0 * n_snapshots * np.conj(ci) * cj
            mat = coef * (pi.conj().T @ rpj[j])
            grid[i][j] = 0.5 * (mat + mat.conj().T)
    return grid


def fim_maps_lifted_a(parts, b, w, rn_inv, n_snapshots, extended):
    """FIM entries as quadratic forms in a: F(i,j) = a^T M a (M real symmetric)."""
    m = len(parts)
    n = b.shape[0]
    grid = [[None] * m for _ in range(m)]
    if extended:
        bp = [b[:, None] * p for _, p in parts]     # B P_i
        for i in range(m):
            ci = parts[i][0]
            for j in range(m):
                cj = parts[j][0]
                e = bp[i].conj().T @ rn_inv @ bp[j]
                mat = np.zeros((n, n), dtype=complex)
                for col in range(w.shape[1]):
                    wc = w[:, col]
                    mat += wc.conj()[:, None] * e * wc[None, :]
                mat *= 2.0 * n_snapshots * np.conj(ci) * cj
                grid[i][j] = _real_sym(mat)
    else:
        r_w = w @ w.conj().T
        for i in range(m):
            ci, fac_i = parts[i]
            for j in range(m):
                cj, fac_j = parts[j]
                mat = np.zeros((n, n), dtype=complex)
                for x_p, y_p in fac_i:
                    for x_q, y_q in fac_j:
                        s_b = (b * x_p.conj()) @ rn_inv @ (b * x_q)
                        mat += s_b * (y_q[:, None] * r_w * y_p.conj()[None, :])
                mat *= 2.0 * n_snapshots * np.conj(ci) * cj
                grid[i][j] = _real_sym(mat)
    return grid


def fim_maps_lifted_b(parts, a, r_w, rn_inv, n_snapshots, extended):
    """FIM entries as quadratic forms in b: F(i,j) = b^T M b (M real symmetric)."""
    m = len(parts)
    n = a.shape[0]
    grid = [[None] * m for _ in range(m)]
    if extended:
        # eigen-lift of R_n^{-1} so the b dependence becomes explicit
        evals, evecs = np.linalg.eigh(rn_inv)
        evals = np.clip(evals, 0.0, None)
        u = evecs * np.sqrt(evals)[None, :]         # R_n^{-1} = U U^H
        pa = [p * a[None, :] for _, p in parts]     # P_i A
        for i in range(m):
            ci = parts[i][0]
            for j in range(m):
                cj = parts[j][0]
                d = pa[j] @ r_w @ pa[i].conj().T
                mat = np.zeros((n, n), dtype=complex)
                for col in range(u.shape[1]):
                    uc = u[:, col]
                    mat += uc.conj()[:, None] * d * uc[None, :]
                mat *= 2.0 * n_snapshots * np.conj(ci) * cj
                grid[i][j] = _real_sym(mat)
    else:
        for i in range(m):
            ci, fac_i = parts[i]
            for j in range(m):
                cj, fac_j = parts[j]
                mat = np.zeros((n, n), dtype=complex)
                for x_p, y_p in fac_i:
                    for x_q, y_q in fac_j:
                        s_a = (a * y_q) @ r_w @ (a * y_p.conj())
                        mat += s_a * (x_p.conj()[:, None] * rn_inv * x_q[None, :])
                mat *= 2.0 * n_snapshots * np.conj(ci) * cj
                grid[i][j] = _real_sym(mat)
    return grid


def _real_sym(mat):
    r = mat.real
    return 0.5 * (r + r.T)


def bcrb(blocks: FimBlocks, weights=None):
    """Weighted BCRB on the angle block via the Schur complement.

    Returns (Tr{Lambda * Schur^{-1}}, per-angle diagonal bounds), which equals
    the angle block of the full Bayesian FIM inverse.
    """
    t = blocks.n_angles
    g = blocks.f_alpha_alpha + blocks.f_alpha
    try:
        sol = np.linalg.solve(g, blocks.f_theta_alpha.T)
    except np.linalg.LinAlgError as exc:
        raise ValueError(
            f"singular RCS information block, cond={np.linalg.cond(g):.3e}"
        ) from exc
    schur = blocks.f_theta_theta + blocks.f_theta - blocks.f_theta_alpha @ sol
    schur = 0.5 * (schur + schur.T)
    cond = np.linalg.cond(schur)
    if not np.isfinite(cond) or cond > 1e14:
        raise ValueError(f"singular Schur complement, cond={cond:.3e}")
    inv = np.linalg.inv(schur)
    bounds = np.diag(inv).copy()
    if weights is None:
        weighted = float(np.trace(inv))
    else:
        weighted = float(np.sum(np.asarray(weights) * bounds))
    return weighted, bounds


def fim_fd_oracle(cfg: scene.ScenarioConfig, a, r_w, r_n, xi0=None,
                  step_theta=1e-6, step_alpha=1e-5):
    """Finite-difference likelihood FIM, independent of the closed-form algebra.

    Differentiates the echo mean eta(xi) = vec{sum_t alpha_t H_t(theta_t) X}
    (or the ET counterpart) with X X^H = L R_w realized exactly, then
    assembles 2Re{deta^H (I_L (x) R_n^{-1}) deta}.
    """
    n, l = cfg.n, cfg.l
    a = np.asarray(a, dtype=float)
    b = 1.0 - a
    beta = cfg.target_gain
    evals, evecs = np.linalg.eigh(0.5 * (r_w + r_w.conj().T))
    w_sq = evecs * np.sqrt(np.clip(evals, 0.0, None))[None, :]
    dft = np.exp(-2j * np.pi * np.outer(np.arange(l), np.arange(l)) / l)
    x = w_sq @ dft[:n, :]                            # X X^H = L R_w

    if cfg.is_point:
        tgt = cfg.target
        mu_t = np.atleast_1d(tgt.mean_angles)
        mu_a = np.atleast_1d(np.asarray(tgt.rcs_mean, dtype=complex))
        n_par = 3 * mu_t.shape[0]

        def eta(xi):
            tt = xi[: mu_t.shape[0]]
            aa = (xi[mu_t.shape[0]: 2 * mu_t.shape[0]]
                  + 1j * xi[2 * mu_t.shape[0]:])
            y = np.zeros((n, l), dtype=complex)
            for al, th in zip(aa, tt):
                h = scene.steering_vector(th, n, beta)
                y += al * np.outer(b * h, a * h) @ x
            return y

        xi_mean = np.concatenate([mu_t, mu_a.real, mu_a.imag])
    else:
        tgt = cfg.target
        mu_a = np.asarray(tgt.rcs_mean, dtype=complex)
        nb = tgt.n_bins
        n_par = 2 + 2 * nb

        def eta(xi):
            center, spread = xi[0], xi[1]
            aa = xi[2: 2 + nb] + 1j * xi[2 + nb:]
            angles = center + spread * tgt.offsets
            g = np.zeros((n, n), dtype=complex)
            for al, th in zip(aa, angles):
                h = scene.steering_vector(th, n, beta)
                g += al * np.outer(h, h)
            return (b[:, None] * g * a[None, :]) @ x

        xi_mean = np.concatenate([[tgt.center_mean, tgt.spread_mean],
                                  mu_a.real, mu_a.imag])

    xi0 = xi_mean if xi0 is None else np.asarray(xi0, dtype=float)
    n_theta = cfg.n_angle_params
    rn_inv = rn_inverse(r_n, b, cfg.sigma_radar)

    derivs = []
    for i in range(n_par):
        h = step_theta if i < n_theta else step_alpha
        if h <= 0:
            raise ValueError("finite-difference step underflow")
        e = np.zeros(n_par)
        e[i] = h
        derivs.append((eta(xi0 + e) - eta(xi0 - e)) / (2.0 * h))

    f = np.zeros((n_par, n_par))
    ri = [rn_inv @ d for d in derivs]
    for i in range(n_par):
        for j in range(i, n_par):
            val = 2.0 * np.real(np.sum(derivs[i].conj() * ri[j]))
            f[i, j] = val
            f[j, i] = val
    return f
