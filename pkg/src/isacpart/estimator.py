"""Joint MAP estimation of target angles and reflection coefficients.

The complex reflection coefficients enter the echo mean linearly, so with a
Gaussian prior they concentrate out in closed form; the remaining objective
over the angles is minimized with damped Newton iterations and an Armijo
backtracking line search.  Gradient and Hessian are analytic, built from the
first and second angle derivatives of the echo response.
"""

from dataclasses import dataclass

import numpy as np

from . import fim, scene

ARMIJO_C = 1e-4
ARMIJO_SHRINK = 0.5
STEP_TOL = 1e-7
MIN_STEP = 1e-12
MAX_NEWTON_ITER = 100
HESSIAN_EIG_FLOOR = 1e-10
GRAD_TOL = 1e-9


@dataclass(frozen=True)
class EstimationResult:
    theta: np.ndarray            # estimated angle parameters, radians
    alpha: np.ndarray            # estimated reflection coefficients
    objective: float             # negative log-posterior (up to constants)
    iterations: int
    converged: bool
    step_sizes: list             # accepted Armijo step sizes per iteration


class MapWorkspace:
    """Fixed per-CPI data for the MAP objective: design, echoes and priors."""

    def __init__(self, cfg: scene.ScenarioConfig, channels: scene.ChannelSet,
                 a, w, s, y):
        self.cfg = cfg
        self.channels = channels
        self.priors = fim.PriorSpec.from_scenario(cfg)
        a = np.round(np.asarray(a, dtype=float))
        self.a = a
        self.b = 1.0 - a
        self.x = w @ s                           # transmitted block, N x L
        self.y = np.asarray(y, dtype=complex)
        r_n = scene.noise_covariance(a, w, channels.h_si, cfg.sigma_radar)
        self.rn_inv = fim.rn_inverse(r_n, self.b, cfg.sigma_radar)
        self.sigma_theta_inv = np.linalg.inv(
            np.atleast_2d(self.priors.sigma_theta))
        self.sigma_alpha_inv = np.linalg.inv(
            np.atleast_2d(self.priors.sigma_alpha))
        self.cy = self.rn_inv @ self.y
        self.n_theta = cfg.n_angle_params

    def apply_noise_inverse(self, u):
        """(I_L (x) R_n^{-1}) applied to an (N, L, ...) stack."""
        return np.tensordot(self.rn_inv, u, axes=(1, 0))

    def _columns(self, theta):
        """Echo-mean columns and their first/second angle derivatives.

        Returns (v, dv, d2v) with v of shape (N, L, n_cols); dv[i] holds the
        derivative of every column with respect to the i-th angle parameter
        and d2v[i][j] the corresponding second derivatives.
        """
        cfg = self.cfg
        n = cfg.n
        beta = self.channels.target_gain
        a, b, x = self.a, self.b, self.x
        if cfg.is_point:
            angles = theta
            n_cols = theta.shape[0]
        else:
            offsets = np.asarray(cfg.target.offsets, dtype=float)
            angles = theta[0] + theta[1] * offsets
            n_cols = offsets.shape[0]

        def response(th, order):
            h = scene.steering_vector(th, n, beta)
            if order == 0:
                return np.outer(b * h, a * h)
            hd, hdd = scene.steering_derivatives(th, n, beta)
            if order == 1:
                return np.outer(b * hd, a * h) + np.outer(b * h, a * hd)
            return (np.outer(b * hdd, a * h) + 2.0 * np.outer(b * hd, a * hd)
                    + np.outer(b * h, a * hdd))

        v = np.empty((n, x.shape[1], n_cols), dtype=complex)
        d1 = np.empty_like(v)
        d2 = np.empty_like(v)
        for c in range(n_cols):
            v[:, :, c] = response(angles[c], 0) @ x
            d1[:, :, c] = response(angles[c], 1) @ x
            d2[:, :, c] = response(angles[c], 2) @ x

        nt = self.n_theta
        if cfg.is_point:
            dv = [np.zeros_like(v) for _ in range(nt)]
            d2v = [[np.zeros_like(v) for _ in range(nt)] for _ in range(nt)]
            for c in range(n_cols):
                dv[c][:, :, c] = d1[:, :, c]
                d2v[c][c][:, :, c] = d2[:, :, c]
        else:
            # each column's angle is theta_c + delta * offset (chain rule)
            w_off = np.asarray(cfg.target.offsets, dtype=float)[None, None, :]
            dv = [d1, d1 * w_off]
            d2v = [[d2, d2 * w_off], [d2 * w_off, d2 * w_off ** 2]]
        return v, dv, d2v

    def at(self, theta):
        return _Evaluation(self, np.asarray(theta, dtype=float))


class _Evaluation:
    """Objective, concentrated coefficients and derivatives at one angle vector."""

    def __init__(self, ws: MapWorkspace, theta):
        self.ws = ws
        self.theta = theta
        self._v, self._dv, self._d2v = ws._columns(theta)
        self._cv = ws.apply_noise_inverse(self._v)
        d_mat = (np.einsum("nlc,nld->cd", self._v.conj(), self._cv)
                 + ws.sigma_alpha_inv)
        self._d = 0.5 * (d_mat + d_mat.conj().T)
        self._p = (np.einsum("nlc,nl->c", self._v.conj(), ws.cy)
                   + ws.sigma_alpha_inv @ ws.priors.mu_alpha)
        self.alpha = np.linalg.solve(self._d, self._p)
        self._r = ws.y - self._v @ self.alpha
        self._cr = ws.cy - self._cv @ self.alpha
        self._dtheta = theta - ws.priors.mu_theta
        self._grad = None
        self._hess = None

    @property
    def objective(self):
        prior = 0.5 * float(self._dtheta @ self.ws.sigma_theta_inv
                            @ self._dtheta)
        return float(-np.real(self._p.conj() @ self.alpha)) + prior

    @property
    def gradient(self):
        if self._grad is None:
            ws = self.ws
            g = ws.sigma_theta_inv @ self._dtheta
            for i in range(ws.n_theta):
                dva = self._dv[i] @ self.alpha
                g[i] -= 2.0 * float(np.real(np.sum(self._cr.conj() * dva)))
            self._grad = g
        return self._grad

    @property
    def hessian(self):
        if self._hess is None:
            ws = self.ws
            nt = ws.n_theta
            dp = [np.einsum("nlc,nl->c", self._dv[j].conj(), ws.cy)
                  for j in range(nt)]
            cross = [np.einsum("nlc,nld->cd", self._dv[j].conj(), self._cv)
                     for j in range(nt)]
            dalpha = []
            cdr = []
            for j in range(nt):
                dd = cross[j] + cross[j].conj().T
                dalpha.append(np.linalg.solve(self._d,
                                              dp[j] - dd @ self.alpha))
                dr = -(self._dv[j] @ self.alpha) - self._v @ dalpha[j]
                cdr.append(ws.apply_noise_inverse(dr))
            h = np.array(ws.sigma_theta_inv, dtype=float, copy=True)
            for i in range(nt):
                dva_i = self._dv[i] @ self.alpha
                for j in range(nt):
                    t1 = np.sum(cdr[j].conj() * dva_i)
                    t2 = np.sum(self._cr.conj()
                                * (self._d2v[i][j] @ self.alpha))
                    t3 = np.sum(self._cr.conj() * (self._dv[i] @ dalpha[j]))
                    h[i, j] += -2.0 * float(np.real(t1 + t2 + t3))
            self._hess = 0.5 * (h + h.T)
        return self._hess


def concentrate_alpha(ws: MapWorkspace, theta):
    """Closed-form MAP reflection coefficients at fixed angles."""
    return ws.at(theta).alpha


def concentrated_objective(ws: MapWorkspace, theta):
    """Negative log-posterior with the coefficients concentrated out."""
    return ws.at(theta).objective


def map_gradient(ws: MapWorkspace, theta):
    return ws.at(theta).gradient


def map_hessian(ws: MapWorkspace, theta):
    return ws.at(theta).hessian


def run_algorithm2(cfg: scene.ScenarioConfig, channels: scene.ChannelSet,
                   a, w, s, y, theta0=None) -> EstimationResult:
    """Newton/Armijo minimization of the concentrated MAP objective.

    Starts at the prior-mean angles; a failed line search falls back to the
    prior mean with the convergence flag cleared.
    """
    ws = MapWorkspace(cfg, channels, a, w, s, y)
    theta = (np.array(ws.priors.mu_theta, dtype=float, copy=True)
             if theta0 is None else np.asarray(theta0, dtype=float))
    ev = ws.at(theta)
    steps = []
    converged = False
    it = 0
    for it in range(1, MAX_NEWTON_ITER + 1):
        g = ev.gradient
        if np.linalg.norm(g) <= GRAD_TOL * (1.0 + abs(ev.objective)):
            converged = True
            break
        h = ev.hessian
        floor = HESSIAN_EIG_FLOOR * max(1.0, abs(np.trace(h)))
        if np.linalg.eigvalsh(h)[0] < floor:
            delta = -g
        else:
            delta = -np.linalg.solve(h, g)
        slope = float(g @ delta)
        if slope >= 0.0:
            delta = -g
            slope = -float(g @ g)
        d = 1.0
        accepted = None
        while d >= MIN_STEP:
            cand = ws.at(theta + d * delta)
            if cand.objective <= ev.objective + ARMIJO_C * d * slope:
                accepted = cand
                break
            d *= ARMIJO_SHRINK
        if accepted is None:
            mu = np.array(ws.priors.mu_theta, dtype=float, copy=True)
            ev_mu = ws.at(mu)
            return EstimationResult(theta=mu, alpha=ev_mu.alpha,
                                    objective=ev_mu.objective, iterations=it,
                                    converged=False, step_sizes=steps)
        theta = theta + d * delta
        ev = accepted
        steps.append(d)
        if np.linalg.norm(d * delta) < STEP_TOL:
            converged = True
            break
    return EstimationResult(theta=theta, alpha=ev.alpha, objective=ev.objective,
                            iterations=it, converged=converged,
                            step_sizes=steps)
