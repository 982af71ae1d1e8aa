"""Dense semidefinite-program solver over real symmetric LMI blocks.

Canonical form:

    minimize    c^T x
    subject to  F0^(k) + sum_i x_i Fi^(k)  >= 0   (PSD, per block k)
                G x <= h,   A x = b

solved by a self-contained primal-dual interior-point method with
Nesterov-Todd scaling and a Mehrotra-style adaptive centering parameter.
Complex Hermitian data enters through the [[Re,-Im],[Im,Re]] embedding.

Problems are assembled sparsely: each LMI block keeps elementary
(entry, variable, coefficient) triplets, and the Schur complement is formed
as B^T (W^-1 (x)_s W^-1) B with B the sparse svec coefficient matrix, which
keeps per-iteration cost low for the matrix-variable problems built by
`designer`.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.linalg import cho_factor, cho_solve, cholesky, eigh, solve_triangular

GAP_TOL_DEFAULT = 1e-7
FEAS_TOL_DEFAULT = 1e-8
MAX_ITER_DEFAULT = 200
STEP_FRACTION = 0.98
HERMITIAN_TOL = 1e-10

_SQRT2 = np.sqrt(2.0)


def embed_hermitian(h, tol=HERMITIAN_TOL):
    """Real symmetric embedding [[Re,-Im],[Im,Re]] of a Hermitian matrix.

    PSD-ness is preserved, eigenvalues are duplicated, trace doubles.
    """
    h = np.asarray(h, dtype=complex)
    scale = max(1.0, float(np.abs(h).max()) if h.size else 1.0)
    if float(np.abs(h - h.conj().T).max()) > tol * scale:
        raise ValueError("embed_hermitian requires a Hermitian matrix")
    re, im = h.real, h.imag
    return np.block([[re, -im], [im, re]])


def _tril_pairs(dim):
    rows, cols = np.tril_indices(dim)
    scale = np.where(rows == cols, 1.0, _SQRT2)
    return rows, cols, scale


def _svec(mat, rows, cols, scale):
    return mat[rows, cols] * scale


def _smat(vec, dim, rows, cols, scale):
    m = np.zeros((dim, dim))
    m[rows, cols] = vec / scale
    return m + m.T - np.diag(np.diag(m))


def _sym_kron(u, rows, cols, scale):
    """Symmetrized Kronecker product U (x)_s U in the orthonormal svec basis."""
    m = 0.5 * (u[np.ix_(rows, rows)] * u[np.ix_(cols, cols)]
               + u[np.ix_(rows, cols)] * u[np.ix_(cols, rows)])
    return m * scale[:, None] * scale[None, :]


class LmiBlock:
    """Accumulates one symmetric LMI block F0 + sum_i x_i Fi >= 0.

    add_entry(r, c, var, val) sets the (r,c) and (c,r) coefficients of
    variable `var` to val; constants work the same way.
    """

    def __init__(self, dim):
        self.dim = dim
        self._ent_r = []
        self._ent_c = []
        self._ent_v = []
        self._ent_val = []
        self._const_r = []
        self._const_c = []
        self._const_val = []

    def add_entry(self, r, c, var, val):
        if val != 0.0:
            r, c = (r, c) if r >= c else (c, r)
            self._ent_r.append(r)
            self._ent_c.append(c)
            self._ent_v.append(var)
            self._ent_val.append(float(val))

    def add_entries(self, rows, cols, var_idx, vals):
        rows = np.asarray(rows)
        cols = np.asarray(cols)
        lo, hi = np.minimum(rows, cols), np.maximum(rows, cols)
        self._ent_r.extend(hi.tolist())
        self._ent_c.extend(lo.tolist())
        self._ent_v.extend(np.asarray(var_idx).tolist())
        self._ent_val.extend(np.asarray(vals, dtype=float).tolist())

    def add_const_entry(self, r, c, val):
        if val != 0.0:
            r, c = (r, c) if r >= c else (c, r)
            self._const_r.append(r)
            self._const_c.append(c)
            self._const_val.append(float(val))

    def add_constant(self, mat):
        mat = 0.5 * (np.asarray(mat, dtype=float) + np.asarray(mat, dtype=float).T)
        rows, cols = np.tril_indices(self.dim)
        vals = mat[rows, cols]
        nz = vals != 0.0
        self._const_r.extend(rows[nz].tolist())
        self._const_c.extend(cols[nz].tolist())
        self._const_val.extend(vals[nz].tolist())

    def add_term(self, var, mat):
        mat = 0.5 * (np.asarray(mat, dtype=float) + np.asarray(mat, dtype=float).T)
        rows, cols = np.tril_indices(self.dim)
        vals = mat[rows, cols]
        nz = vals != 0.0
        self.add_entries(rows[nz], cols[nz], np.full(int(nz.sum()), var), vals[nz])


class ConicProblem:
    """Growable problem container; variables are allocated with new_vars."""

    def __init__(self):
        self.n_vars = 0
        self._obj_idx = []
        self._obj_val = []
        self.blocks = []
        self._ineq = []   # (idx array, coef array, rhs) meaning sum coef*x <= rhs
        self._eq = []

    def new_vars(self, count):
        i0 = self.n_vars
        self.n_vars += count
        return np.arange(i0, i0 + count)

    def add_objective_term(self, idx, coefs):
        idx = np.atleast_1d(np.asarray(idx, dtype=int))
        coefs = np.broadcast_to(np.asarray(coefs, dtype=float), idx.shape)
        self._obj_idx.extend(idx.tolist())
        self._obj_val.extend(coefs.tolist())

    def add_lmi_block(self, dim) -> LmiBlock:
        blk = LmiBlock(dim)
        self.blocks.append(blk)
        return blk

    def add_inequality(self, idx, coefs, rhs):
        idx = np.atleast_1d(np.asarray(idx, dtype=int))
        coefs = np.atleast_1d(np.asarray(coefs, dtype=float))
        self._ineq.append((idx, coefs, float(rhs)))

    def add_equality(self, idx, coefs, rhs):
        idx = np.atleast_1d(np.asarray(idx, dtype=int))
        coefs = np.atleast_1d(np.asarray(coefs, dtype=float))
        self._eq.append((idx, coefs, float(rhs)))

    @property
    def c(self):
        c = np.zeros(self.n_vars)
        if self._obj_idx:
            np.add.at(c, np.asarray(self._obj_idx, dtype=int),
                      np.asarray(self._obj_val))
        return c


@dataclass
class ConicSolution:
    x: np.ndarray
    status: str                  # optimal | infeasible | max_iter
    objective: float
    gap: float
    iterations: int
    primal_residual: float
    dual_residual: float

    @property
    def is_optimal(self):
        return self.status == "optimal"


class _SdpCone:
    def __init__(self, dim, f0_svec, b_csr, norm):
        self.dim = dim
        self.rows, self.cols, self.scale = _tril_pairs(dim)
        self.f0 = f0_svec
        self.b = b_csr
        self.bt = b_csr.T.tocsr()
        self.norm = norm
        self.degree = dim

    def init_point(self):
        eta = 1.0 + np.linalg.norm(self.f0) / max(1.0, np.sqrt(self.dim))
        s = eta * np.eye(self.dim)
        z = np.eye(self.dim)
        return s, z

    def svec(self, mat):
        return _svec(mat, self.rows, self.cols, self.scale)

    def smat(self, vec):
        return _smat(vec, self.dim, self.rows, self.cols, self.scale)

    def nt_data(self, s, z):
        ws, us = eigh(s)
        ws = np.clip(ws, 1e-300, None)
        s_half = (us * np.sqrt(ws)) @ us.T
        s_ihalf = (us * (1.0 / np.sqrt(ws))) @ us.T
        mid = s_half @ z @ s_half
        wm, um = eigh(0.5 * (mid + mid.T))
        wm = np.clip(wm, 1e-300, None)
        w_inv = s_ihalf @ (um * np.sqrt(wm)) @ um.T @ s_ihalf
        w_inv = 0.5 * (w_inv + w_inv.T)
        g = _sym_kron(w_inv, self.rows, self.cols, self.scale)
        s_inv = (us * (1.0 / ws)) @ us.T
        return g, self.svec(s_inv)

    @staticmethod
    def gmul(g, vec):
        return g @ vec

    @staticmethod
    def max_step(x, dx):
        try:
            lo = cholesky(x, lower=True)
        except np.linalg.LinAlgError:
            return 0.0
        t = solve_triangular(lo, dx, lower=True)
        t = solve_triangular(lo, t.T, lower=True)
        lam = float(eigh(0.5 * (t + t.T), eigvals_only=True)[0])
        return np.inf if lam >= -1e-14 else 1.0 / (-lam)

    def inner(self, s, z):
        return float(np.sum(s * z))


class _LpCone:
    def __init__(self, f0, b_csr, norm):
        self.dim = f0.shape[0]
        self.f0 = f0
        self.b = b_csr
        self.bt = b_csr.T.tocsr()
        self.norm = norm
        self.degree = self.dim

    def init_point(self):
        eta = 1.0 + np.abs(self.f0).max(initial=0.0)
        return eta * np.ones(self.dim), np.ones(self.dim)

    def svec(self, v):
        return v

    def smat(self, v):
        return v

    def nt_data(self, s, z):
        return z / s, 1.0 / s

    @staticmethod
    def gmul(g, vec):
        return g * vec

    @staticmethod
    def max_step(x, dx):
        neg = dx < 0
        if not np.any(neg):
            return np.inf
        return float(np.min(-x[neg] / dx[neg]))

    def inner(self, s, z):
        return float(np.dot(s, z))


def _compile(problem: ConicProblem):
    m = problem.n_vars
    cones = []
    for blk in problem.blocks:
        rows, cols, scale = _tril_pairs(blk.dim)
        pair = np.zeros((blk.dim, blk.dim), dtype=int)
        pair[rows, cols] = np.arange(rows.shape[0])
        f0 = np.zeros(rows.shape[0])
        if blk._const_r:
            rr = np.asarray(blk._const_r)
            cc = np.asarray(blk._const_c)
            vv = np.asarray(blk._const_val)
            np.add.at(f0, pair[rr, cc], vv * np.where(rr == cc, 1.0, _SQRT2))
        if blk._ent_r:
            rr = np.asarray(blk._ent_r)
            cc = np.asarray(blk._ent_c)
            vv = np.asarray(blk._ent_val) * np.where(rr == cc, 1.0, _SQRT2)
            b = sp.coo_matrix((vv, (pair[rr, cc], np.asarray(blk._ent_v))),
                              shape=(rows.shape[0], m)).tocsr()
            b.sum_duplicates()
        else:
            b = sp.csr_matrix((rows.shape[0], m))
        norm = max(np.abs(f0).max(initial=0.0),
                   np.abs(b.data).max(initial=0.0), 1e-12)
        cones.append(_SdpCone(blk.dim, f0 / norm, b / norm, norm))

    if problem._ineq:
        data, rr, cc, h = [], [], [], []
        for i, (idx, coefs, rhs) in enumerate(problem._ineq):
            row_norm = max(np.abs(coefs).max(initial=0.0), abs(rhs), 1e-12)
            # slack = rhs - coef.x >= 0
            data.extend((-coefs / row_norm).tolist())
            rr.extend([i] * idx.shape[0])
            cc.extend(idx.tolist())
            h.append(rhs / row_norm)
        b = sp.coo_matrix((data, (rr, cc)), shape=(len(h), m)).tocsr()
        b.sum_duplicates()
        cones.append(_LpCone(np.asarray(h), b, 1.0))

    if problem._eq:
        rows = []
        rhs = []
        for idx, coefs, r in problem._eq:
            row_norm = max(np.abs(coefs).max(initial=0.0), abs(r), 1e-12)
            row = np.zeros(m)
            np.add.at(row, idx, coefs / row_norm)
            rows.append(row)
            rhs.append(r / row_norm)
        a_eq = np.asarray(rows)
        b_eq = np.asarray(rhs)
    else:
        a_eq = np.zeros((0, m))
        b_eq = np.zeros(0)

    return cones, a_eq, b_eq, problem.c


def solve(problem: ConicProblem, tol=GAP_TOL_DEFAULT, feas_tol=FEAS_TOL_DEFAULT,
          max_iter=MAX_ITER_DEFAULT, backend="native") -> ConicSolution:
    """Solve the problem; deterministic given inputs."""
    return _BACKENDS[backend](problem, tol, feas_tol, max_iter)


def _solve_native(problem, tol, feas_tol, max_iter):
    cones, a_eq, b_eq, c = _compile(problem)
    m = problem.n_vars
    n_eq = a_eq.shape[0]
    total_deg = sum(k.degree for k in cones)
    if total_deg == 0:
        raise ValueError("problem has no conic blocks")

    x = np.zeros(m)
    y = np.zeros(n_eq)
    s_list, z_list = [], []
    for k in cones:
        s, z = k.init_point()
        s_list.append(s)
        z_list.append(z)

    c_norm = 1.0 + np.abs(c).max(initial=0.0)
    status = "max_iter"
    it = 0
    best = None
    diverging = 0
    for it in range(1, max_iter + 1):
        r_p = [k.f0 + k.b @ x - k.svec(s_list[i]) for i, k in enumerate(cones)]
        r_e = b_eq - a_eq @ x
        zvec = [k.svec(z_list[i]) for i, k in enumerate(cones)]
        r_d = c - a_eq.T @ y
        for i, k in enumerate(cones):
            r_d = r_d - k.bt @ zvec[i]
        mu = sum(k.inner(s_list[i], z_list[i]) for i, k in enumerate(cones)) / total_deg

        pobj = float(c @ x)
        dobj = float(b_eq @ y) - sum(float(k.f0 @ zvec[i]) for i, k in enumerate(cones))
        relgap = abs(pobj - dobj) / (1.0 + abs(pobj) + abs(dobj))
        prinf = max((np.abs(rp).max(initial=0.0) for rp in r_p), default=0.0)
        einf = np.abs(r_e).max(initial=0.0)
        dinf = np.abs(r_d).max(initial=0.0) / c_norm
        merit = max(relgap, prinf, einf, dinf)
        if best is None or merit < best[0]:
            best = (merit, x.copy(), pobj, relgap, prinf, dinf)

        if relgap <= tol and prinf <= 10 * feas_tol and einf <= 10 * feas_tol \
                and dinf <= 10 * feas_tol:
            status = "optimal"
            break

        z_scale = max(np.abs(zv).max(initial=0.0) for zv in zvec)
        if z_scale > 1e9 and dinf < 1e-6 and dobj > 1e6 * (1.0 + abs(pobj)):
            diverging += 1
            if diverging >= 3:
                status = "infeasible"
                break
        else:
            diverging = 0

        # NT scaling and Schur complement
        h = np.zeros((m, m))
        g_list, sinv_list = [], []
        broke = False
        for i, k in enumerate(cones):
            with np.errstate(over="ignore", invalid="ignore"):
                g, sinv = k.nt_data(s_list[i], z_list[i])
            if not (np.all(np.isfinite(g)) and np.all(np.isfinite(sinv))):
                broke = True
                break
            g_list.append(g)
            sinv_list.append(sinv)
            if isinstance(k, _LpCone):
                h += (k.bt.multiply(g[None, :]) @ k.b).toarray()
            else:
                tmp = k.bt @ g                      # B^T G, dense
                h += (k.bt @ tmp.T).T
        if broke or not np.all(np.isfinite(h)):
            status = "max_iter"
            break
        h = 0.5 * (h + h.T)
        reg0 = 1e-13 * (1.0 + np.trace(h) / m)
        h_fac = None
        for attempt in range(6):
            try:
                h_fac = cho_factor(h + reg0 * (10.0 ** attempt) * np.eye(m))
                break
            except np.linalg.LinAlgError:
                continue
        if h_fac is None:
            status = "max_iter"
            break

        if n_eq:
            hi_at = cho_solve(h_fac, a_eq.T)
            kkt = a_eq @ hi_at

        def kkt_solve(g_rhs):
            hx = cho_solve(h_fac, g_rhs)
            if n_eq:
                dy = np.linalg.solve(kkt, r_e - a_eq @ hx)
                return hx + hi_at @ dy, dy
            return hx, np.zeros(0)

        base = -c + a_eq.T @ y
        h_sinv = np.zeros(m)
        for i, k in enumerate(cones):
            base = base - k.bt @ k.gmul(g_list[i], r_p[i])
            h_sinv = h_sinv + k.bt @ sinv_list[i]

        def directions(sig_mu):
            dx, dy = kkt_solve(sig_mu * h_sinv + base)
            ds, dz = [], []
            for i, k in enumerate(cones):
                rpb = r_p[i] + k.b @ dx
                ds.append(k.smat(rpb))
                dz.append(k.smat(sig_mu * sinv_list[i] - k.svec(z_list[i])
                                 - k.gmul(g_list[i], rpb)))
            return dx, dy, ds, dz

        def step_lengths(ds, dz, frac):
            ap = min((k.max_step(s_list[i], ds[i]) for i, k in enumerate(cones)),
                     default=np.inf)
            ad = min((k.max_step(z_list[i], dz[i]) for i, k in enumerate(cones)),
                     default=np.inf)
            return min(1.0, frac * ap), min(1.0, frac * ad)

        dx_a, dy_a, ds_a, dz_a = directions(0.0)
        ap, ad = step_lengths(ds_a, dz_a, 1.0)
        mu_aff = sum(k.inner(s_list[i] + ap * ds_a[i], z_list[i] + ad * dz_a[i])
                     for i, k in enumerate(cones)) / total_deg
        sigma = min(1.0, max(1e-10, (max(mu_aff, 0.0) / mu) ** 3))

        dx, dy, ds, dz = directions(sigma * mu)
        ap, ad = step_lengths(ds, dz, STEP_FRACTION)
        if ap < 1e-10 and ad < 1e-10:
            status = "max_iter"
            break

        x += ap * dx
        y += ad * dy
        for i in range(len(cones)):
            s_list[i] = s_list[i] + ap * ds[i]
            z_list[i] = z_list[i] + ad * dz[i]

    if status != "infeasible" and best is not None:
        _, x, pobj, relgap, prinf, dinf = best
    return ConicSolution(x=x, status=status, objective=float(c @ x),
                         gap=relgap, iterations=it,
                         primal_residual=float(max(prinf, einf)),
                         dual_residual=float(dinf))


_BACKENDS = {"native": _solve_native}


class SymmetricVariable:
    """Real symmetric matrix variable; x holds the literal lower-triangle entries."""

    def __init__(self, problem: ConicProblem, dim):
        self.dim = dim
        self.rows, self.cols = np.tril_indices(dim)
        self.idx = problem.new_vars(self.rows.shape[0])
        self._pos = {(int(r), int(c)): int(i)
                     for i, (r, c) in enumerate(zip(self.rows, self.cols))}

    def index(self, i, j):
        i, j = (i, j) if i >= j else (j, i)
        return self.idx[self._pos[(i, j)]]

    @property
    def diag_idx(self):
        return np.array([self.index(i, i) for i in range(self.dim)])

    def add_psd(self, problem: ConicProblem):
        blk = problem.add_lmi_block(self.dim)
        blk.add_entries(self.rows, self.cols, self.idx, np.ones_like(self.idx, dtype=float))
        return blk

    def trace_terms(self, c_mat):
        c_mat = np.asarray(c_mat, dtype=float)
        coefs = c_mat[self.rows, self.cols] + c_mat[self.cols, self.rows]
        coefs[self.rows == self.cols] *= 0.5
        return self.idx, coefs

    def value(self, x):
        m = np.zeros((self.dim, self.dim))
        m[self.rows, self.cols] = x[self.idx]
        return m + m.T - np.diag(np.diag(m))


class HermitianVariable:
    """Complex Hermitian matrix variable over dim^2 real parameters."""

    def __init__(self, problem: ConicProblem, dim):
        self.dim = dim
        self.off_r, self.off_c = np.tril_indices(dim, k=-1)
        n_off = self.off_r.shape[0]
        all_idx = problem.new_vars(dim + 2 * n_off)
        self.idx_diag = all_idx[:dim]
        self.idx_re = all_idx[dim: dim + n_off]
        self.idx_im = all_idx[dim + n_off:]

    def psd_entries(self, blk: LmiBlock, sign=1.0):
        """Write the [[Re,-Im],[Im,Re]] embedding entries into a 2*dim block."""
        d = self.dim
        for i in range(d):
            blk.add_entry(i, i, self.idx_diag[i], sign)
            blk.add_entry(d + i, d + i, self.idx_diag[i], sign)
        for p in range(self.off_r.shape[0]):
            i, j = int(self.off_r[p]), int(self.off_c[p])   # i > j, X_ij = u + iv
            blk.add_entry(i, j, self.idx_re[p], sign)
            blk.add_entry(d + i, d + j, self.idx_re[p], sign)
            blk.add_entry(d + j, i, self.idx_im[p], -sign)
            blk.add_entry(d + i, j, self.idx_im[p], sign)

    def add_psd(self, problem: ConicProblem):
        blk = problem.add_lmi_block(2 * self.dim)
        self.psd_entries(blk)
        return blk

    def real_trace_terms(self, c_mat):
        """Indices/coefficients of Re Tr{C X} as a linear form in the parameters."""
        c_mat = np.asarray(c_mat, dtype=complex)
        c_mat = 0.5 * (c_mat + c_mat.conj().T)
        idx = np.concatenate([self.idx_diag, self.idx_re, self.idx_im])
        c_ji = c_mat[self.off_c, self.off_r]
        coefs = np.concatenate([np.real(np.diag(c_mat)),
                                2.0 * c_ji.real, -2.0 * c_ji.imag])
        return idx, coefs

    def value(self, x):
        m = np.zeros((self.dim, self.dim), dtype=complex)
        m[np.arange(self.dim), np.arange(self.dim)] = x[self.idx_diag]
        m[self.off_r, self.off_c] = x[self.idx_re] + 1j * x[self.idx_im]
        m[self.off_c, self.off_r] = x[self.idx_re] - 1j * x[self.idx_im]
        return m


def epigraph_inverse_trace(problem: ConicProblem, u: SymmetricVariable):
    """Auxiliary V with [[V, I],[I, U]] >= 0, so min Tr V realizes Tr{U^-1}."""
    d = u.dim
    v = SymmetricVariable(problem, d)
    blk = problem.add_lmi_block(2 * d)
    for i in range(d):
        blk.add_const_entry(d + i, i, 1.0)
        for j in range(i + 1):
            blk.add_entry(i, j, v.index(i, j), 1.0)
            blk.add_entry(d + i, d + j, u.index(i, j), 1.0)
    return v
