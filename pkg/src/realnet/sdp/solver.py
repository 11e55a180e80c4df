"""Dense primal-dual interior-point method for :class:`SdpProblem`.

Equalities are removed first: ``y = y0 + N z`` with ``N`` an orthonormal basis
of the null space of ``A_eq`` (rank decided by SVD with relative threshold
1e-10). What remains is the pair::

    maximize c'.z   s.t.  S = G_0 + sum_k z_k G_k >= 0
    minimize <W, G_0>   s.t.  <W, G_k> = -c'_k,  W >= 0

solved by an infeasible-start path-following method with Nesterov-Todd scaling
and a Mehrotra predictor-corrector, forming and factoring the Schur complement
densely. Sized for blocks up to a few dozen rows and a few thousand free
variables.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from ..qcore import DenseMatrix
from .problem import SdpProblem

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
FAILURE = "numerical-failure"


@dataclass
class SolverOptions:
    gap_tol: float = 1e-7
    feas_tol: float = 1e-8
    max_iter: int = 100
    rank_tol: float = 1e-10
    step: float = 0.98
    infeas_tol: float = 1e-8
    verbose: bool = False


@dataclass
class SdpSolution:
    status: str
    primal_value: float
    dual_value: float
    primal_blocks: list[DenseMatrix]
    dual_blocks: list[DenseMatrix]
    iterations: int
    duality_gap: float
    y: np.ndarray | None = None
    eq_dual: np.ndarray | None = None
    solver: str = "ipm"
    info: dict = field(default_factory=dict)

    def dual_matrices(self) -> list[np.ndarray]:
        return [b.data.real for b in self.dual_blocks]

    def to_dict(self) -> dict:
        return {
            "status": self.status,
            "solver": self.solver,
            "primal_value": self.primal_value,
            "dual_value": self.dual_value,
            "duality_gap": self.duality_gap,
            "iterations": self.iterations,
            "info": self.info,
        }


@dataclass
class _Reduced:
    """Equality-free problem in the z coordinates."""

    y0: np.ndarray
    null: np.ndarray
    c: np.ndarray
    g0: list[np.ndarray]  # per block: psd -> (s, s); diag -> (s,)
    g: list[np.ndarray]  # per block: psd -> (nz, s, s); diag -> (nz, s)
    kinds: list[str]
    eq_residual: float


def reduce_equalities(p: SdpProblem, rank_tol: float = 1e-10) -> _Reduced:
    n = p.n_vars
    if p.n_eq:
        a = p.eq_matrix.toarray()
        u, sv, vt = np.linalg.svd(a, full_matrices=True)
        rank = int(np.sum(sv > rank_tol * max(sv[0], 1.0))) if sv.size else 0
        y0 = vt[:rank].T @ ((u[:, :rank].T @ p.eq_rhs) / sv[:rank])
        null = vt[rank:].T
        eq_res = float(np.max(np.abs(a @ y0 - p.eq_rhs), initial=0.0))
    else:
        y0 = np.zeros(n)
        null = np.eye(n)
        eq_res = 0.0
    g0, g, kinds = [], [], []
    for blk in p.blocks:
        coef = blk.coefficients(n)
        const = np.asarray(coef[0].todense()).ravel() + coef[1:].T @ y0
        lin = (coef[1:].T @ null).T  # (nz, size*size)
        s = blk.size
        if blk.kind == "diag":
            diag = np.arange(s) * s + np.arange(s)
            g0.append(const[diag])
            g.append(lin[:, diag])
        else:
            g0.append(const.reshape(s, s))
            g.append(lin.reshape(-1, s, s))
        kinds.append(blk.kind)
    return _Reduced(y0, null, null.T @ p.objective, g0, g, kinds, eq_res)


def _lmi(red: _Reduced, z: np.ndarray) -> list[np.ndarray]:
    out = []
    for k, g0, g in zip(red.kinds, red.g0, red.g):
        out.append(g0 + np.tensordot(z, g, axes=1))
    return out


def _adj(red: _Reduced, w: list[np.ndarray]) -> np.ndarray:
    out = np.zeros(red.c.size)
    for k, g, wb in zip(red.kinds, red.g, w):
        out += g.reshape(g.shape[0], -1) @ wb.ravel()
    return out


def _inner(kinds, a, b) -> float:
    return float(sum(np.sum(x * y) for x, y in zip(a, b)))


def _sym(m):
    return 0.5 * (m + m.T)


def _nt_scaling(s: np.ndarray, w: np.ndarray) -> np.ndarray:
    ev, vec = np.linalg.eigh(s)
    ev = np.maximum(ev, 1e-300)
    sh = (vec * np.sqrt(ev)) @ vec.T
    shi = (vec / np.sqrt(ev)) @ vec.T
    q = _sym(sh @ w @ sh)
    qe, qv = np.linalg.eigh(q)
    qh = (qv * np.sqrt(np.maximum(qe, 0.0))) @ qv.T
    return _sym(shi @ qh @ shi)


def _scaled_point(nt: np.ndarray, s: np.ndarray):
    """NT square roots and the eigen-decomposition of ``V = nt^(1/2) S nt^(1/2)``."""
    ev, vec = np.linalg.eigh(nt)
    ev = np.maximum(ev, 1e-300)
    rh = (vec * np.sqrt(ev)) @ vec.T
    rhi = (vec / np.sqrt(ev)) @ vec.T
    lam, q = np.linalg.eigh(_sym(rh @ s @ rh))
    return rh, rhi, np.maximum(lam, 1e-15 * max(lam[-1], 1e-300)), q


def _max_step(x: np.ndarray, dx: np.ndarray, kind: str) -> float:
    """Largest alpha <= inf with x + alpha dx >= 0 (x strictly feasible)."""
    if kind == "diag":
        neg = dx < 0
        return float(np.min(-x[neg] / dx[neg])) if np.any(neg) else math.inf
    try:
        lc = np.linalg.cholesky(x)
    except np.linalg.LinAlgError:
        return 0.0
    t = sla.solve_triangular(lc, sla.solve_triangular(lc, dx, lower=True).T, lower=True)
    lam = np.linalg.eigvalsh(_sym(t))[0]
    return -1.0 / lam if lam < 0 else math.inf


def _inv(x: np.ndarray, kind: str) -> np.ndarray:
    return 1.0 / x if kind == "diag" else _sym(np.linalg.inv(x))


def _scale(x: np.ndarray, nt: np.ndarray, kind: str) -> np.ndarray:
    return nt * x if kind == "diag" else nt @ x @ nt


def _schur(red: _Reduced, nts: list[np.ndarray]) -> np.ndarray:
    nz = red.c.size
    m = np.zeros((nz, nz))
    for kind, g, nt in zip(red.kinds, red.g, nts):
        if kind == "diag":
            m += (g * nt) @ g.T
        else:
            sg = np.einsum("ij,kjl,lm->kim", nt, g, nt, optimize=True)
            m += g.reshape(nz, -1) @ sg.reshape(nz, -1).T
    return _sym(m)


def _solve_schur(m: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    scale = max(np.max(np.abs(np.diag(m))), 1e-300)
    try:
        cf = sla.cho_factor(m + 1e-14 * scale * np.eye(m.shape[0]))
        return sla.cho_solve(cf, rhs)
    except np.linalg.LinAlgError:
        return np.linalg.lstsq(m, rhs, rcond=None)[0]


def solve(p: SdpProblem, opts: SolverOptions | None = None, **kw) -> SdpSolution:
    """Solve ``p`` (maximization form, see :mod:`realnet.sdp.problem`)."""
    opts = opts or SolverOptions(**kw)
    p.validate()
    red = reduce_equalities(p, opts.rank_tol)
    if red.eq_residual > 1e-8 * (1 + np.max(np.abs(p.eq_rhs), initial=0.0)):
        return _finish(p, red, None, None, INFEASIBLE, 0, {"reason": "inconsistent equalities",
                                                             "eq_residual": red.eq_residual})
    kinds = red.kinds
    nz = red.c.size
    norm_g0 = max(1.0, max(np.max(np.abs(g)) for g in red.g0))
    norm_c = max(1.0, np.max(np.abs(red.c), initial=0.0))
    xi = 10.0 * max(norm_g0, norm_c)

    def eye(kind, g0):
        return np.ones(g0.shape[0]) if kind == "diag" else np.eye(g0.shape[0])

    offset = float(p.objective @ red.y0)
    z = np.zeros(nz)
    s = [xi * eye(k, g0) for k, g0 in zip(kinds, red.g0)]
    w = [xi * eye(k, g0) for k, g0 in zip(kinds, red.g0)]
    dim = sum(g0.shape[0] for g0 in red.g0)
    status, info = FAILURE, {}
    it = 0
    stalled = 0
    for it in range(1, opts.max_iter + 1):
        f = _lmi(red, z)
        rp = [si - fi for si, fi in zip(s, f)]
        rd = red.c + _adj(red, w)
        mu = _inner(kinds, s, w) / dim
        pobj = offset + float(red.c @ z)
        dobj = offset + _inner(kinds, w, red.g0)
        pinf = max(np.max(np.abs(r)) for r in rp) / norm_g0
        dinf = np.max(np.abs(rd), initial=0.0) / norm_c
        gap = abs(dobj - pobj) / (1 + abs(pobj) + abs(dobj))
        if opts.verbose:
            print(f"{it:3d} pobj {pobj:+.9e} dobj {dobj:+.9e} gap {gap:.2e} pinf {pinf:.2e} "
                  f"dinf {dinf:.2e} mu {mu:.2e}")
        if gap <= opts.gap_tol and pinf <= opts.feas_tol and dinf <= opts.feas_tol:
            status = OPTIMAL
            break
        # Farkas-type certificate of primal infeasibility: W >= 0, G*(W) = 0, <W, G0> < 0
        if dobj - offset < 0:
            scale = offset - dobj
            if np.max(np.abs(_adj(red, w)), initial=0.0) / scale <= opts.infeas_tol and \
                    all(np.max(np.abs(x)) / scale < 1e12 for x in w):
                status = INFEASIBLE
                info = {"reason": "dual ray", "ray_residual": float(
                    np.max(np.abs(_adj(red, w)), initial=0.0) / scale)}
                break
        if not np.isfinite(mu) or mu > 1e30:
            break
        nts, sinv, roots = [], [], []
        for k, si, wi in zip(kinds, s, w):
            nts.append(wi / si if k == "diag" else _nt_scaling(si, wi))
            sinv.append(_inv(si, k))
            roots.append(None if k == "diag" else _scaled_point(nts[-1], si))
        m = _schur(red, nts)

        def direction(rc):
            rhs = _adj(red, [rci + _scale(rpi, nt, k) for rci, rpi, nt, k in zip(rc, rp, nts, kinds)]) + rd
            dz = _solve_schur(m, rhs)
            gdz = [np.tensordot(dz, g, axes=1) for g in red.g]
            ds = [gi - rpi for gi, rpi in zip(gdz, rp)]
            dw = [rci - _scale(dsi, nt, k) for rci, dsi, nt, k in zip(rc, ds, nts, kinds)]
            dw = [x if k == "diag" else _sym(x) for x, k in zip(dw, kinds)]
            return dz, ds, dw

        def steps(ds, dw):
            ap = min([1.0] + [opts.step * _max_step(si, d, k) for si, d, k in zip(s, ds, kinds)])
            ad = min([1.0] + [opts.step * _max_step(wi, d, k) for wi, d, k in zip(w, dw, kinds)])
            return ap, ad

        rc_aff = [-wi for wi in w]
        dz, ds, dw = direction(rc_aff)
        if not np.all(np.isfinite(dz)):
            info["reason"] = "non-finite search direction"
            break
        ap, ad = steps(ds, dw)
        mu_aff = _inner(kinds, [si + ap * d for si, d in zip(s, ds)],
                        [wi + ad * d for wi, d in zip(w, dw)]) / dim
        sigma = min(1.0, (mu_aff / mu) ** 3) if mu > 0 else 0.0
        rc = []
        for k, wi, si_inv, dsa, dwa, sc in zip(kinds, w, sinv, ds, dw, roots):
            if k == "diag":
                rc.append(sigma * mu * si_inv - wi - dwa * dsa * si_inv)
            else:
                # second-order term in the scaled space, Lyapunov-solved against V
                rh, rhi, lam, q = sc
                dx = rhi @ dwa @ rhi
                dsc = rh @ dsa @ rh
                prod = q.T @ _sym(dx @ dsc) @ q
                corr = q @ (2 * prod / (lam[:, None] + lam[None, :])) @ q.T
                rc.append(sigma * mu * si_inv - wi - _sym(rh @ corr @ rh))
        dz, ds, dw = direction(rc)
        if not np.all(np.isfinite(dz)):
            info["reason"] = "non-finite search direction"
            break
        ap, ad = steps(ds, dw)
        stalled = stalled + 1 if max(ap, ad) < 0.05 else 0
        if stalled >= 5:
            info["reason"] = "step length stalled"
            break
        if opts.verbose:
            print(f"    ap {ap:.3f} ad {ad:.3f} sigma {sigma:.2e}")
        z = z + ap * dz
        s = [si + ap * d for si, d in zip(s, ds)]
        w = [wi + ad * d for wi, d in zip(w, dw)]
    info.update({"mu": float(mu)})
    return _finish(p, red, z, w, status, it, info)


def _finish(p: SdpProblem, red: _Reduced, z, w, status: str, it: int, info: dict) -> SdpSolution:
    if z is None:
        return SdpSolution(status, math.nan, math.nan, [], [], it, math.inf, None, None, "ipm", info)
    y = red.y0 + red.null @ z
    fblocks = p.evaluate(y)
    wfull = []
    for blk, wb in zip(p.blocks, w):
        wfull.append(np.diag(wb) if blk.kind == "diag" else _sym(wb))
    # equality multipliers from full-space stationarity c + F*(W) - A^T lam = 0
    grad = p.objective.copy()
    for blk, wb in zip(p.blocks, wfull):
        grad += blk.adjoint(wb, p.n_vars)[1]
    lam = np.linalg.lstsq(p.eq_matrix.toarray().T, grad, rcond=None)[0] if p.n_eq else np.zeros(0)
    primal = float(p.objective @ y)
    dual = float(sum(blk.adjoint(wb, p.n_vars)[0] for blk, wb in zip(p.blocks, wfull)) + p.eq_rhs @ lam)
    if status == INFEASIBLE:
        primal, dual = -math.inf, -math.inf
    return SdpSolution(status, primal, dual,
                       [DenseMatrix(f) for f in fblocks], [DenseMatrix(x) for x in wfull],
                       it, abs(dual - primal) if status != INFEASIBLE else math.inf, y, lam, "ipm", info)
