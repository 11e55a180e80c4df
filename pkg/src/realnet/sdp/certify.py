"""Upper-bound certificates from dual solutions.

For any symmetric ``W_j`` and any ``lam`` write
``r = c + sum_j F_j^*(W_j) - A_eq^T lam``. Every feasible ``y`` then obeys::

    c.y = sum_j <W_j, F_j0> + b_eq.lam + r.y - sum_j <W_j, F_j(y)>

so with ``W_j`` projected onto the PSD cone and ``|y_i| <= var_bound``::

    c.y <= dual value + |r|_1 * var_bound

The projection shifts all of the negative part of ``W`` into ``r``; nothing is
dropped, which keeps the bound valid in exact arithmetic up to the floating-point
error of the residual evaluation itself.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse.linalg as spla

from .problem import SdpProblem
from .solver import INFEASIBLE, SdpSolution


class CertificateError(ValueError):
    """Raised when a dual solution cannot be turned into a bound."""


@dataclass(frozen=True)
class Certificate:
    bound: float
    dual_value: float
    residual_l1: float
    residual_max: float
    correction: float
    min_dual_eig: float
    var_bound: float | None

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def _psd_part(w: np.ndarray, kind: str) -> tuple[np.ndarray, float]:
    if kind == "diag":
        d = np.diag(w).copy()
        return np.diag(np.maximum(d, 0.0)), float(d.min(initial=0.0))
    ev, vec = np.linalg.eigh(0.5 * (w + w.T))
    return (vec * np.maximum(ev, 0.0)) @ vec.T, float(ev[0])


def certificate(p: SdpProblem, sol: SdpSolution, var_bound: float | None = None,
                tol: float = 1e-8, refine: bool = True) -> Certificate:
    """Rigorous (up to rounding) upper bound on ``max c.y`` from ``sol``'s dual blocks.

    ``var_bound`` bounds ``|y_i|`` over the feasible set; it defaults to
    ``p.metadata["var_bound"]``. Without it the residual must be below ``tol``
    and the bound is the plain dual value.
    """
    if sol.status == INFEASIBLE or not sol.dual_blocks:
        raise CertificateError(f"no dual point attached (status {sol.status})")
    if var_bound is None:
        var_bound = p.metadata.get("var_bound")
    ws, min_eig = [], 0.0
    for blk, wb in zip(p.blocks, sol.dual_blocks):
        w, lo = _psd_part(np.asarray(wb.data.real), blk.kind)
        ws.append(w)
        min_eig = min(min_eig, lo)
    grad = p.objective.copy()
    const = 0.0
    for blk, w in zip(p.blocks, ws):
        c0, vec = blk.adjoint(w, p.n_vars)
        grad += vec
        const += c0
    at = p.eq_matrix.T.tocsr()
    lam = np.zeros(p.n_eq) if sol.eq_dual is None else np.asarray(sol.eq_dual, dtype=float).copy()
    if p.n_eq and refine:
        # least-squares correction of lam against the remaining residual
        res = grad - at @ lam
        delta = spla.lsqr(at, res, atol=1e-15, btol=1e-15, iter_lim=20000)[0]
        if np.linalg.norm(grad - at @ (lam + delta), 1) < np.linalg.norm(res, 1):
            lam = lam + delta
    r = grad - at @ lam if p.n_eq else grad
    dual = const + float(p.eq_rhs @ lam)
    r1 = float(np.sum(np.abs(r)))
    rmax = float(np.max(np.abs(r), initial=0.0))
    if var_bound is None:
        if rmax > tol:
            raise CertificateError(
                f"dual residual {rmax:.3e} exceeds {tol:.1e} and no variable bound is known")
        corr = 0.0
    else:
        corr = r1 * float(var_bound)
    if not math.isfinite(dual + corr):
        raise CertificateError("non-finite dual value")
    return Certificate(dual + corr, dual, r1, rmax, corr, min_eig, var_bound)


def certify_upper_bound(p: SdpProblem, sol: SdpSolution, var_bound: float | None = None,
                        tol: float = 1e-8) -> float:
    return certificate(p, sol, var_bound, tol).bound


@dataclass(frozen=True)
class InfeasibilityCertificate:
    """Normalized Farkas ray: ``W >= 0``, ``F^*(W) = A^T lam`` and ``<W, F0> + b.lam = -1``."""

    valid: bool
    ray_residual_l1: float
    var_bound: float | None
    margin: float

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def infeasibility_certificate(p: SdpProblem, ws: list[np.ndarray], lam: np.ndarray | None,
                              var_bound: float | None = None,
                              tol: float = 1e-8) -> InfeasibilityCertificate:
    """Check a dual ray proving that ``p`` has no feasible point.

    For feasible ``y`` one has ``0 <= sum <W, F(y)> = <W, F0> + b.lam + r.y`` with
    ``r = F^*(W) - A^T lam``; after scaling to ``<W, F0> + b.lam = -1`` the ray is
    conclusive when ``|r|_1 * var_bound < 1`` (or ``|r|_max <= tol`` with no bound).
    With ``lam=None`` the multipliers are the least-squares fit of ``A^T lam = F^*(W)``.
    """
    if var_bound is None:
        var_bound = p.metadata.get("var_bound")
    psd = [_psd_part(np.asarray(w, dtype=float), blk.kind)[0] for blk, w in zip(p.blocks, ws)]
    const = 0.0
    grad = np.zeros(p.n_vars)
    for blk, w in zip(p.blocks, psd):
        c0, vec = blk.adjoint(w, p.n_vars)
        const += c0
        grad += vec
    if lam is None:
        lam = (spla.lsqr(p.eq_matrix.T.tocsr(), grad, atol=1e-15, btol=1e-15, iter_lim=20000)[0]
               if p.n_eq else np.zeros(0))
    lam = np.asarray(lam, dtype=float)
    r = grad - p.eq_matrix.T @ lam
    level = const + float(p.eq_rhs @ lam)
    if not level < 0:
        return InfeasibilityCertificate(False, math.inf, var_bound, -math.inf)
    r1 = float(np.sum(np.abs(r))) / -level
    if var_bound is None:
        ok = float(np.max(np.abs(r), initial=0.0)) / -level <= tol
        return InfeasibilityCertificate(ok, r1, None, 1.0 if ok else -math.inf)
    margin = 1.0 - r1 * var_bound
    return InfeasibilityCertificate(margin > 0, r1, var_bound, margin)
