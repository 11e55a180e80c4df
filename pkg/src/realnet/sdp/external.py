"""Bridge to the SCS splitting-conic solver.

Used as the reference external solver for instances too large for the dense
interior-point method and as a cross-check on small ones. SCS solves
``min c'x s.t. Ax + s = b, s in K``; the mapping is ``x = y``, ``c -> -c``,
equalities in the zero cone, diagonal blocks in the nonnegative cone and PSD
blocks in SCS's scaled lower-triangle vectorization (off-diagonals times
sqrt 2). The SCS multipliers give ``W`` (PSD part) and ``lam = y_zero``.
"""

from __future__ import annotations

import os
import time

import numpy as np
import scipy.sparse as sp

from ..qcore import DenseMatrix
from .problem import SdpProblem
from .solver import FAILURE, INFEASIBLE, OPTIMAL, SdpSolution

SQRT2 = np.sqrt(2.0)


def _svec_index(r: np.ndarray, c: np.ndarray, n: int) -> np.ndarray:
    """Position of entry (c, r), r <= c, in column-major lower-triangle order."""
    return r * n - r * (r - 1) // 2 + (c - r)


def to_scs(p: SdpProblem) -> tuple[dict, dict, list[tuple[str, int, int]]]:
    """SCS data, cone dict and the row layout [(kind, offset, size)] of the blocks."""
    p.validate()
    n = p.n_vars
    mats = [p.eq_matrix]
    rhs = [p.eq_rhs]
    offset = p.n_eq
    n_lin = 0
    layout: list[tuple[str, int, int] | None] = [None] * len(p.blocks)
    # SCS wants all nonnegative rows before all PSD rows
    for order_kind in ("diag", "psd"):
        for bi, blk in enumerate(p.blocks):
            if blk.kind != order_kind:
                continue
            lin = blk.var >= 0
            if blk.kind == "diag":
                rows, scale, length = blk.row, np.ones(blk.nnz), blk.size
                n_lin += blk.size
            else:
                rows = _svec_index(blk.row, blk.col, blk.size)
                scale = np.where(blk.row == blk.col, 1.0, SQRT2)
                length = blk.size * (blk.size + 1) // 2
            a = sp.csr_matrix((-(blk.val * scale)[lin], (rows[lin], blk.var[lin])), shape=(length, n))
            b = np.zeros(length)
            np.add.at(b, rows[~lin], (blk.val * scale)[~lin])
            mats.append(a)
            rhs.append(b)
            layout[bi] = (blk.kind, offset, blk.size)
            offset += length
    data = {"A": sp.vstack(mats).tocsc(), "b": np.concatenate(rhs), "c": -p.objective}
    cones = {"z": p.n_eq, "l": n_lin, "s": [b.size for b in p.blocks if b.kind == "psd"]}
    return data, cones, layout


def _unsvec(v: np.ndarray, n: int) -> np.ndarray:
    m = np.zeros((n, n))
    r, c = np.triu_indices(n)
    vals = v[_svec_index(r, c, n)] / np.where(r == c, 1.0, SQRT2)
    m[r, c] = vals
    m[c, r] = vals
    return m


def _blocks(vec: np.ndarray, layout) -> list[np.ndarray]:
    out = []
    for kind, off, size in layout:
        if kind == "diag":
            out.append(np.diag(vec[off:off + size]))
        else:
            out.append(_unsvec(vec[off:off + size * (size + 1) // 2], size))
    return out


def solve_scs(p: SdpProblem, eps: float = 1e-7, max_iters: int = 200_000,
              time_limit: float | None = None, verbose: bool = False, **settings) -> SdpSolution:
    import scs

    threads = os.environ.get("REALNET_MAX_THREADS")
    if threads:
        os.environ.setdefault("OMP_NUM_THREADS", threads)
    data, cones, layout = to_scs(p)
    opts = dict(eps_abs=eps, eps_rel=eps, eps_infeas=1e-9, max_iters=max_iters, verbose=verbose)
    if time_limit:
        opts["time_limit_secs"] = float(time_limit)
    opts.update(settings)
    t0 = time.time()
    solver = scs.SCS(data, cones, **opts)
    res = solver.solve()
    info = res["info"]
    status = info["status"]
    extra = {"scs_status": status, "solve_time": time.time() - t0,
             "res_pri": info.get("res_pri"), "res_dual": info.get("res_dual"),
             "gap": info.get("gap"), "eps": eps}
    y = np.asarray(res["y"])
    ws = _blocks(y, layout)
    lam = y[:p.n_eq]
    if status in ("infeasible", "infeasible_inaccurate"):
        return SdpSolution(INFEASIBLE, -np.inf, -np.inf, [], [DenseMatrix(w) for w in ws],
                           info["iter"], np.inf, None, lam, "scs", extra)
    x = np.asarray(res["x"])
    primal = float(p.objective @ x)
    w_dense = [DenseMatrix(w) for w in ws]
    dual = float(sum(blk.adjoint(w, p.n_vars)[0] for blk, w in zip(p.blocks, ws)) + p.eq_rhs @ lam)
    ok = status == "solved"
    return SdpSolution(OPTIMAL if ok else FAILURE, primal, dual,
                       [DenseMatrix(f) for f in p.evaluate(x)], w_dense,
                       info["iter"], abs(dual - primal), x, lam, "scs", extra)
