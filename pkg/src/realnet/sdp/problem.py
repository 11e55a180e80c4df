"""Solver-agnostic SDP container.

Sign conventions (fixed for the whole package)::

    maximize    c . y
    subject to  F_j(y) = F_j0 + sum_i y_i F_ji  >= 0     for every block j
                A_eq y = b_eq

``y`` are free scalars. A block of kind ``"psd"`` requires F_j(y) to be
positive semidefinite, a block of kind ``"diag"`` carries only diagonal entries
and requires each of them to be nonnegative. The Lagrange dual is::

    minimize    sum_j <W_j, F_j0> + b_eq . lam
    subject to  c_i + sum_j <W_j, F_ji> - (A_eq^T lam)_i = 0,   W_j >= 0

and weak duality gives ``c . y <= dual value`` for any feasible pair.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp


@dataclass
class Block:
    """Coefficient triplets of one block, upper triangle only (``row <= col``).

    ``var == -1`` marks the constant term F_j0.
    """

    name: str
    size: int
    kind: str = "psd"
    var: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    row: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    col: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    val: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self):
        if self.kind not in ("psd", "diag"):
            raise ValueError(f"unknown block kind {self.kind!r}")
        var = np.asarray(self.var, dtype=np.int64)
        row = np.asarray(self.row, dtype=np.int64)
        col = np.asarray(self.col, dtype=np.int64)
        val = np.asarray(self.val, dtype=float)
        lo, hi = np.minimum(row, col), np.maximum(row, col)
        self.var, self.row, self.col, self.val = _coalesce(var, lo, hi, val)

    @property
    def nnz(self) -> int:
        return self.val.size

    def check(self, n_vars: int) -> list[str]:
        bad = []
        if self.nnz:
            if self.var.min() < -1 or self.var.max() >= n_vars:
                bad.append(f"block {self.name}: variable index out of range")
            if self.row.min() < 0 or self.col.max() >= self.size:
                bad.append(f"block {self.name}: entry outside {self.size}x{self.size}")
            if self.kind == "diag" and np.any(self.row != self.col):
                bad.append(f"block {self.name}: off-diagonal entry in a diagonal block")
            if not np.all(np.isfinite(self.val)):
                bad.append(f"block {self.name}: non-finite coefficient")
        return bad

    def coefficients(self, n_vars: int) -> sp.csr_matrix:
        """Sparse (n_vars + 1, size*size) matrix; row 0 is F_0, row i+1 is F_i, both triangles filled."""
        off = self.row != self.col
        rows = np.concatenate([self.var, self.var[off]]) + 1
        cols = np.concatenate([self.row * self.size + self.col,
                               self.col[off] * self.size + self.row[off]])
        vals = np.concatenate([self.val, self.val[off]])
        return sp.csr_matrix((vals, (rows, cols)), shape=(n_vars + 1, self.size * self.size))

    def evaluate(self, y: np.ndarray) -> np.ndarray:
        """Dense F_j(y)."""
        coef = np.where(self.var >= 0, y[np.maximum(self.var, 0)], 1.0) * self.val
        m = np.zeros((self.size, self.size))
        np.add.at(m, (self.row, self.col), coef)
        off = self.row != self.col
        np.add.at(m, (self.col[off], self.row[off]), coef[off])
        return m

    def adjoint(self, w: np.ndarray, n_vars: int) -> tuple[float, np.ndarray]:
        """``(<W, F_0>, [<W, F_i>]_i)`` for a symmetric W."""
        weight = np.where(self.row == self.col, 1.0, 2.0) * self.val * w[self.row, self.col]
        const = float(weight[self.var < 0].sum())
        out = np.zeros(n_vars)
        np.add.at(out, self.var[self.var >= 0], weight[self.var >= 0])
        return const, out


def _coalesce(var, row, col, val):
    if var.size == 0:
        return var, row, col, val
    order = np.lexsort((col, row, var))
    var, row, col, val = var[order], row[order], col[order], val[order]
    key = np.stack([var, row, col])
    new = np.ones(var.size, dtype=bool)
    new[1:] = np.any(key[:, 1:] != key[:, :-1], axis=0)
    idx = np.cumsum(new) - 1
    summed = np.zeros(idx[-1] + 1)
    np.add.at(summed, idx, val)
    keep = summed != 0
    return var[new][keep], row[new][keep], col[new][keep], summed[keep]


@dataclass
class SdpProblem:
    n_vars: int
    objective: np.ndarray
    blocks: list[Block]
    eq_matrix: sp.csr_matrix
    eq_rhs: np.ndarray
    var_names: list[str] | None = None
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.objective = np.asarray(self.objective, dtype=float)
        self.eq_matrix = sp.csr_matrix(self.eq_matrix, shape=(self.eq_matrix.shape[0], self.n_vars))
        self.eq_matrix.sum_duplicates()
        self.eq_matrix.eliminate_zeros()
        self.eq_rhs = np.asarray(self.eq_rhs, dtype=float)

    @property
    def n_eq(self) -> int:
        return self.eq_matrix.shape[0]

    def violations(self) -> list[str]:
        bad = []
        if self.objective.shape != (self.n_vars,):
            bad.append("objective length does not match n_vars")
        elif not np.all(np.isfinite(self.objective)):
            bad.append("non-finite objective coefficient")
        if self.eq_rhs.shape != (self.n_eq,):
            bad.append("equality right-hand side has the wrong length")
        for blk in self.blocks:
            bad.extend(blk.check(self.n_vars))
        return bad

    def validate(self) -> SdpProblem:
        bad = self.violations()
        if bad:
            raise ValueError("malformed SdpProblem: " + "; ".join(bad))
        return self

    def evaluate(self, y: np.ndarray) -> list[np.ndarray]:
        return [blk.evaluate(y) for blk in self.blocks]

    def residuals(self, y: np.ndarray) -> dict:
        """Primal feasibility of a point: most negative block eigenvalue and equality residual."""
        worst = 0.0
        for blk, m in zip(self.blocks, self.evaluate(y)):
            lam = np.diag(m).min() if blk.kind == "diag" else np.linalg.eigvalsh(m)[0]
            worst = min(worst, float(lam))
        eq = float(np.max(np.abs(self.eq_matrix @ y - self.eq_rhs), initial=0.0))
        return {"min_eig": worst, "eq_residual": eq, "objective": float(self.objective @ y)}

    def with_equalities(self, rows: sp.spmatrix, rhs: np.ndarray) -> SdpProblem:
        return SdpProblem(self.n_vars, self.objective.copy(), self.blocks,
                          sp.vstack([self.eq_matrix, sp.csr_matrix(rows)]).tocsr(),
                          np.concatenate([self.eq_rhs, rhs]), self.var_names, dict(self.metadata))

    def with_objective(self, c: np.ndarray) -> SdpProblem:
        return SdpProblem(self.n_vars, c, self.blocks, self.eq_matrix, self.eq_rhs,
                          self.var_names, dict(self.metadata))

    def scaled_equalities(self, scale: np.ndarray) -> SdpProblem:
        """Same feasible set with equality row k multiplied by scale[k]."""
        d = sp.diags(np.asarray(scale, dtype=float))
        return SdpProblem(self.n_vars, self.objective, self.blocks, (d @ self.eq_matrix).tocsr(),
                          d @ self.eq_rhs, self.var_names, dict(self.metadata))

    def summary(self) -> dict:
        return {
            "n_vars": self.n_vars,
            "n_eq": self.n_eq,
            "blocks": [[b.name, b.size, b.kind] for b in self.blocks],
            "nnz": int(sum(b.nnz for b in self.blocks) + self.eq_matrix.nnz),
        }

    def to_dict(self) -> dict:
        """Debug dump: blocks as triplet lists, equalities as (row, var, value) triplets."""
        eq = self.eq_matrix.tocoo()
        return {
            "n_vars": self.n_vars,
            "objective": self.objective.tolist(),
            "blocks": [{"name": b.name, "size": b.size, "kind": b.kind,
                        "entries": np.stack([b.var, b.row, b.col]).T.tolist(),
                        "values": b.val.tolist()} for b in self.blocks],
            "equalities": {"triplets": np.stack([eq.row, eq.col]).T.tolist(),
                           "values": eq.data.tolist(), "rhs": self.eq_rhs.tolist()},
            "var_names": self.var_names,
            "metadata": self.metadata,
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


def equality_rows(rows: list[dict[int, float]], n_vars: int) -> sp.csr_matrix:
    """Build a sparse matrix from a list of {var: coefficient} rows."""
    r, c, v = [], [], []
    for k, row in enumerate(rows):
        for var, coef in row.items():
            r.append(k)
            c.append(var)
            v.append(coef)
    return sp.csr_matrix((v, (r, c)), shape=(len(rows), n_vars))
