"""SDPA sparse (``.dat-s``) reader and writer.

SDPA's primal reads ``minimize sum_i c_i x_i  s.t.  sum_i x_i F_i - F_0 >= 0``.
An :class:`SdpProblem` maps onto it with ``x = y``, ``c -> -c`` and
``F_0 -> -F_0``. Equalities ``a.y = b`` become the inequality pair
``a.y - b >= 0`` and ``-a.y + b >= 0`` stored as consecutive diagonal entries of
one trailing diagonal block. On import a trailing diagonal block made only of
such exact negated pairs is turned back into equalities.

Layout written: line 1 the number of variables, line 2 the number of blocks,
line 3 block sizes (negative for diagonal blocks), line 4 the objective vector,
then ``k blk i j value`` with 1-based block and matrix indices and ``i <= j``.
No comment lines are written; on input, lines starting with ``*`` or ``"``
before the header are skipped.
"""

from __future__ import annotations

import io
import os
import re
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .problem import Block, SdpProblem


class SdpaFormatError(ValueError):
    def __init__(self, line: int, msg: str):
        super().__init__(f"line {line}: {msg}")
        self.line = line


def _fmt(v: float) -> str:
    return repr(float(v) + 0.0)


def dumps_sdpa(p: SdpProblem) -> str:
    p.validate()
    n_blocks = len(p.blocks) + (1 if p.n_eq else 0)
    sizes = [(-b.size if b.kind == "diag" else b.size) for b in p.blocks]
    if p.n_eq:
        sizes.append(-2 * p.n_eq)
    out = io.StringIO()
    out.write(f"{p.n_vars}\n{n_blocks}\n")
    out.write(" ".join(str(s) for s in sizes) + "\n")
    out.write(" ".join(_fmt(-c) for c in p.objective) + "\n")
    lines: list[tuple[int, int, int, int, float]] = []
    for bi, blk in enumerate(p.blocks, start=1):
        for v, i, j, val in zip(blk.var, blk.row, blk.col, blk.val):
            k = int(v) + 1
            lines.append((k, bi, int(i) + 1, int(j) + 1, -val if k == 0 else val))
    if p.n_eq:
        bi = len(p.blocks) + 1
        eq = p.eq_matrix.tocsr()
        for r in range(p.n_eq):
            lo, hi = eq.indptr[r], eq.indptr[r + 1]
            for sign, pos in ((1.0, 2 * r + 1), (-1.0, 2 * r + 2)):
                if p.eq_rhs[r] != 0:
                    lines.append((0, bi, pos, pos, sign * p.eq_rhs[r]))
                for v, val in zip(eq.indices[lo:hi], eq.data[lo:hi]):
                    lines.append((int(v) + 1, bi, pos, pos, sign * val))
    lines.sort(key=lambda t: t[:4])
    for k, bi, i, j, val in lines:
        out.write(f"{k} {bi} {i} {j} {_fmt(val)}\n")
    return out.getvalue()


def export_sdpa(p: SdpProblem, destination) -> None:
    """Write ``p`` to a path or text stream."""
    text = dumps_sdpa(p)
    if isinstance(destination, (str, os.PathLike)):
        Path(destination).write_text(text)
    else:
        destination.write(text)


_SPLIT = re.compile(r"[\s,{}()]+")


def _numbers(line: str) -> list[str]:
    return [t for t in _SPLIT.split(line.strip()) if t]


def loads_sdpa(text: str) -> SdpProblem:
    lines = text.splitlines()
    pos = 0
    while pos < len(lines) and (not lines[pos].strip() or lines[pos].lstrip()[:1] in ("*", '"')):
        pos += 1
    header: list[tuple[int, list[str]]] = []
    while len(header) < 4:
        if pos >= len(lines):
            raise SdpaFormatError(pos + 1, "unexpected end of file in header")
        toks = _numbers(lines[pos])
        if toks:
            header.append((pos + 1, toks))
        pos += 1
    try:
        n_vars = int(header[0][1][0])
    except ValueError:
        raise SdpaFormatError(header[0][0], "number of constraints must be an integer") from None
    try:
        n_blocks = int(header[1][1][0])
    except ValueError:
        raise SdpaFormatError(header[1][0], "number of blocks must be an integer") from None
    try:
        sizes = [int(float(t)) for t in header[2][1]]
    except ValueError:
        raise SdpaFormatError(header[2][0], "block sizes must be integers") from None
    if len(sizes) != n_blocks or any(s == 0 for s in sizes):
        raise SdpaFormatError(header[2][0], f"expected {n_blocks} nonzero block sizes, got {sizes}")
    try:
        cvec = np.array([float(t) for t in header[3][1]])
    except ValueError:
        raise SdpaFormatError(header[3][0], "objective vector must be numeric") from None
    if cvec.size != n_vars:
        raise SdpaFormatError(header[3][0], f"objective has {cvec.size} entries, expected {n_vars}")

    trip: list[list[tuple[int, int, int, float]]] = [[] for _ in range(n_blocks)]
    for ln in range(pos, len(lines)):
        toks = _numbers(lines[ln])
        if not toks:
            continue
        if len(toks) != 5:
            raise SdpaFormatError(ln + 1, f"expected 5 fields 'k blk i j value', got {len(toks)}")
        try:
            k, bi, i, j = (int(t) for t in toks[:4])
            val = float(toks[4])
        except ValueError:
            raise SdpaFormatError(ln + 1, "malformed entry") from None
        if not 0 <= k <= n_vars:
            raise SdpaFormatError(ln + 1, f"constraint index {k} outside 0..{n_vars}")
        if not 1 <= bi <= n_blocks:
            raise SdpaFormatError(ln + 1, f"block index {bi} outside 1..{n_blocks}")
        size = abs(sizes[bi - 1])
        if not (1 <= i <= size and 1 <= j <= size):
            raise SdpaFormatError(ln + 1, f"entry ({i}, {j}) outside block of size {size}")
        if sizes[bi - 1] < 0 and i != j:
            raise SdpaFormatError(ln + 1, "off-diagonal entry in a diagonal block")
        if not np.isfinite(val):
            raise SdpaFormatError(ln + 1, "non-finite value")
        trip[bi - 1].append((k, min(i, j) - 1, max(i, j) - 1, val))

    blocks = []
    eq_matrix = sp.csr_matrix((0, n_vars))
    eq_rhs = np.zeros(0)
    for bi, (size, entries) in enumerate(zip(sizes, trip)):
        var = np.array([e[0] - 1 for e in entries], dtype=np.int64)
        row = np.array([e[1] for e in entries], dtype=np.int64)
        col = np.array([e[2] for e in entries], dtype=np.int64)
        val = np.array([e[3] for e in entries], dtype=float)
        val = np.where(var < 0, -val, val)
        kind = "diag" if size < 0 else "psd"
        blk = Block(f"block_{bi + 1}", abs(size), kind, var, row, col, val)
        if bi == n_blocks - 1 and kind == "diag":
            pair = _equality_pairs(blk, n_vars)
            if pair is not None:
                eq_matrix, eq_rhs = pair
                continue
        blocks.append(blk)
    return SdpProblem(n_vars, -cvec, blocks, eq_matrix, eq_rhs,
                      metadata={"source": "sdpa"}).validate()


def _equality_pairs(blk: Block, n_vars: int):
    if blk.size % 2:
        return None
    coef = blk.coefficients(n_vars).tocsc()
    diag = np.arange(blk.size) * blk.size + np.arange(blk.size)
    m = coef[:, diag].T.tocsr()  # row r: (F0_r, F1_r, ...)
    up, down = m[0::2], m[1::2]
    if (up + down).nnz != 0:
        return None
    a = up[:, 1:].tocsr()
    b = -np.asarray(up[:, 0].todense()).ravel()
    return a, b


def import_sdpa(source) -> SdpProblem:
    """Read a path or text stream."""
    if isinstance(source, (str, os.PathLike)):
        text = Path(source).read_text()
    else:
        text = source.read()
    return loads_sdpa(text)
