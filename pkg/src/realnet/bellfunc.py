"""CHSH-type functionals on the swap scenario."""

from __future__ import annotations

import csv
import io
import itertools
import json
from dataclasses import dataclass

import numpy as np

from .netsim import N_B, N_X, N_Z, SIGNS, CorrelationTensor, bits
from .qcore import BELL_BITS, BELL_LABELS

SQRT2 = np.sqrt(2.0)
QUANTUM_MAX = 6 * SQRT2
CLASSICAL_BOUND = 6.0
REAL_BOUND = 7.6605
UNDEFINED_PB = 1e-12


def coefficient_table() -> np.ndarray:
    """``coef[b, x, z]`` such that ``T_b = sum_xz coef[b, x, z] * S^b_xz`` (0-based x, z)."""
    coef = np.zeros((N_B, N_X, N_Z))
    for b in range(N_B):
        b1, b2 = bits(b)
        s2, s1, s12 = (-1) ** b2, (-1) ** b1, (-1) ** (b1 + b2)
        terms = [
            (0, 0, s2), (0, 1, s2),
            (1, 0, s1), (1, 1, -s1),
            (0, 2, s2), (0, 3, s2),
            (2, 2, -s12), (2, 3, s12),
            (1, 4, s1), (1, 5, s1),
            (2, 4, -s12), (2, 5, s12),
        ]
        for x, z, s in terms:
            coef[b, x, z] += s
    return coef


COEF = coefficient_table()
AC_SIGN = np.outer(SIGNS, SIGNS)  # a*c for index pairs


def correlators(t: CorrelationTensor) -> np.ndarray:
    """All ``S^b_xz = sum_ac a c P(a,b,c|x,z)`` as an array [b, x, z]; not divided by P(b)."""
    return np.einsum("bxzac,ac->bxz", t.p, AC_SIGN)


def correlator(t: CorrelationTensor, b: int, x: int, z: int) -> float:
    """``S^b_xz`` with 0-based indices."""
    if not (0 <= b < N_B and 0 <= x < N_X and 0 <= z < N_Z):
        raise IndexError(f"(b, x, z) = ({b}, {x}, {z}) out of range")
    return float(np.sum(t.p[b, x, z] * AC_SIGN))


def t_b(t: CorrelationTensor, b: int) -> float:
    if not 0 <= b < N_B:
        raise IndexError(f"b = {b} out of range")
    return float(np.sum(COEF[b] * correlators(t)[b]))


@dataclass(frozen=True)
class BellScore:
    per_b: tuple[float, float, float, float]
    total: float
    p_b: tuple[float, float, float, float]

    def conditional(self, b: int) -> float | None:
        """``T_b / P(b)``; None when Bob's outcome has (numerically) zero probability."""
        if self.p_b[b] < UNDEFINED_PB:
            return None
        return self.per_b[b] / self.p_b[b]

    def to_dict(self) -> dict:
        return {
            "t_b": {BELL_BITS[b]: self.per_b[b] for b in range(N_B)},
            "total": self.total,
            "p_b": {BELL_BITS[b]: self.p_b[b] for b in range(N_B)},
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_dict(cls, payload: dict) -> BellScore:
        per_b = tuple(float(payload["t_b"][k]) for k in BELL_BITS)
        p_b = tuple(float(payload["p_b"][k]) for k in BELL_BITS)
        return cls(per_b, float(payload["total"]), p_b)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["b", "label", "p_b", "t_b", "t_b_conditional"])
        for b in range(N_B):
            cond = self.conditional(b)
            w.writerow([BELL_BITS[b], BELL_LABELS[b], repr(self.p_b[b]), repr(self.per_b[b]),
                        "undefined" if cond is None else repr(cond)])
        return buf.getvalue()


def t_total(t: CorrelationTensor) -> BellScore:
    s = correlators(t)
    per_b = tuple(float(np.sum(COEF[b] * s[b])) for b in range(N_B))
    return BellScore(per_b, float(sum(per_b)), tuple(float(v) for v in t.p_b()))


def t_value(t: CorrelationTensor) -> float:
    return t_total(t).total


def chsh(e: np.ndarray, x1: int, x2: int, z1: int, z2: int) -> float:
    """``<A1 C1> + <A1 C2> + <A2 C1> - <A2 C2>`` with 0-based settings."""
    return float(e[x1, z1] + e[x1, z2] + e[x2, z1] - e[x2, z2])


def chsh3_value(e, standard: bool = False, tol: float = 1e-9) -> float:
    """Sum of three CHSH expressions over a 3x6 table of correlators ``<A_x C_z>``.

    By default the third Alice setting enters with flipped sign, which is the
    variant that ``T_00 / P(00)`` equals. ``standard=True`` evaluates the plain
    combination ``CHSH(1,2;1,2) + CHSH(1,3;3,4) + CHSH(2,3;5,6)``. The two differ
    by relabeling Alice's third outcome, so both have local bound 6 and quantum
    maximum ``6 sqrt 2``.
    """
    e = np.asarray(e, dtype=float)
    if e.shape != (N_X, N_Z):
        raise ValueError(f"expected a 3x6 correlator table, got {e.shape}")
    if np.max(np.abs(e)) > 1 + tol:
        raise ValueError("correlators must lie in [-1, 1]")
    if not standard:
        e = e.copy()
        e[2] *= -1
    return chsh(e, 0, 1, 0, 1) + chsh(e, 0, 2, 2, 3) + chsh(e, 1, 2, 4, 5)


def conditional_correlators(t: CorrelationTensor, b: int) -> np.ndarray | None:
    pb = t.p_b()[b]
    if pb < UNDEFINED_PB:
        return None
    return correlators(t)[b] / pb


def deterministic_chsh3_max(standard: bool = False) -> float:
    """Exhaustive maximum over the 2^9 deterministic local assignments."""
    best = -np.inf
    for a in itertools.product((1, -1), repeat=N_X):
        for c in itertools.product((1, -1), repeat=N_Z):
            best = max(best, chsh3_value(np.outer(a, c), standard=standard))
    return best


def visibility_threshold(bound: float) -> float:
    """Per-link visibility at which ``6 sqrt2 v^2`` reaches ``bound``."""
    if not 0 <= bound <= QUANTUM_MAX * (1 + 1e-15):
        raise ValueError(f"bound must lie in [0, 6*sqrt(2)], got {bound}")
    return float(np.sqrt(bound / QUANTUM_MAX))


def grid_threshold(bound: float, step: float = 1e-4) -> float:
    """Smallest grid point v with ``6 sqrt2 v^2 > bound``."""
    n = int(round(1 / step))
    v = np.arange(n + 1) / n
    hits = np.nonzero(QUANTUM_MAX * v ** 2 > bound)[0]
    if hits.size == 0:
        raise ValueError("no visibility in [0, 1] exceeds the bound")
    return float(v[hits[0]])
