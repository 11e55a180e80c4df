"""Self-testing machinery for the swap functional.

The extraction circuit acts on Alice's system A and Charlie's system C plus
four qubit ancillas. Internally the factor order is ``A, C, A', C', A'', C''``;
extracted states are reported on ``A', C', A'', C''`` (dims ``(2, 2, 2, 2)``) so
that ``|b><b|_{A'C'} (x) (...)_{A''C''}`` reads off directly. The
``A'A''|C'C''`` bipartition used by the partial-transpose test therefore
transposes factors ``(0, 2)`` of the reported state.

Two extraction routes exist. ``direct`` applies the circuit to the given
operators and conditional states. ``embedded`` first maps the Alice-Charlie
conditional states and operators to real ones with one flag qubit per party
(the conjugate-pair embedding of :mod:`realnet.realsim`) and then applies the real circuit; on the ideal
strategy this is the real object the impossibility argument talks about.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import bellfunc, qcore
from .netsim import N_B, Strategy, bits, correlations, ideal_strategy
from .qcore import HADAMARD, DenseMatrix, _arr

SQRT2 = math.sqrt(2.0)
ZERO_TOL = 1e-10
C_DISTANCE = 15 + 13 * SQRT2
C_NORM = 3 + SQRT2
REPORT_DIMS = (2, 2, 2, 2)  # A', C', A'', C''
PT_SYSTEMS = (0, 2)  # A', A'' in the reported order


def regularize(o, tol: float = ZERO_TOL) -> DenseMatrix:
    """Sign of a Hermitian operator with (numerically) zero eigenvalues sent to +1."""
    m = np.asarray(_arr(o), dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or np.max(np.abs(m - m.conj().T)) > 1e-9:
        raise ValueError("regularize needs a Hermitian matrix")
    ev, vec = np.linalg.eigh(0.5 * (m + m.conj().T))
    signs = np.where(np.abs(ev) <= tol, 1.0, np.sign(ev))
    out = (vec * signs) @ vec.conj().T
    if np.max(np.abs(m.imag)) == 0:
        out = out.real.astype(complex)
    return DenseMatrix(out)


def charlie_qubit_operators(charlie: Sequence) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Regularized ``X^C, Y^C, Z^C`` built from Charlie's six observables."""
    d_zx, e_zx, d_zy, e_zy = (np.asarray(_arr(o)) for o in charlie[:4])
    xc = regularize((d_zx - e_zx) / SQRT2).data
    yc = regularize((d_zy - e_zy) / SQRT2).data
    zc = regularize((d_zx + e_zx) / SQRT2).data
    return xc, yc, zc


def _check_involutions(ops: Sequence[np.ndarray], tol: float = 1e-9) -> None:
    for k, o in enumerate(ops):
        if np.max(np.abs(o - o.conj().T)) > tol or np.max(np.abs(o @ o - np.eye(o.shape[0]))) > tol:
            raise ValueError(f"operator {k} is not a Hermitian involution")


# ---------------------------------------------------------------------------
# the isometry


def _local(op: np.ndarray, pos: int, dims: Sequence[int]) -> np.ndarray:
    mats = [np.eye(d) for d in dims]
    mats[pos] = op
    out = mats[0]
    for m in mats[1:]:
        out = np.kron(out, m)
    return out


def _ctrl(u: np.ndarray, control: int, target: int, dims: Sequence[int]) -> np.ndarray:
    p0, p1 = np.diag([1.0, 0.0]), np.diag([0.0, 1.0])
    return _local(p0, control, dims) + _local(p1, control, dims) @ _local(u, target, dims)


def isometry_unitary(alice: Sequence, charlie: Sequence) -> np.ndarray:
    """Full unitary of the extraction circuit on ``A, C, A', C', A'', C''``."""
    za, xa, ya = (np.asarray(_arr(o), dtype=complex) for o in alice)
    _check_involutions([za, xa, ya] + [np.asarray(_arr(o), dtype=complex) for o in charlie])
    xc, yc, zc = charlie_qubit_operators(charlie)
    dims = (za.shape[0], xc.shape[0], 2, 2, 2, 2)
    a, c, a1, c1, a2, c2 = range(6)
    h = HADAMARD
    steps = [
        _local(h, a1, dims), _local(h, a2, dims), _local(h, c1, dims), _local(h, c2, dims),
        _ctrl(za, a1, a, dims), _ctrl(zc, c1, c, dims),
        _local(h, a1, dims), _local(h, c1, dims),
        _ctrl(xa, a1, a, dims), _ctrl(xc, c1, c, dims),
        _ctrl(ya @ xa, a2, a, dims), _ctrl(yc @ xc, c2, c, dims),
        _local(h, a2, dims), _local(h, c2, dims),
    ]
    u = np.eye(int(np.prod(dims)), dtype=complex)
    for g in steps:
        u = g @ u
    return u


def swap_isometry(alice: Sequence, charlie: Sequence, psi) -> qcore.Ket:
    """``U (x) V (|psi>_{AC} |0000>)`` with output factors ``A, C, A', C', A'', C''``."""
    vec = np.asarray(psi.amplitudes if isinstance(psi, qcore.Ket) else psi, dtype=complex).ravel()
    u = isometry_unitary(alice, charlie)
    anc = np.zeros(16)
    anc[0] = 1.0
    d_a, d_c = np.asarray(_arr(alice[0])).shape[0], np.asarray(_arr(charlie[0])).shape[0]
    if vec.size != d_a * d_c:
        raise qcore.DimensionError("psi does not live on A (x) C")
    out = u @ np.kron(vec, anc)
    return qcore.Ket(out, (d_a, d_c, 2, 2, 2, 2), normalized=False)


def extract_state(alice: Sequence, charlie: Sequence, omega) -> DenseMatrix:
    """Ancilla state ``tr_AC[U (omega (x) |0000><0000|) U^dag]`` on ``A', C', A'', C''``."""
    w = np.asarray(_arr(omega), dtype=complex)
    u = isometry_unitary(alice, charlie)
    d_ac = w.shape[0]
    big = np.zeros((d_ac * 16, d_ac * 16), dtype=complex)
    big[::16, ::16] = w
    out = u @ big @ u.conj().T
    out = out.reshape(d_ac, 16, d_ac, 16)
    return DenseMatrix(np.einsum("iaib->ab", out), REPORT_DIMS)


@dataclass(frozen=True)
class IsometryOutput:
    per_b_state: tuple[DenseMatrix, ...]
    weights: tuple[float, ...]
    summed_state: DenseMatrix
    route: str = "direct"

    def violations(self, tol: float = 1e-9) -> list[str]:
        bad = []
        total = sum(w * s.data for w, s in zip(self.weights, self.per_b_state))
        if np.max(np.abs(total - self.summed_state.data)) > 1e-10:
            bad.append("summed state differs from the weighted per-b states")
        for b, s in enumerate(self.per_b_state):
            if not s.is_psd(tol) or s.trace().real > 1 + tol:
                bad.append(f"state for b={b} is not a subnormalized PSD operator")
        return bad


def _ideal_pieces(s: Strategy, route: str):
    d_a, _, _, d_c = s.dims
    if route == "direct":
        return list(s.alice), list(s.charlie), [w for w in s.conditional_states()]
    if route == "embedded":
        from .realsim import _bipartite_state, embed_operator

        alice = [embed_operator(o) for o in s.alice]
        charlie = [embed_operator(o) for o in s.charlie]
        omegas = [_bipartite_state(w, d_a, d_c) for w in s.conditional_states()]
        return alice, charlie, omegas
    raise ValueError(f"unknown extraction route {route!r}")


def extraction(s: Strategy | None = None, route: str = "direct") -> IsometryOutput:
    """Per-b normalized extracted states and their P(b)-weighted sum."""
    s = ideal_strategy() if s is None else s
    alice, charlie, omegas = _ideal_pieces(s, route)
    states, weights = [], []
    summed = np.zeros((16, 16), dtype=complex)
    for w in omegas:
        pb = float(np.trace(w).real)
        weights.append(pb)
        if pb < bellfunc.UNDEFINED_PB:
            states.append(DenseMatrix(np.zeros((16, 16)), REPORT_DIMS))
            continue
        rho = extract_state(alice, charlie, w / pb)
        states.append(rho)
        summed += pb * rho.data
    return IsometryOutput(tuple(states), tuple(weights), DenseMatrix(summed, REPORT_DIMS), route)


def perfect_state(b: int) -> DenseMatrix:
    """``|b><b|_{A'C'} (x) (Psi+ + Phi-)/2`` with ``|b>`` the Bell state of label b."""
    bell = qcore.bell_basis()
    mix = 0.5 * (bell[1].projector().data + bell[2].projector().data)
    return DenseMatrix(np.kron(bell[b].projector().data, mix), REPORT_DIMS)


def summed_perfect_state() -> DenseMatrix:
    """``I/4 (x) (|i,i><i,i| + |-i,-i><-i,-i|)/2``."""
    pi, mi = qcore.plus_i().projector().data, qcore.minus_i().projector().data
    mix = 0.5 * (np.kron(pi, pi) + np.kron(mi, mi))
    return DenseMatrix(np.kron(np.eye(4) / 4, mix), REPORT_DIMS)


# ---------------------------------------------------------------------------
# SOS identities


def bell_operator(alice: Sequence, charlie: Sequence, b: int) -> np.ndarray:
    """``T_b`` as an operator on A (x) C (Alice's factor first)."""
    out = 0
    for x in range(3):
        for z in range(6):
            coef = bellfunc.COEF[b, x, z]
            if coef:
                out = out + coef * np.kron(np.asarray(_arr(alice[x])), np.asarray(_arr(charlie[z])))
    return out


def sos_terms(alice: Sequence, charlie: Sequence, b: int, which: int) -> list[np.ndarray]:
    """The six Hermitian operators whose squares sum to ``sqrt2 (6 sqrt2 I - T_b)``."""
    za, xa, ya = (np.asarray(_arr(o)) for o in alice)
    dzx, ezx, dzy, ezy, dxy, exy = (np.asarray(_arr(o)) for o in charlie)
    ia, ic = np.eye(za.shape[0]), np.eye(dzx.shape[0])
    b1, b2 = bits(b)
    s1, s2, s12 = (-1) ** b1, (-1) ** b2, (-1) ** (b1 + b2)

    def a(op):
        return np.kron(op, ic)

    def c(op):
        return np.kron(ia, op)

    if which == 1:
        return [
            a(s2 * za) - c(dzx + ezx) / SQRT2,
            a(s1 * xa) - c(dzx - ezx) / SQRT2,
            a(s2 * za) - c(dzy + ezy) / SQRT2,
            a(s12 * ya) + c(dzy - ezy) / SQRT2,
            a(s1 * xa) - c(dxy + exy) / SQRT2,
            a(s12 * ya) + c(dxy - exy) / SQRT2,
        ]
    if which == 2:
        return [
            c(dzx) - a(s2 * za + s1 * xa) / SQRT2,
            c(ezx) - a(s2 * za - s1 * xa) / SQRT2,
            c(dzy) - a(s2 * za - s12 * ya) / SQRT2,
            c(ezy) - a(s2 * za + s12 * ya) / SQRT2,
            c(dxy) - a(s1 * xa - s12 * ya) / SQRT2,
            c(exy) - a(s1 * xa + s12 * ya) / SQRT2,
        ]
    raise ValueError("which must be 1 or 2")


def verify_sos(b: int, alice: Sequence | None = None,
               charlie: Sequence | None = None) -> tuple[float, float]:
    """Operator-norm residuals of both SOS decompositions (ideal operators by default)."""
    if alice is None or charlie is None:
        s = ideal_strategy()
        alice = s.alice if alice is None else alice
        charlie = s.charlie if charlie is None else charlie
    alice = [np.asarray(_arr(o), dtype=complex) for o in alice]
    charlie = [np.asarray(_arr(o), dtype=complex) for o in charlie]
    _check_involutions(alice + charlie)
    target = SQRT2 * (6 * SQRT2 * np.eye(alice[0].shape[0] * charlie[0].shape[0])
                      - bell_operator(alice, charlie, b))
    out = []
    for which in (1, 2):
        total = sum(t @ t for t in sos_terms(alice, charlie, b, which))
        out.append(float(np.linalg.norm(total - target, 2)))
    return out[0], out[1]


def sos_annihilation(s: Strategy | None = None, b: int = 0) -> list[float]:
    """Norms ``||t |psi^b>||`` for the twelve SOS terms; all vanish at the maximal value."""
    s = ideal_strategy() if s is None else s
    psi = pure_conditional_state(s, b)
    terms = sos_terms(s.alice, s.charlie, b, 1) + sos_terms(s.alice, s.charlie, b, 2)
    return [float(np.linalg.norm(t @ psi)) for t in terms]


def operator_relations(s: Strategy | None = None, b: int = 0) -> dict:
    """Residual norms of the anticommutation and Charlie-to-Alice relations on ``psi^b``."""
    s = ideal_strategy() if s is None else s
    psi = pure_conditional_state(s, b)
    za, xa, ya = s.alice
    xc, yc, zc = charlie_qubit_operators(s.charlie)
    ic, ia = np.eye(xc.shape[0]), np.eye(za.shape[0])

    def on(op_a=None, op_c=None):
        return np.kron(ia if op_a is None else op_a, ic if op_c is None else op_c) @ psi

    # for b != 00 the Charlie-to-Alice maps pick up the signs of the first SOS
    b1, b2 = bits(b)
    s1, s2, s12 = (-1) ** b1, (-1) ** b2, (-1) ** (b1 + b2)
    return {
        "{X,Y}": float(np.linalg.norm(on(xa @ ya + ya @ xa))),
        "{X,Z}": float(np.linalg.norm(on(xa @ za + za @ xa))),
        "{Z,Y}": float(np.linalg.norm(on(za @ ya + ya @ za))),
        "Zc-Za": float(np.linalg.norm(on(op_c=zc) - s2 * on(za))),
        "Yc+Ya": float(np.linalg.norm(on(op_c=yc) + s12 * on(ya))),
        "Xc-Xa": float(np.linalg.norm(on(op_c=xc) - s1 * on(xa))),
    }


# ---------------------------------------------------------------------------
# distance to the partial-transpose invariant set


def _hermitian_basis(n: int) -> list[np.ndarray]:
    out = []
    for i in range(n):
        for j in range(i, n):
            m = np.zeros((n, n), dtype=complex)
            m[i, j] = m[j, i] = 1.0
            out.append(m)
            if i < j:
                m = np.zeros((n, n), dtype=complex)
                m[i, j], m[j, i] = -1j, 1j
                out.append(m)
    return out


def _real_embedding(m: np.ndarray) -> np.ndarray:
    return np.block([[m.real, -m.imag], [m.imag, m.real]])


def ppt_distance_problem(rho0, sys: Sequence[int] = PT_SYSTEMS, dims: Sequence[int] = REPORT_DIMS):
    """SDP ``max -2 tr P`` over states tau with ``tau^{T_sys} = tau``, ``P >= 0``, ``P >= tau - rho0``."""
    from .sdp.problem import Block, SdpProblem, equality_rows

    rho0 = np.asarray(_arr(rho0), dtype=complex)
    n = rho0.shape[0]
    basis = _hermitian_basis(n)
    k = len(basis)
    emb = np.array([_real_embedding(bm) for bm in basis])  # (k, 2n, 2n)
    iu, ju = np.triu_indices(2 * n)
    coef = emb[:, iu, ju]  # (k, n_upper)

    def block(name, sign_tau, sign_p, const):
        var, row, col, val = [], [], [], []
        for off, sign in ((0, sign_tau), (k, sign_p)):
            if sign == 0:
                continue
            kk, pos = np.nonzero(coef)
            var.append(kk + off)
            row.append(iu[pos])
            col.append(ju[pos])
            val.append(sign * coef[kk, pos])
        if const is not None:
            c = _real_embedding(const)[iu, ju]
            nz = np.nonzero(c)[0]
            var.append(-np.ones(nz.size, dtype=np.int64))
            row.append(iu[nz])
            col.append(ju[nz])
            val.append(c[nz])
        return Block(name, 2 * n, "psd", np.concatenate(var), np.concatenate(row),
                     np.concatenate(col), np.concatenate(val))

    blocks = [block("tau", 1, 0, None), block("P", 0, 1, None), block("N", -1, 1, rho0)]
    rows = [{i: float(np.trace(bm).real) for i, bm in enumerate(basis) if np.trace(bm).real}]
    rhs = [1.0]
    pt = np.array([qcore.partial_transpose(DenseMatrix(bm, dims), sys).data - bm for bm in basis])
    flat = np.concatenate([pt.reshape(k, -1).real, pt.reshape(k, -1).imag], axis=1)
    for col in np.nonzero(np.any(flat != 0, axis=0))[0]:
        rows.append({i: float(flat[i, col]) for i in np.nonzero(flat[:, col])[0]})
        rhs.append(0.0)
    objective = np.zeros(2 * k)
    for i, bm in enumerate(basis):
        objective[k + i] = -2.0 * float(np.trace(bm).real)
    eq = equality_rows(rows, 2 * k)
    # |tau_ij| <= 1 and |P_ij| <= 1 + 1 on the feasible set reached by the optimum; bound 2
    meta = {"scenario": "trace distance to the partial-transpose invariant set",
            "pt_systems": list(sys), "var_bound": 2.0}
    return SdpProblem(2 * k, objective, blocks, eq, np.array(rhs), metadata=meta)


@dataclass(frozen=True)
class PptDistance:
    value: float
    lower_bound: float
    upper_bound: float
    status: str
    iterations: int

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def ppt_distance_report(rho0, sys: Sequence[int] = PT_SYSTEMS, dims: Sequence[int] = REPORT_DIMS,
                        gap_tol: float = 1e-9) -> PptDistance:
    from .sdp.solver import solve

    rho = DenseMatrix(np.asarray(_arr(rho0), dtype=complex))
    if not rho.is_density(1e-8):
        raise ValueError("rho0 is not a density matrix")
    p = ppt_distance_problem(rho.data, sys, dims)
    sol = solve(p, gap_tol=gap_tol, feas_tol=1e-9)
    # primal point gives an achievable distance, the dual value a lower bound
    return PptDistance(-sol.primal_value, -sol.dual_value, -sol.primal_value, sol.status, sol.iterations)


def ppt_set_distance(rho0, sys: Sequence[int] = PT_SYSTEMS, dims: Sequence[int] = REPORT_DIMS) -> float:
    """``min ||tau - rho0||_1`` over states invariant under partial transposition of ``sys``."""
    return ppt_distance_report(rho0, sys, dims).value


# ---------------------------------------------------------------------------
# robustness budget


@dataclass(frozen=True)
class EpsilonBudget:
    epsilon: float
    epsilon1: float
    epsilon2: float
    eps1_bound: float
    eps2_bound: float

    @property
    def total(self) -> float:
        return self.eps1_bound + self.eps2_bound

    def to_dict(self) -> dict:
        d = {k: getattr(self, k) for k in self.__dataclass_fields__}
        d["total"] = self.total
        return d


def epsilon_budget(eps: float) -> EpsilonBudget:
    if eps < 0:
        raise ValueError("epsilon must be nonnegative")
    e1 = math.sqrt(SQRT2 * eps)
    e2 = C_DISTANCE * e1
    k = C_NORM * e1
    inner = (1 + (1 + k)) ** 2 / 4 - (1 - (k + e2 ** 2) / 2) ** 2
    b1 = 2 * math.sqrt(max(inner, 0.0))
    b2 = (7 + 3 * SQRT2) * e1 + 4 * (1 + k) * eps
    return EpsilonBudget(eps, e1, e2, b1, b2)


def critical_epsilon(rel_tol: float = 1e-10) -> float:
    """Largest epsilon with ``eps1_bound + eps2_bound < 1`` (bisection)."""
    lo, hi = 0.0, 1e-3
    if epsilon_budget(hi).total < 1:
        raise RuntimeError("bracket too small")
    while hi - lo > rel_tol * hi:
        mid = 0.5 * (lo + hi)
        if epsilon_budget(mid).total < 1:
            lo = mid
        else:
            hi = mid
    return lo


# ---------------------------------------------------------------------------
# approximate extraction


def pure_conditional_state(s: Strategy, b: int, tol: float = 1e-9) -> np.ndarray:
    """Normalized ``|psi^b>`` on A (x) C; requires a rank-one conditional state."""
    w = s.conditional_states()[b]
    pb = float(np.trace(w).real)
    if pb < bellfunc.UNDEFINED_PB:
        raise ValueError(f"P(b={b}) vanishes")
    ev, vec = np.linalg.eigh(w / pb)
    if ev[-1] < 1 - tol:
        raise ValueError(f"conditional state for b={b} is not pure (top eigenvalue {ev[-1]:.3e})")
    return vec[:, -1]


def sigma_reference(alice: Sequence, psi: np.ndarray, b: int, d_c: int) -> np.ndarray:
    """Reference vector ``|sigma^b>`` on ``A, C, A', C', A'', C''``."""
    za, xa, ya = (np.asarray(_arr(o), dtype=complex) for o in alice)
    ia = np.eye(za.shape[0])
    ic = np.eye(d_c)

    def on_a(op):
        return np.kron(op, ic) @ psi

    bell = qcore.bell_basis()
    b1, b2 = bits(b)
    if b2 == 0:
        first = on_a((ia + za) / SQRT2)
        second = on_a(ya @ xa @ (ia + za) / SQRT2)
    else:
        first = on_a(xa @ (ia - za) / SQRT2)
        second = on_a(ya @ (ia - za) / SQRT2)
    outer = bell[b].amplitudes
    a2c2 = [bell[1].amplitudes, bell[2].amplitudes]  # psi+, phi-
    vec = (np.kron(first, np.kron(outer, a2c2[0])) + np.kron(second, np.kron(outer, a2c2[1]))) / SQRT2
    return vec


def rotate_observable(o, angle: float) -> np.ndarray:
    """Conjugate a qubit observable by the real rotation ``exp(-i angle sigma_y / 2)``."""
    r = np.array([[math.cos(angle / 2), -math.sin(angle / 2)],
                  [math.sin(angle / 2), math.cos(angle / 2)]])
    o = np.asarray(_arr(o))
    return r @ o @ r.T


def perturbed_strategy(angle: float, which: int = 0) -> Strategy:
    """Ideal strategy with Charlie's observable ``which`` (0-based; 0 is D_zx) rotated."""
    s = ideal_strategy()
    charlie = list(s.charlie)
    charlie[which] = rotate_observable(charlie[which], angle)
    return Strategy(s.state_ab1, s.state_b2c, s.alice, s.bob, tuple(charlie))


def realized_epsilon(s: Strategy, b: int) -> float:
    """``6 sqrt2 - <psi^b| T_b |psi^b>`` for the normalized conditional state."""
    score = bellfunc.t_total(correlations(s))
    cond = score.conditional(b)
    if cond is None:
        raise ValueError(f"P(b={b}) vanishes")
    return bellfunc.QUANTUM_MAX - cond


@dataclass
class ExtractionCheck:
    b: int
    epsilon: float
    epsilon1: float
    distance: float
    distance_bound: float
    sigma_norm_sq: float
    za_expectation: float
    norm_bound: float
    passed: bool

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def approximate_extraction_check(s: Strategy, epsilon: Sequence[float] | float | None = None,
                                 tol: float = 1e-9) -> list[ExtractionCheck]:
    """Extraction-distance and sigma-norm checks per b; realized deficits are recomputed."""
    d_c = s.dims[3]
    out = []
    for b in range(N_B):
        eps = realized_epsilon(s, b)
        if epsilon is not None:
            given = epsilon if np.isscalar(epsilon) else epsilon[b]
            if abs(given - eps) > tol:
                raise ValueError(f"supplied epsilon {given} differs from realized {eps} for b={b}")
        eps_c = max(eps, 0.0)
        e1 = math.sqrt(SQRT2 * eps_c)
        psi = pure_conditional_state(s, b)
        got = swap_isometry(s.alice, s.charlie, psi).amplitudes
        ref = sigma_reference(s.alice, psi, b, d_c)
        dist = float(np.linalg.norm(got - ref))
        nsq = float(np.vdot(ref, ref).real)
        za = float(abs(np.vdot(psi, np.kron(s.alice[0], np.eye(d_c)) @ psi)))
        l1, l2 = C_DISTANCE * e1, C_NORM * e1
        ok = (dist <= l1 + tol and abs(nsq - 1) <= l2 + tol and za <= l2 + tol)
        out.append(ExtractionCheck(b, eps, e1, dist, l1, nsq, za, l2, ok))
    return out


def report_json(checks: Sequence[ExtractionCheck], **kw) -> str:
    return json.dumps([c.to_dict() for c in checks], **kw)
