"""Swap-network strategies and their correlation tensors.

Index conventions for ``CorrelationTensor.p[b, x, z, a, c]``:

* ``b`` in 0..3 is Bob's outcome, bits ``b1 b2`` with ``b = 2*b1 + b2``
  (00 -> phi+, 01 -> psi+, 10 -> phi-, 11 -> psi-);
* ``x`` in 0..2 and ``z`` in 0..5 are 0-based settings (human-facing I/O is 1-based);
* ``a`` and ``c`` index 0 means outcome +1 and index 1 means outcome -1.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import qcore
from .qcore import BELL_BITS, DenseMatrix, DimensionError, as_matrix

N_X, N_Z, N_B = 3, 6, 4
SIGNS = np.array([1.0, -1.0])
OUTCOME_LABELS = ("+1", "-1")


def bits(b: int) -> tuple[int, int]:
    return b >> 1, b & 1


def observable_projectors(obs) -> tuple[np.ndarray, np.ndarray]:
    """Outcome projectors ``(I + O)/2`` and ``(I - O)/2`` of a dichotomic observable."""
    o = qcore._arr(obs)
    eye = np.eye(o.shape[0])
    return (eye + o) / 2, (eye - o) / 2


@dataclass(frozen=True)
class Strategy:
    """Sources and measurements of the swap scenario.

    ``state_ab1`` acts on A (x) B1 and ``state_b2c`` on B2 (x) C. Alice and Charlie
    hold dichotomic observables, Bob four projectors on B1 (x) B2.
    """

    state_ab1: DenseMatrix
    state_b2c: DenseMatrix
    alice: tuple
    bob: tuple
    charlie: tuple

    def __post_init__(self):
        alice = tuple(np.asarray(qcore._arr(o), dtype=complex) for o in self.alice)
        charlie = tuple(np.asarray(qcore._arr(o), dtype=complex) for o in self.charlie)
        bob = tuple(np.asarray(qcore._arr(o), dtype=complex) for o in self.bob)
        if len(alice) != N_X or len(charlie) != N_Z or len(bob) != N_B:
            raise DimensionError("need 3 Alice observables, 4 Bob projectors, 6 Charlie observables")
        d_a, d_c = alice[0].shape[0], charlie[0].shape[0]
        s1, s2 = as_matrix(self.state_ab1), as_matrix(self.state_b2c)
        if s1.rows % d_a or s2.rows % d_c:
            raise DimensionError("state sizes incompatible with Alice/Charlie dimensions")
        d_b1, d_b2 = s1.rows // d_a, s2.rows // d_c
        if any(m.shape != (d_b1 * d_b2,) * 2 for m in bob):
            raise DimensionError("Bob's projectors must act on B1 (x) B2")
        if any(o.shape != (d_a, d_a) for o in alice) or any(o.shape != (d_c, d_c) for o in charlie):
            raise DimensionError("inconsistent observable dimensions")
        object.__setattr__(self, "state_ab1", s1.with_dims((d_a, d_b1)))
        object.__setattr__(self, "state_b2c", s2.with_dims((d_b2, d_c)))
        object.__setattr__(self, "alice", alice)
        object.__setattr__(self, "bob", bob)
        object.__setattr__(self, "charlie", charlie)

    @property
    def dims(self) -> tuple[int, int, int, int]:
        d_a, d_b1 = self.state_ab1.dims
        d_b2, d_c = self.state_b2c.dims
        return d_a, d_b1, d_b2, d_c

    def is_real(self, tol: float = qcore.REAL_TOL) -> bool:
        ops = [self.state_ab1.data, self.state_b2c.data, *self.alice, *self.bob, *self.charlie]
        return all(np.max(np.abs(o.imag)) <= tol for o in ops)

    def violations(self, tol: float = qcore.DEFAULT_TOL) -> list[str]:
        """Names of the strategy invariants that fail at ``tol``."""
        bad = []
        for name, st in (("state_ab1", self.state_ab1), ("state_b2c", self.state_b2c)):
            if not st.is_density(tol):
                bad.append(f"{name} is not a density matrix")
        for party, ops in (("alice", self.alice), ("charlie", self.charlie)):
            for k, o in enumerate(ops):
                if np.max(np.abs(o - o.conj().T)) > tol:
                    bad.append(f"{party}[{k + 1}] is not Hermitian")
                if np.max(np.abs(o @ o - np.eye(o.shape[0]))) > tol:
                    bad.append(f"{party}[{k + 1}] does not square to identity")
        for i, p in enumerate(self.bob):
            for j, q in enumerate(self.bob):
                target = p if i == j else np.zeros_like(p)
                if np.max(np.abs(p @ q - target)) > tol:
                    bad.append(f"bob projectors {i},{j} not orthogonal projections")
        if not qcore.is_complete(self.bob, tol):
            bad.append("bob projectors are not complete")
        return bad

    def validate(self, tol: float = qcore.DEFAULT_TOL) -> Strategy:
        bad = self.violations(tol)
        if bad:
            raise ValueError("invalid strategy: " + "; ".join(bad))
        return self

    def conditional_states(self) -> list[np.ndarray]:
        """Unnormalized Alice-Charlie operators ``tr_B[(s1 (x) s2)(I (x) B_b (x) I)]``."""
        d_a, d_b1, d_b2, d_c = self.dims
        s1 = self.state_ab1.data.reshape(d_a, d_b1, d_a, d_b1)
        s2 = self.state_b2c.data.reshape(d_b2, d_c, d_b2, d_c)
        out = []
        for proj in self.bob:
            bp = proj.reshape(d_b1, d_b2, d_b1, d_b2)
            # rho[(a,p,q,c),(A,P,Q,C)] * B[(P,Q),(p,q)] summed over p,q,P,Q
            w = np.einsum("apAP,qcQC,PQpq->acAC", s1, s2, bp, optimize=True)
            out.append(w.reshape(d_a * d_c, d_a * d_c))
        return out

    def to_dict(self) -> dict:
        def mats(ops):
            return [DenseMatrix(o).to_dict() for o in ops]
        return {
            "state_ab1": self.state_ab1.to_dict(),
            "state_b2c": self.state_b2c.to_dict(),
            "alice": mats(self.alice),
            "bob": mats(self.bob),
            "charlie": mats(self.charlie),
        }

    @classmethod
    def from_dict(cls, payload: dict) -> Strategy:
        def mats(items):
            return [DenseMatrix.from_dict(m) for m in items]
        return cls(DenseMatrix.from_dict(payload["state_ab1"]),
                   DenseMatrix.from_dict(payload["state_b2c"]),
                   mats(payload["alice"]), mats(payload["bob"]), mats(payload["charlie"]))


@dataclass(frozen=True, eq=False)
class CorrelationTensor:
    """Probabilities ``p[b, x, z, a, c]``; see the module docstring for index meaning."""

    p: np.ndarray

    def __post_init__(self):
        arr = np.array(self.p, dtype=float)
        if arr.shape != (N_B, N_X, N_Z, 2, 2):
            raise DimensionError(f"expected shape (4, 3, 6, 2, 2), got {arr.shape}")
        arr.setflags(write=False)
        object.__setattr__(self, "p", arr)

    def p_b(self) -> np.ndarray:
        """Bob's marginal, read from setting pair (x, z) = (1, 1)."""
        return self.p[:, 0, 0].sum(axis=(1, 2))

    def p_ab(self) -> np.ndarray:
        """``P_AB(a, b | x)`` as array [b, x, a]; read at z = 1."""
        return self.p[:, :, 0].sum(axis=3)

    def p_bc(self) -> np.ndarray:
        """``P_BC(b, c | z)`` as array [b, z, c]; read at x = 1."""
        return self.p[:, 0].sum(axis=2)

    def violations(self, tol: float = 1e-10, neg_tol: float = 1e-12) -> list[str]:
        bad = []
        if self.p.min() < -neg_tol:
            bad.append(f"negative probability {self.p.min():.3e}")
        norms = self.p.sum(axis=(0, 3, 4))
        if np.max(np.abs(norms - 1)) > tol:
            bad.append(f"normalization off by {np.max(np.abs(norms - 1)):.3e}")
        # Alice-side marginal must not depend on z, Charlie-side on x
        pab = self.p.sum(axis=4)  # b x z a
        if np.max(np.abs(pab - pab[:, :, :1])) > tol:
            bad.append("P(a,b|x,z) depends on z")
        pbc = self.p.sum(axis=3)  # b x z c
        if np.max(np.abs(pbc - pbc[:, :1])) > tol:
            bad.append("P(b,c|x,z) depends on x")
        return bad

    def is_valid(self, tol: float = 1e-10) -> bool:
        return not self.violations(tol)

    def mix(self, other: CorrelationTensor, weight: float) -> CorrelationTensor:
        return CorrelationTensor(weight * self.p + (1 - weight) * other.p)

    def to_dict(self) -> dict:
        out: dict = {}
        for b in range(N_B):
            xs = out.setdefault(BELL_BITS[b], {})
            for x in range(N_X):
                zs = xs.setdefault(str(x + 1), {})
                for z in range(N_Z):
                    zs[str(z + 1)] = {
                        OUTCOME_LABELS[a]: {OUTCOME_LABELS[c]: float(self.p[b, x, z, a, c])
                                            for c in range(2)}
                        for a in range(2)
                    }
        return {"settings": {"x": N_X, "z": N_Z}, "p": out}

    @classmethod
    def from_dict(cls, payload: dict) -> CorrelationTensor:
        settings = payload.get("settings", {})
        if settings and (settings.get("x"), settings.get("z")) != (N_X, N_Z):
            raise DimensionError(f"unsupported settings {settings}")
        p = np.zeros((N_B, N_X, N_Z, 2, 2))
        for b in range(N_B):
            for x in range(N_X):
                for z in range(N_Z):
                    cell = payload["p"][BELL_BITS[b]][str(x + 1)][str(z + 1)]
                    for a in range(2):
                        for c in range(2):
                            p[b, x, z, a, c] = cell[OUTCOME_LABELS[a]][OUTCOME_LABELS[c]]
        return cls(p)

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_json(cls, text: str) -> CorrelationTensor:
        return cls.from_dict(json.loads(text))


# ---------------------------------------------------------------------------


def charlie_ideal_observables() -> list[np.ndarray]:
    """``D_zx, E_zx, D_zy, E_zy, D_xy, E_xy`` with ``D_ij = (s_i + s_j)/sqrt2``, ``E_ij = (s_i - s_j)/sqrt2``."""
    s = {"x": qcore.SX, "y": qcore.SY, "z": qcore.SZ}
    out = []
    for i, j in (("z", "x"), ("z", "y"), ("x", "y")):
        out.append((s[i] + s[j]) / np.sqrt(2))
        out.append((s[i] - s[j]) / np.sqrt(2))
    return out


def bell_projectors() -> list[np.ndarray]:
    return [k.projector().data for k in qcore.bell_basis()]


def ideal_strategy() -> Strategy:
    """Phi+ on both links, Alice measures (Z, X, Y), Bob measures in the Bell basis."""
    phi = qcore.phi_plus()
    return Strategy(phi, phi, (qcore.SZ, qcore.SX, qcore.SY), tuple(bell_projectors()),
                    tuple(charlie_ideal_observables()))


def correlations(s: Strategy) -> CorrelationTensor:
    omegas = s.conditional_states()
    d_a, _, _, d_c = s.dims
    a_proj = [observable_projectors(o) for o in s.alice]
    c_proj = [observable_projectors(o) for o in s.charlie]
    p = np.zeros((N_B, N_X, N_Z, 2, 2))
    for b, w in enumerate(omegas):
        w4 = w.reshape(d_a, d_c, d_a, d_c)
        for x in range(N_X):
            for a in range(2):
                # tr(w (A (x) C)) = sum w[i,k,j,l] A[j,i] C[l,k]
                wa = np.einsum("ikjl,ji->kl", w4, a_proj[x][a])
                for z in range(N_Z):
                    for c in range(2):
                        p[b, x, z, a, c] = np.einsum("kl,lk->", wa, c_proj[z][c]).real
    return CorrelationTensor(p)


def mixture(weighted: Sequence[tuple[float, Strategy]]) -> CorrelationTensor:
    """Shared-randomness average of strategies, taken at the tensor level."""
    weights = np.array([w for w, _ in weighted], dtype=float)
    if np.any(weights < 0) or abs(weights.sum() - 1) > 1e-12:
        raise ValueError("mixture weights must be a probability distribution")
    total = sum(w * correlations(s).p for w, s in weighted)
    return CorrelationTensor(total)


def noisy_state(rho, v: float) -> DenseMatrix:
    rho = as_matrix(rho)
    return DenseMatrix(v * rho.data + (1 - v) * np.eye(rho.rows) / rho.rows, rho.dims)


def apply_white_noise(s: Strategy, v: float) -> Strategy:
    """Mix both link states with white noise: ``rho -> v rho + (1 - v) I/4``."""
    if not 0 <= v <= 1:
        raise ValueError(f"visibility must lie in [0, 1], got {v}")
    if s.state_ab1.rows != 4 or s.state_b2c.rows != 4:
        raise DimensionError("white noise model is defined for two-qubit links")
    return Strategy(noisy_state(s.state_ab1, v), noisy_state(s.state_b2c, v),
                    s.alice, s.bob, s.charlie)


@dataclass(frozen=True, eq=False)
class SampleRecord:
    empirical: CorrelationTensor
    counts: np.ndarray  # [b, x, z, a, c] integer counts
    setting_counts: np.ndarray  # [x, z]
    rounds: int
    seed: int


def sample(t: CorrelationTensor, rounds: int, seed: int) -> SampleRecord:
    """i.i.d. rounds with uniform settings; frequencies are conditional on (x, z).

    Setting pairs that were never drawn get an all-zero empirical block.
    """
    if rounds <= 0:
        raise ValueError("rounds must be positive")
    bad = t.violations()
    if bad:
        raise ValueError("invalid tensor: " + "; ".join(bad))
    rng = np.random.default_rng(seed)
    n_xz = rng.multinomial(rounds, np.full(N_X * N_Z, 1 / (N_X * N_Z))).reshape(N_X, N_Z)
    counts = np.zeros((N_B, N_X, N_Z, 2, 2), dtype=np.int64)
    for x in range(N_X):
        for z in range(N_Z):
            probs = np.clip(t.p[:, x, z].ravel(), 0, None)
            probs = probs / probs.sum()
            counts[:, x, z] = rng.multinomial(n_xz[x, z], probs).reshape(N_B, 2, 2)
    with np.errstate(invalid="ignore", divide="ignore"):
        freq = np.where(n_xz[None, :, :, None, None] > 0,
                        counts / np.maximum(n_xz, 1)[None, :, :, None, None], 0.0)
    return SampleRecord(CorrelationTensor(freq), counts, n_xz, rounds, seed)
