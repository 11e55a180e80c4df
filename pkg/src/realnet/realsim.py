"""Real-Hilbert-space simulations of complex quantum statistics.

Single systems and single-source Bell experiments embed into real quantum
theory with one extra real qubit per party (the ancilla is appended as the last
factor of the party it belongs to). Independent sources feeding a joint
measurement are simulated with classical-basis states. The same recipe applied
link by link to the swap network does not give a valid real strategy; this is
checked as a negative control.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import qcore
from .bellfunc import chsh3_value
from .netsim import N_X, N_Z, observable_projectors
from .qcore import DenseMatrix, DimensionError, _arr

J = np.array([[0.0, 1.0], [-1.0, 0.0]])
I2 = np.eye(2)
STATS_TOL = 1e-12
EXPLORATORY_DIMENSION_SEARCH = False


def _check_state(rho: np.ndarray, tol: float = qcore.DEFAULT_TOL) -> None:
    if not DenseMatrix(rho).is_density(tol):
        raise ValueError("input is not a density matrix")


def _check_povm(effects: Sequence[np.ndarray], d: int, tol: float = qcore.DEFAULT_TOL) -> None:
    for e in effects:
        if e.shape != (d, d):
            raise DimensionError(f"effect of shape {e.shape} on a {d}-dimensional system")
        if not DenseMatrix(e).is_psd(tol):
            raise ValueError("effect is not positive semidefinite")
    if not qcore.is_complete(effects, tol):
        raise ValueError("measurement effects do not sum to the identity")


def embed_operator(op) -> np.ndarray:
    """``Re(O) (x) I + Im(O) (x) J``; for effects this equals ``O (x) |i><i| + O* (x) |-i><-i|``."""
    op = np.asarray(_arr(op))
    return np.kron(op.real, I2) + np.kron(op.imag, J)


def embed_state(rho) -> np.ndarray:
    """``Re(rho) (x) I/2 + Im(rho) (x) J/2``."""
    return 0.5 * embed_operator(rho)


@dataclass(frozen=True)
class EmbeddedSystem:
    state: DenseMatrix
    effect_map: dict
    dims: tuple[int, ...]
    original_dims: tuple[int, ...]

    def violations(self, tol: float = STATS_TOL) -> list[str]:
        bad = []
        if not self.state.is_real(tol):
            bad.append("embedded state has an imaginary part")
        if not self.state.is_density(1e-9):
            bad.append("embedded state is not a density matrix")
        groups: dict = {}
        for key, eff in self.effect_map.items():
            if not eff.is_real(tol):
                bad.append(f"effect {key} has an imaginary part")
            if not eff.is_psd(1e-9):
                bad.append(f"effect {key} is not positive semidefinite")
            groups.setdefault(key[:-1], []).append(eff.data)
        for key, effs in groups.items():
            if not qcore.is_complete(effs, 1e-9):
                bad.append(f"measurement {key} is not complete")
        return bad

    def probability(self, *keys) -> float:
        """Born probability of a (product of) mapped effects."""
        ops = [self.effect_map[k].data for k in keys]
        op = ops[0] if len(ops) == 1 else np.kron(ops[0], ops[1])
        return float(np.trace(self.state.data @ op).real)


def embed_single(rho, povms: Sequence[Sequence]) -> EmbeddedSystem:
    """Embed a d-dimensional state and its measurements into dimension 2d.

    ``effect_map`` keys are ``(m, r)``: measurement ``m``, outcome ``r``.
    """
    rho = np.asarray(_arr(rho), dtype=complex)
    d = rho.shape[0]
    _check_state(rho)
    effects = {}
    for m, povm in enumerate(povms):
        ops = [np.asarray(_arr(e), dtype=complex) for e in povm]
        _check_povm(ops, d)
        for r, e in enumerate(ops):
            effects[(m, r)] = DenseMatrix(embed_operator(e), (d, 2))
    return EmbeddedSystem(DenseMatrix(embed_state(rho), (d, 2)), effects, (d, 2), (d,))


def _bipartite_state(rho: np.ndarray, d_a: int, d_b: int) -> np.ndarray:
    """``(rho (x) |+i,+i><+i,+i| + rho* (x) |-i,-i><-i,-i|)/2`` reordered to A, A', B, B'."""
    pi, mi = qcore.plus_i().projector().data, qcore.minus_i().projector().data
    big = 0.5 * (np.kron(rho, np.kron(pi, pi)) + np.kron(rho.conj(), np.kron(mi, mi)))
    # factors currently A, B, A', B' -> A, A', B, B'
    return qcore.permute_subsystems(DenseMatrix(big, (d_a, d_b, 2, 2)), (0, 2, 1, 3)).data


def embed_bipartite(rho_ab, alice_povms: Sequence[Sequence], bob_povms: Sequence[Sequence],
                    dims: tuple[int, int] | None = None) -> EmbeddedSystem:
    """Embed a bipartite experiment with one real ancilla qubit per party (order A, A', B, B').

    Keys of ``effect_map`` are ``("A", m, r)`` and ``("B", m, r)``.
    """
    rho = np.asarray(_arr(rho_ab), dtype=complex)
    _check_state(rho)
    if dims is None:
        dims = qcore._dims_of(rho_ab)
    if dims is None:
        d_a = np.asarray(_arr(alice_povms[0][0])).shape[0]
        dims = (d_a, rho.shape[0] // d_a)
    d_a, d_b = (int(d) for d in dims)
    if d_a * d_b != rho.shape[0]:
        raise DimensionError(f"dims {dims} do not match a state of size {rho.shape[0]}")
    effects = {}
    for party, povms, d in (("A", alice_povms, d_a), ("B", bob_povms, d_b)):
        for m, povm in enumerate(povms):
            ops = [np.asarray(_arr(e), dtype=complex) for e in povm]
            _check_povm(ops, d)
            for r, e in enumerate(ops):
                effects[(party, m, r)] = DenseMatrix(embed_operator(e), (d, 2))
    state = DenseMatrix(_bipartite_state(rho, d_a, d_b), (d_a, 2, d_b, 2))
    return EmbeddedSystem(state, effects, (d_a, 2, d_b, 2), (d_a, d_b))


def bipartite_statistics(rho, alice_povms, bob_povms) -> np.ndarray:
    """``P[x, y, a, b]`` of a complex bipartite experiment (equal outcome counts assumed)."""
    rho = np.asarray(_arr(rho))
    na, nb = len(alice_povms[0]), len(bob_povms[0])
    out = np.zeros((len(alice_povms), len(bob_povms), na, nb))
    for x, y in itertools.product(range(len(alice_povms)), range(len(bob_povms))):
        for a, b in itertools.product(range(na), range(nb)):
            op = np.kron(_arr(alice_povms[x][a]), _arr(bob_povms[y][b]))
            out[x, y, a, b] = np.trace(rho @ op).real
    return out


def embedded_statistics(emb: EmbeddedSystem) -> np.ndarray:
    """Same table as :func:`bipartite_statistics`, read from an embedded system."""
    keys = emb.effect_map.keys()
    nx = 1 + max(k[1] for k in keys if k[0] == "A")
    ny = 1 + max(k[1] for k in keys if k[0] == "B")
    na = 1 + max(k[2] for k in keys if k[0] == "A")
    nb = 1 + max(k[2] for k in keys if k[0] == "B")
    out = np.zeros((nx, ny, na, nb))
    for x, y, a, b in itertools.product(range(nx), range(ny), range(na), range(nb)):
        out[x, y, a, b] = emb.probability(("A", x, a), ("B", y, b))
    return out


def correlator_table(stats: np.ndarray) -> np.ndarray:
    """``<A_x B_y>`` from a two-outcome table ``P[x, y, a, b]`` (outcome 0 is +1)."""
    signs = np.array([1.0, -1.0])
    return np.einsum("xyab,a,b->xy", stats, signs, signs)


def chsh3_strategy() -> tuple[np.ndarray, list[list[np.ndarray]], list[list[np.ndarray]]]:
    """Single-source qubit strategy reaching ``6 sqrt 2``: Phi+, Alice (Z, X, Y), Charlie's six."""
    from .netsim import charlie_ideal_observables, ideal_strategy

    rho = qcore.phi_plus().data
    alice = [list(observable_projectors(o)) for o in ideal_strategy().alice]
    charlie = [list(observable_projectors(o)) for o in charlie_ideal_observables()]
    return rho, alice, charlie


def chsh3_embedding_report() -> dict:
    rho, alice, charlie = chsh3_strategy()
    emb = embed_bipartite(rho, alice, charlie, (2, 2))
    e_complex = correlator_table(bipartite_statistics(rho, alice, charlie))
    e_real = correlator_table(embedded_statistics(emb))
    return {
        "complex_value": chsh3_value(e_complex),
        "real_value": chsh3_value(e_real),
        "max_table_deviation": float(np.max(np.abs(e_complex - e_real))),
        "embedding_violations": emb.violations(),
        "real_dims": list(emb.dims),
    }


# ---------------------------------------------------------------------------
# independent preparations


@dataclass(frozen=True)
class IndependentSimulation:
    states: list[list[DenseMatrix]]
    effects: list[DenseMatrix]
    complex_probabilities: np.ndarray  # [p_1, ..., p_N, r]
    real_probabilities: np.ndarray

    @property
    def max_deviation(self) -> float:
        return float(np.max(np.abs(self.complex_probabilities - self.real_probabilities)))


def simulate_independent_preparations(prep_sets: Sequence[Sequence], measurement: Sequence
                                      ) -> IndependentSimulation:
    """Classical-basis real simulation of N independent sources and one joint POVM.

    Source ``i`` emits ``|p_i><p_i|`` on a ``P_i``-dimensional real space and the
    effects are ``M_r = sum_p P(r|p) |p><p|``.
    """
    sets = [[np.asarray(_arr(s), dtype=complex) for s in prep] for prep in prep_sets]
    if not sets or any(not s for s in sets):
        raise ValueError("need at least one preparation per source")
    for s in sets:
        for rho in s:
            _check_state(rho)
    effects = [np.asarray(_arr(e), dtype=complex) for e in measurement]
    d_total = int(np.prod([s[0].shape[0] for s in sets]))
    _check_povm(effects, d_total)
    sizes = [len(s) for s in sets]
    probs = np.zeros(sizes + [len(effects)])
    for idx in itertools.product(*(range(n) for n in sizes)):
        joint = sets[0][idx[0]]
        for i in range(1, len(sets)):
            joint = np.kron(joint, sets[i][idx[i]])
        for r, e in enumerate(effects):
            probs[idx + (r,)] = np.trace(joint @ e).real
    real_states = [[DenseMatrix(np.diag(np.eye(n)[p])) for p in range(n)] for n in sizes]
    flat = probs.reshape(-1, len(effects))
    real_effects = [DenseMatrix(np.diag(flat[:, r])) for r in range(len(effects))]
    real_probs = np.zeros_like(probs)
    for idx in itertools.product(*(range(n) for n in sizes)):
        joint = real_states[0][idx[0]].data
        for i in range(1, len(sets)):
            joint = np.kron(joint, real_states[i][idx[i]].data)
        for r, e in enumerate(real_effects):
            real_probs[idx + (r,)] = np.trace(joint @ e.data).real
    return IndependentSimulation(real_states, real_effects, probs, real_probs)


def pbr_scenario() -> tuple[list[list[np.ndarray]], list[np.ndarray]]:
    """Two sources preparing |0> or |+> and the four-outcome entangled PBR measurement."""
    zero = np.array([1.0, 0.0])
    plus = np.array([1.0, 1.0]) / np.sqrt(2)
    minus = np.array([1.0, -1.0]) / np.sqrt(2)
    one = np.array([0.0, 1.0])
    preps = [[np.outer(zero, zero), np.outer(plus, plus)] for _ in range(2)]
    vecs = [
        (np.kron(zero, one) + np.kron(one, zero)) / np.sqrt(2),
        (np.kron(zero, minus) + np.kron(one, plus)) / np.sqrt(2),
        (np.kron(plus, one) + np.kron(minus, zero)) / np.sqrt(2),
        (np.kron(plus, minus) + np.kron(minus, plus)) / np.sqrt(2),
    ]
    return preps, [np.outer(v, v.conj()) for v in vecs]


# ---------------------------------------------------------------------------
# swap network negative control


@dataclass
class SwapTransplant:
    mapping: str
    bob_real: bool
    bob_complete: bool
    max_stat_deviation: float
    t_value: float
    details: dict = field(default_factory=dict)

    @property
    def valid_simulation(self) -> bool:
        return self.bob_real and self.bob_complete and self.max_stat_deviation <= 1e-9


def _swap_stats(s1, s2, alice, bob, charlie, dims) -> np.ndarray:
    from .netsim import CorrelationTensor, N_B, SIGNS  # noqa: F401

    d_a, d_b1, d_b2, d_c = dims
    s1 = s1.reshape(d_a, d_b1, d_a, d_b1)
    s2 = s2.reshape(d_b2, d_c, d_b2, d_c)
    pa = [observable_projectors(o) for o in alice]
    pc = [observable_projectors(o) for o in charlie]
    p = np.zeros((len(bob), N_X, N_Z, 2, 2))
    for b, proj in enumerate(bob):
        bp = proj.reshape(d_b1, d_b2, d_b1, d_b2)
        w = np.einsum("apAP,qcQC,PQpq->acAC", s1, s2, bp, optimize=True).reshape(d_a * d_c, d_a * d_c)
        for x, z, a, c in itertools.product(range(N_X), range(N_Z), range(2), range(2)):
            p[b, x, z, a, c] = np.trace(w @ np.kron(pa[x][a], pc[z][c])).real
    return p


def _reorder(op: np.ndarray, dims: tuple[int, ...], order: tuple[int, ...]) -> np.ndarray:
    return qcore.permute_subsystems(DenseMatrix(op, dims), order).data


def swap_negative_control(strategy=None) -> list[SwapTransplant]:
    """Embed each link of the swap network separately and transplant Bob's measurement.

    Two transplants are tried for Bob's effects on ``B1 B1' B2 B2'``:
    ``"conjugate-pair"`` uses ``Pi (x) |i,i><i,i| + Pi* (x) |-i,-i><-i,-i|`` on the
    ancilla pair (real, but incomplete) and ``"ancilla-blind"`` uses
    ``Re(Pi) (x) I`` (complete, but the statistics change). Neither gives a
    valid real simulation of a complex strategy that needs the conjugation.
    """
    from .bellfunc import t_value
    from .netsim import CorrelationTensor, correlations, ideal_strategy

    s = ideal_strategy() if strategy is None else strategy
    d_a, d_b1, d_b2, d_c = s.dims
    target = correlations(s).p
    # link states on A A' B1 B1' and B2 B2' C C'
    e1 = _bipartite_state(s.state_ab1.data, d_a, d_b1)
    e2 = _bipartite_state(s.state_b2c.data, d_b2, d_c)
    alice = [embed_operator(o) for o in s.alice]
    charlie = [embed_operator(o) for o in s.charlie]
    pi, mi = qcore.plus_i().projector().data, qcore.minus_i().projector().data
    out = []
    for mapping in ("conjugate-pair", "ancilla-blind"):
        bob = []
        for proj in s.bob:
            if mapping == "conjugate-pair":
                op = np.kron(proj, np.kron(pi, pi)) + np.kron(proj.conj(), np.kron(mi, mi))
            else:
                op = np.kron(proj.real, np.eye(4)) + 0j
            # factors B1, B2, B1', B2' -> B1 B1' B2 B2'
            bob.append(_reorder(op, (d_b1, d_b2, 2, 2), (0, 2, 1, 3)))
        real = all(np.max(np.abs(b.imag)) <= STATS_TOL for b in bob)
        complete = qcore.is_complete(bob, 1e-9)
        p = _swap_stats(e1, e2, alice, bob, charlie, (2 * d_a, 2 * d_b1, 2 * d_b2, 2 * d_c))
        t = CorrelationTensor(np.clip(p, 0.0, None)) if complete else None
        out.append(SwapTransplant(
            mapping, real, complete, float(np.max(np.abs(p - target))),
            t_value(t) if t is not None else float("nan"),
            {"bob_total_min_eig": float(np.linalg.eigvalsh(sum(bob).real)[0])},
        ))
    return out


# ---------------------------------------------------------------------------
# randomized checks and the disabled exploratory hook


def random_trials(n: int, seed: int) -> dict:
    """Seeded single-site and bipartite embedding checks; maximum deviations."""
    rng = np.random.default_rng(seed)
    single, bipartite, bad = 0.0, 0.0, []
    for _ in range(n):
        d = int(rng.integers(2, 5))
        rho = qcore.random_density(d, rng)
        povms = [qcore.random_povm(d, int(rng.integers(2, 4)), rng) for _ in range(2)]
        emb = embed_single(rho, povms)
        bad += emb.violations()
        for (m, r), eff in emb.effect_map.items():
            single = max(single, abs(qcore.born(rho, povms[m][r]) - qcore.born(emb.state, eff)))
        da, db = int(rng.integers(2, 4)), int(rng.integers(2, 4))
        rho = qcore.random_density(da * db, rng)
        ap = [qcore.random_povm(da, 2, rng) for _ in range(2)]
        bp = [qcore.random_povm(db, 2, rng) for _ in range(2)]
        emb = embed_bipartite(rho, ap, bp, (da, db))
        bad += emb.violations()
        bipartite = max(bipartite, float(np.max(np.abs(
            bipartite_statistics(rho, ap, bp) - embedded_statistics(emb)))))
    return {"trials": n, "seed": seed, "single_max_deviation": single,
            "bipartite_max_deviation": bipartite, "violations": sorted(set(bad))}


def explore_dimension_lower_bound(*args, enabled: bool | None = None, **kwargs):
    """Placeholder for searching for experiments that need more than 2d real dimensions.

    Disabled by default: the existence of such experiments is a conjecture, and
    no search procedure is specified for it.
    """
    enabled = EXPLORATORY_DIMENSION_SEARCH if enabled is None else enabled
    if not enabled:
        raise RuntimeError("exploratory dimension search is disabled")
    search = kwargs.get("search")
    if search is None:
        raise ValueError("enabled search requires a 'search' callable")
    return search(*args)
