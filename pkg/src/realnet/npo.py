"""Moment-matrix relaxation of real-quantum swap correlations.

Operators are words over projector generators; the only rewrite rule is
idempotency (``P P = P``), so a word is canonical when no two adjacent letters
coincide. Generators are 0-based: Alice's ``A_{+1|x}`` is letter ``x`` and
Charlie's ``C_{+1|z}`` is letter ``z``.

A basis element ``a`` labels rows and columns of the moment matrix; entry
``(a, a')`` holds the moment of the word ``a' a^dagger`` where the adjoint of a
word is its reversal. With the two parties combined, the block for Bob's outcome
``b`` has rows ``(a, c)`` ordered with Alice's index major:
``row = index(a) * len(charlie_basis) + index(c)``.

Because real moment matrices are symmetric, the pair ``(alpha, gamma)`` and its
adjoint pair share one variable.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from . import bellfunc
from .netsim import N_B, N_X, N_Z, SIGNS, CorrelationTensor, Strategy, observable_projectors
from .sdp.problem import Block, SdpProblem, equality_rows

Word = tuple[int, ...]


def reduce_word(word) -> Word:
    out: list[int] = []
    for g in word:
        if not out or out[-1] != g:
            out.append(int(g))
    return tuple(out)


def adjoint(word: Word) -> Word:
    return tuple(reversed(word))


def product(u: Word, v: Word) -> Word:
    return reduce_word(u + v)


@dataclass(frozen=True, order=True)
class Monomial:
    """Canonical word of one party's projector generators."""

    degree: int = field(init=False, repr=False)
    word: Word = ()
    party: str = "A"

    def __post_init__(self):
        object.__setattr__(self, "word", tuple(int(g) for g in self.word))
        object.__setattr__(self, "degree", len(self.word))

    @property
    def is_identity(self) -> bool:
        return not self.word

    def adjoint(self) -> Monomial:
        return Monomial(adjoint(self.word), self.party)

    def __mul__(self, other: Monomial) -> Monomial:
        if other.party != self.party:
            raise ValueError("cannot multiply monomials of different parties")
        return Monomial(product(self.word, other.word), self.party)

    def label(self) -> str:
        if not self.word:
            return "1"
        return "".join(f"{self.party}{g + 1}" for g in self.word)


def canonicalize(word, party: str = "A", n_generators: int | None = None) -> Monomial:
    word = tuple(int(g) for g in word)
    if n_generators is not None and any(not 0 <= g < n_generators for g in word):
        raise IndexError(f"generator index out of range in {word} (n = {n_generators})")
    return Monomial(reduce_word(word), party)


def enumerate_basis(n_generators: int, max_degree: int, party: str = "A") -> list[Monomial]:
    """All canonical monomials of degree <= max_degree, in degree-lexicographic order."""
    if max_degree < 0:
        raise ValueError("max_degree must be nonnegative")
    out = [Monomial((), party)]
    frontier: list[Word] = [()]
    for _ in range(max_degree):
        nxt = [w + (g,) for w in frontier for g in range(n_generators) if not w or w[-1] != g]
        out.extend(Monomial(w, party) for w in nxt)
        frontier = nxt
    return out


def _word_table(basis: list[Monomial]) -> tuple[list[Word], np.ndarray]:
    """Distinct products ``a' a^dagger`` and the index matrix [i, i'] -> word id."""
    ids: dict[Word, int] = {}
    words: list[Word] = []
    n = len(basis)
    table = np.zeros((n, n), dtype=np.int64)
    for i, a in enumerate(basis):
        adj = adjoint(a.word)
        for j, a2 in enumerate(basis):
            w = product(a2.word, adj)
            if w not in ids:
                ids[w] = len(words)
                words.append(w)
            table[i, j] = ids[w]
    return words, table


@dataclass
class MomentStructure:
    n_a: int
    n_c: int
    alice_basis: list[Monomial]
    charlie_basis: list[Monomial]
    alice_words: list[Word]
    charlie_words: list[Word]
    alpha_table: np.ndarray
    gamma_table: np.ndarray
    orbit: np.ndarray  # [alpha word id, gamma word id] -> moment id
    moment_keys: list[tuple[Word, Word]]
    entry_map: np.ndarray  # moment id of every entry of a block

    @property
    def dim(self) -> int:
        return len(self.alice_basis) * len(self.charlie_basis)

    @property
    def n_moments(self) -> int:
        return len(self.moment_keys)

    def moment_id(self, alpha, gamma) -> int:
        """Moment id of the canonical pair (alpha, gamma); raises KeyError if absent."""
        ia = self.alice_words.index(reduce_word(alpha))
        ig = self.charlie_words.index(reduce_word(gamma))
        return int(self.orbit[ia, ig])

    def variable_id(self, b: int, alpha, gamma) -> int:
        return b * self.n_moments + self.moment_id(alpha, gamma)

    def entry(self, row: tuple[Word, Word], col: tuple[Word, Word]) -> int:
        """Moment id at block position ((a, c), (a', c'))."""
        ia = [m.word for m in self.alice_basis].index(tuple(row[0]))
        ic = [m.word for m in self.charlie_basis].index(tuple(row[1]))
        ja = [m.word for m in self.alice_basis].index(tuple(col[0]))
        jc = [m.word for m in self.charlie_basis].index(tuple(col[1]))
        nc = len(self.charlie_basis)
        return int(self.entry_map[ia * nc + ic, ja * nc + jc])

    def basis_labels(self) -> list[str]:
        return [f"{a.label()}|{c.label()}" for a in self.alice_basis for c in self.charlie_basis]


def build_structure(n_a: int, n_c: int) -> MomentStructure:
    if n_a < 1 or n_c < 1:
        raise ValueError("relaxation levels must be at least 1")
    abasis = enumerate_basis(N_X, n_a, "A")
    cbasis = enumerate_basis(N_Z, n_c, "C")
    awords, atab = _word_table(abasis)
    cwords, ctab = _word_table(cbasis)
    aid = {w: i for i, w in enumerate(awords)}
    cid = {w: i for i, w in enumerate(cwords)}
    a_adj = np.array([aid[adjoint(w)] for w in awords])
    c_adj = np.array([cid[adjoint(w)] for w in cwords])
    orbit = -np.ones((len(awords), len(cwords)), dtype=np.int64)
    keys: list[tuple[Word, Word]] = []
    for i in range(len(awords)):
        for j in range(len(cwords)):
            if orbit[i, j] >= 0:
                continue
            orbit[i, j] = orbit[a_adj[i], c_adj[j]] = len(keys)
            keys.append((awords[i], cwords[j]))
    nc = len(cbasis)
    # entry (ia*nc+ic, ja*nc+jc) -> orbit[atab[ia, ja], ctab[ic, jc]]
    amap = np.repeat(np.repeat(atab, nc, axis=0), nc, axis=1)
    cmap = np.tile(ctab, (len(abasis), len(abasis)))
    entry_map = orbit[amap, cmap]
    return MomentStructure(n_a, n_c, abasis, cbasis, awords, cwords, atab, ctab,
                           orbit, keys, entry_map)


# ---------------------------------------------------------------------------
# variable layout of the assembled problem


@dataclass(frozen=True)
class Layout:
    """Variable offsets. ``n_blocks`` is 1 for the outcome-symmetric reduction."""

    n_moments: int
    n_blocks: int = N_B

    @property
    def p_full(self) -> int:
        return self.n_blocks * self.n_moments

    @property
    def p_ab(self) -> int:
        return self.p_full + N_B * N_X * N_Z * 4

    @property
    def p_bc(self) -> int:
        return self.p_ab + N_B * N_X * 2

    @property
    def p_b(self) -> int:
        return self.p_bc + N_B * N_Z * 2

    @property
    def n_vars(self) -> int:
        return self.p_b + N_B

    def d(self, b: int, k):
        if not 0 <= b < self.n_blocks:
            raise IndexError(f"no moment block {b} in this layout")
        return b * self.n_moments + k

    def full(self, a: int, b: int, c: int, x: int, z: int) -> int:
        return self.p_full + (((b * N_X + x) * N_Z + z) * 2 + a) * 2 + c

    def ab(self, a: int, b: int, x: int) -> int:
        return self.p_ab + (b * N_X + x) * 2 + a

    def bc(self, b: int, c: int, z: int) -> int:
        return self.p_bc + (b * N_Z + z) * 2 + c

    def pb(self, b: int) -> int:
        return self.p_b + b


def ppt_pairs(structure: MomentStructure) -> list[tuple[int, int]]:
    """Distinct nontrivial pairs of moment ids (m1, m2) identified by partial transposition on A."""
    aid = {w: i for i, w in enumerate(structure.alice_words)}
    seen = set()
    pairs = []
    for i, w in enumerate(structure.alice_words):
        i_adj = aid[adjoint(w)]
        if i_adj == i:
            continue
        for j in range(len(structure.charlie_words)):
            m1, m2 = int(structure.orbit[i, j]), int(structure.orbit[i_adj, j])
            if m1 == m2:
                continue
            key = (min(m1, m2), max(m1, m2))
            if key not in seen:
                seen.add(key)
                pairs.append(key)
    return pairs


def variable_names(structure: MomentStructure) -> list[str]:
    lay = Layout(structure.n_moments)
    names = []
    for b in range(N_B):
        for alpha, gamma in structure.moment_keys:
            a = Monomial(alpha, "A").label()
            c = Monomial(gamma, "C").label()
            names.append(f"d[{b}]({a},{c})")
    out = [""] * lay.n_vars
    out[:len(names)] = names
    for b, x, z, a, c in itertools.product(range(N_B), range(N_X), range(N_Z), range(2), range(2)):
        out[lay.full(a, b, c, x, z)] = f"P({a},{b},{c}|{x},{z})"
    for b, x, a in itertools.product(range(N_B), range(N_X), range(2)):
        out[lay.ab(a, b, x)] = f"PAB({a},{b}|{x})"
    for b, z, c in itertools.product(range(N_B), range(N_Z), range(2)):
        out[lay.bc(b, c, z)] = f"PBC({b},{c}|{z})"
    for b in range(N_B):
        out[lay.pb(b)] = f"P({b})"
    return out


def objective_vector(lay: Layout) -> np.ndarray:
    c = np.zeros(lay.n_vars)
    for b, x, z, a, cc in itertools.product(range(N_B), range(N_X), range(N_Z), range(2), range(2)):
        c[lay.full(a, b, cc, x, z)] = bellfunc.COEF[b, x, z] * SIGNS[a] * SIGNS[cc]
    return c


def _data_rows(structure: MomentStructure, lay: Layout,
               forms: list[sp.csr_matrix]) -> list[dict[int, float]]:
    def moment(b, alpha, gamma):
        r = forms[b].getrow(structure.moment_id(alpha, gamma))
        return dict(zip(r.indices.tolist(), r.data.tolist()))

    rows = []
    for b in range(N_B):
        rows.append({**moment(b, (), ()), lay.pb(b): -1.0})
        for x in range(N_X):
            rows.append({**moment(b, (x,), ()), lay.ab(0, b, x): -1.0})
        for z in range(N_Z):
            rows.append({**moment(b, (), (z,)), lay.bc(b, 0, z): -1.0})
        for x in range(N_X):
            for z in range(N_Z):
                rows.append({**moment(b, (x,), (z,)), lay.full(0, b, 0, x, z): -1.0})
    return rows


def _ns_rows(lay: Layout) -> tuple[list[dict[int, float]], list[float]]:
    rows, rhs = [], []
    for b, x, z in itertools.product(range(N_B), range(N_X), range(N_Z)):
        for c in range(2):
            row = {lay.full(a, b, c, x, z): 1.0 for a in range(2)}
            row[lay.bc(b, c, z)] = -1.0
            rows.append(row)
            rhs.append(0.0)
        for a in range(2):
            row = {lay.full(a, b, c, x, z): 1.0 for c in range(2)}
            row[lay.ab(a, b, x)] = -1.0
            rows.append(row)
            rhs.append(0.0)
    for b in range(N_B):
        for x in range(N_X):
            row = {lay.ab(a, b, x): 1.0 for a in range(2)}
            row[lay.pb(b)] = -1.0
            rows.append(row)
            rhs.append(0.0)
        for z in range(N_Z):
            row = {lay.bc(b, c, z): 1.0 for c in range(2)}
            row[lay.pb(b)] = -1.0
            rows.append(row)
            rhs.append(0.0)
    rows.append({lay.pb(b): 1.0 for b in range(N_B)})
    rhs.append(1.0)
    return rows, rhs


def _ppt_rows(structure: MomentStructure, forms: list[sp.csr_matrix]) -> list[dict[int, float]]:
    pairs = ppt_pairs(structure)
    if not pairs:
        return []
    m1, m2 = np.array(pairs).T
    total = sum(forms[1:], forms[0])
    diff = (total[m1] - total[m2]).tocsr()
    diff.eliminate_zeros()
    rows = [dict(zip(diff.getrow(k).indices.tolist(), diff.getrow(k).data.tolist()))
            for k in range(diff.shape[0])]
    return [r for r in rows if r]


def fixed_tensor_rows(lay: Layout, t: CorrelationTensor) -> tuple[sp.csr_matrix, np.ndarray]:
    """Equalities pinning every P(a,b,c|x,z) to the entries of ``t``."""
    rows, rhs = [], []
    for b, x, z, a, c in itertools.product(range(N_B), range(N_X), range(N_Z), range(2), range(2)):
        rows.append({lay.full(a, b, c, x, z): 1.0})
        rhs.append(float(t.p[b, x, z, a, c]))
    return equality_rows(rows, lay.n_vars), np.array(rhs)


# ---------------------------------------------------------------------------
# outcome-flip symmetry
#
# Relabeling Alice's outcome for setting x (A_x -> 1 - A_x) flips the sign of
# every correlator with x. The functional's coefficients satisfy
# COEF[b, x] = s_x(b) COEF[0, x], so with F_b = {x : s_x(b) = -1} the flips form
# a group isomorphic to the outcomes under XOR and send T_b to T_{b xor g}. The
# flips commute with word reversal, hence with the partial transpose, so averaging
# any feasible point over the group keeps it feasible with the same objective; an
# optimum therefore exists with Gamma_b = sigma_{F_b}(Gamma_0).


def outcome_flips() -> list[frozenset[int]]:
    """F_b for every outcome b, read off the functional's coefficient signs."""
    out = []
    for b in range(N_B):
        flips = set()
        for x in range(N_X):
            if np.array_equal(bellfunc.COEF[b, x], -bellfunc.COEF[0, x]):
                flips.add(x)
            elif not np.array_equal(bellfunc.COEF[b, x], bellfunc.COEF[0, x]):
                raise ValueError(f"coefficient row (b={b}, x={x}) is not a signed copy of b=0")
        out.append(frozenset(flips))
    for b1, b2 in itertools.product(range(N_B), repeat=2):
        if out[b1] ^ out[b2] != out[b1 ^ b2]:
            raise ValueError("outcome flips do not form a group under XOR")
    return out


def flip_matrix(structure: MomentStructure, flips) -> sp.csr_matrix:
    """Matrix S with moments of the flipped strategy = S @ moments (one outcome block)."""
    flips = frozenset(flips)
    aid = {w: i for i, w in enumerate(structure.alice_words)}
    cid = {w: i for i, w in enumerate(structure.charlie_words)}
    rows, cols, vals = [], [], []
    for k, (alpha, gamma) in enumerate(structure.moment_keys):
        hit = [i for i, g in enumerate(alpha) if g in flips]
        for keep in itertools.product((False, True), repeat=len(hit)):
            # each flipped letter is replaced by 1 (dropped) or by -letter (kept)
            drop = {i for i, kept in zip(hit, keep) if not kept}
            word = tuple(g for i, g in enumerate(alpha) if i not in drop)
            rows.append(k)
            cols.append(int(structure.orbit[aid[reduce_word(word)], cid[gamma]]))
            vals.append((-1.0) ** sum(keep))
    n = structure.n_moments
    return sp.csr_matrix((vals, (rows, cols)), shape=(n, n))


def moment_forms(structure: MomentStructure, lay: Layout) -> list[sp.csr_matrix]:
    """Linear forms (n_moments x n_vars) giving d_b in terms of the variables."""
    n, nv = structure.n_moments, lay.n_vars
    if lay.n_blocks == N_B:
        return [sp.csr_matrix((np.ones(n), (np.arange(n), lay.d(b, np.arange(n)))), shape=(n, nv))
                for b in range(N_B)]
    pad = sp.csr_matrix((n, nv - n))
    return [sp.hstack([flip_matrix(structure, f), pad]).tocsr() for f in outcome_flips()]


def tensor_is_symmetric(t: CorrelationTensor, tol: float = 1e-12) -> bool:
    """Whether P(a,b,c|x,z) = P(a xor [x in F_b], 0, c|x,z) for every entry."""
    flips = outcome_flips()
    for b in range(N_B):
        q = t.p[0].copy()
        for x in flips[b]:
            q[x] = q[x, :, ::-1, :]
        if np.max(np.abs(t.p[b] - q)) > tol:
            return False
    return True


def assemble(structure: MomentStructure, ppt: str = "exact",
             fixed: CorrelationTensor | None = None, symmetric: bool = False) -> SdpProblem:
    """Relaxation maximizing the swap functional over real-quantum moment matrices.

    ``ppt`` selects how the partial-transpose condition on the summed moment
    matrix enters: ``"exact"`` as equalities, ``"none"`` dropped, or ``"slack"``
    relaxed to ``|row| <= s`` with objective ``maximize -s`` (the functional is
    then not optimized; this is the quantitative feasibility test used with
    ``fixed``). ``fixed`` pins every ``P(a,b,c|x,z)`` to a given tensor.

    ``symmetric=True`` keeps only Gamma_0 and sets Gamma_b = sigma_{F_b}(Gamma_0)
    (see :func:`outcome_flips`); the optimum is unchanged and a fixed tensor
    must itself be flip-symmetric.
    """
    if ppt not in ("exact", "none", "slack"):
        raise ValueError(f"unknown ppt mode {ppt!r}")
    if symmetric and fixed is not None and not tensor_is_symmetric(fixed):
        raise ValueError("fixed tensor is not outcome-flip symmetric")
    lay = Layout(structure.n_moments, 1 if symmetric else N_B)
    n_vars = lay.n_vars + (1 if ppt == "slack" else 0)
    forms = moment_forms(structure, lay)

    blocks = []
    iu, ju = np.triu_indices(structure.dim)
    moments = structure.entry_map[iu, ju]
    for b in range(lay.n_blocks):
        blocks.append(Block(f"gamma_{b}", structure.dim, "psd",
                            lay.d(b, moments), iu, ju, np.ones(iu.size)))
    nonneg = np.arange(lay.p_full, lay.p_ab)
    blocks.append(Block("p_nonneg", nonneg.size, "diag", nonneg,
                        np.arange(nonneg.size), np.arange(nonneg.size), np.ones(nonneg.size)))

    rows = _data_rows(structure, lay, forms)
    rhs = [0.0] * len(rows)
    ns, ns_rhs = _ns_rows(lay)
    rows += ns
    rhs += ns_rhs
    ppt_rows = _ppt_rows(structure, forms)
    if ppt == "exact":
        rows += ppt_rows
        rhs += [0.0] * len(ppt_rows)
    eq = equality_rows(rows, n_vars)
    eq_rhs = np.array(rhs)

    objective = np.zeros(n_vars)
    if ppt == "slack":
        s = lay.n_vars
        objective[s] = -1.0
        # s - row >= 0 and s + row >= 0
        var, pos, val = [], [], []
        for k, row in enumerate(ppt_rows):
            for sign in (-1.0, 1.0):
                idx = 2 * k + (0 if sign < 0 else 1)
                var.append(s)
                pos.append(idx)
                val.append(1.0)
                for v, coef in row.items():
                    var.append(v)
                    pos.append(idx)
                    val.append(sign * coef)
        # cap s <= 1 so every variable stays in [-1, 1]; only s = 0 matters for feasibility
        cap = 2 * len(ppt_rows)
        var += [s, -1]
        pos += [cap, cap]
        val += [-1.0, 1.0]
        blocks.append(Block("ppt_slack", cap + 1, "diag", var, pos, pos, val))
    else:
        objective[:lay.n_vars] = objective_vector(lay)

    if fixed is not None:
        frows, frhs = fixed_tensor_rows(lay, fixed)
        eq = sp.vstack([eq, sp.csr_matrix((frows.data, frows.indices, frows.indptr),
                                          shape=(frows.shape[0], n_vars))]).tocsr()
        eq_rhs = np.concatenate([eq_rhs, frhs])

    names = variable_names(structure) + (["s"] if ppt == "slack" else [])
    meta = {
        "scenario": "swap network, real moment-matrix relaxation",
        "level": [structure.n_a, structure.n_c],
        "ppt": ppt,
        "fixed_tensor": fixed is not None,
        "symmetric": symmetric,
        "n_moments_per_block": structure.n_moments,
        "n_ppt_rows": len(ppt_rows),
        "alice_basis": [m.label() for m in structure.alice_basis],
        "charlie_basis": [m.label() for m in structure.charlie_basis],
    }
    # |Gamma_ij| <= sqrt(Gamma_ii Gamma_jj) <= P(b) <= 1 and all P entries lie in [0, 1]
    meta["var_bound"] = 1.0
    return SdpProblem(n_vars, objective, blocks, eq, eq_rhs, names, meta).validate()


# ---------------------------------------------------------------------------
# moments of concrete strategies


def _word_operator(word: Word, projectors: list[np.ndarray], d: int) -> np.ndarray:
    out = np.eye(d, dtype=complex)
    for g in word:
        out = out @ projectors[g]
    return out


def strategy_moments(structure: MomentStructure, s: Strategy) -> np.ndarray:
    """Complex moments ``tr(omega_b (pi(alpha) (x) pi(gamma)))`` as array [b, moment id]."""
    d_a, _, _, d_c = s.dims
    pa = [observable_projectors(o)[0] for o in s.alice]
    pc = [observable_projectors(o)[0] for o in s.charlie]
    aops = np.array([_word_operator(w, pa, d_a) for w in structure.alice_words])
    cops = np.array([_word_operator(w, pc, d_c) for w in structure.charlie_words])
    out = np.zeros((N_B, structure.n_moments), dtype=complex)
    ia = np.array([structure.alice_words.index(k[0]) for k in structure.moment_keys])
    ig = np.array([structure.charlie_words.index(k[1]) for k in structure.moment_keys])
    for b, w in enumerate(s.conditional_states()):
        w4 = w.reshape(d_a, d_c, d_a, d_c)
        # tr(w (A (x) C)) = sum w[i,k,j,l] A[j,i] C[l,k]
        table = np.einsum("ikjl,aji,glk->ag", w4, aops, cops, optimize=True)
        out[b] = table[ia, ig]
    return out


def strategy_point(structure: MomentStructure, s: Strategy,
                   tensor: CorrelationTensor | None = None, symmetric: bool = False) -> np.ndarray:
    """Variable vector of the relaxation evaluated on a strategy (real part of the moments).

    With ``symmetric`` only the b = 0 block is kept, which is a point of the
    reduced problem when the strategy itself is flip-symmetric.
    """
    from .netsim import correlations

    lay = Layout(structure.n_moments, 1 if symmetric else N_B)
    t = correlations(s) if tensor is None else tensor
    y = np.zeros(lay.n_vars)
    y[:lay.p_full] = strategy_moments(structure, s).real[:lay.n_blocks].ravel()
    for b, x, z, a, c in itertools.product(range(N_B), range(N_X), range(N_Z), range(2), range(2)):
        y[lay.full(a, b, c, x, z)] = t.p[b, x, z, a, c]
    pab, pbc, pb = t.p_ab(), t.p_bc(), t.p_b()
    for b, x, a in itertools.product(range(N_B), range(N_X), range(2)):
        y[lay.ab(a, b, x)] = pab[b, x, a]
    for b, z, c in itertools.product(range(N_B), range(N_Z), range(2)):
        y[lay.bc(b, c, z)] = pbc[b, z, c]
    for b in range(N_B):
        y[lay.pb(b)] = pb[b]
    return y


def ppt_violation(structure: MomentStructure, moments: np.ndarray) -> float:
    """Largest |sum_b d_b(alpha, gamma) - sum_b d_b(alpha^dagger, gamma)| over PPT pairs."""
    total = moments.sum(axis=0)
    pairs = ppt_pairs(structure)
    if not pairs:
        return 0.0
    m1, m2 = np.array(pairs).T
    return float(np.max(np.abs(total[m1] - total[m2])))


def moment_matrix(structure: MomentStructure, moments_b: np.ndarray) -> np.ndarray:
    """Dense block for one outcome from its moment vector."""
    return moments_b[structure.entry_map]
