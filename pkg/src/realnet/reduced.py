"""Symmetry-reduced swap relaxation in the +-1 observable basis.

The moment matrices of :mod:`realnet.npo` are written over projector words. The
same relaxation can be written over words in the observables ``O = 2P - 1``
(``O^2 = 1``, so a word is reduced by cancelling equal adjacent letters); the
span of the words of degree ``<= n`` is the same, so the two moment matrices are
congruent and define the same relaxation.

In this basis every relabeling that leaves the functional invariant acts on
moments as a signed permutation:

* the outcome flips ``F_b`` (see :func:`realnet.npo.outcome_flips`) map block
  ``b`` to block ``0``, so only ``Gamma_0`` is kept;
* the signed permutations ``h`` of Alice's settings that, with a matching signed
  permutation of Charlie's settings, leave ``T_0`` unchanged, fix ``Gamma_0``
  after averaging.

Both commute with the partial transpose, so averaging a feasible point over the
group keeps it feasible with the same objective. The remaining conditions are
also identifications of moments: real symmetry ``(alpha, gamma) ~ (alpha^T,
gamma^T)`` and, since ``sum_b Gamma_b`` keeps only the keys that are even under
every ``F_b``, the partial-transpose condition ``(alpha, gamma) ~ (alpha^T,
gamma)`` on those keys. The reduced problem therefore has one free variable per
class of moments and no equality constraints; classes that contain a key together
with its negative vanish.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from . import bellfunc
from .netsim import N_B, N_X, N_Z, CorrelationTensor
from .npo import Layout, build_structure, outcome_flips
from .sdp.problem import Block, SdpProblem

Word = tuple[int, ...]
COEF0 = bellfunc.COEF[0]


def reduce_obs(word) -> Word:
    """Cancel equal adjacent letters (``O O = 1``) until none remain."""
    out: list[int] = []
    for g in word:
        if out and out[-1] == g:
            out.pop()
        else:
            out.append(int(g))
    return tuple(out)


def obs_basis(n_generators: int, max_degree: int) -> list[Word]:
    """Reduced observable words of degree <= max_degree, degree-lexicographic."""
    out: list[Word] = [()]
    frontier: list[Word] = [()]
    for _ in range(max_degree):
        frontier = [w + (g,) for w in frontier for g in range(n_generators) if not w or w[-1] != g]
        out.extend(frontier)
    return out


@dataclass(frozen=True)
class Relabeling:
    """``A_x -> sa[x] A_{pa[x]}`` and ``C_z -> sc[z] C_{pc[z]}``."""

    pa: tuple[int, ...]
    sa: tuple[int, ...]
    pc: tuple[int, ...]
    sc: tuple[int, ...]

    def apply(self, alpha: Word, gamma: Word) -> tuple[Word, Word, int]:
        sign = 1
        for g in alpha:
            sign *= self.sa[g]
        for g in gamma:
            sign *= self.sc[g]
        return tuple(self.pa[g] for g in alpha), tuple(self.pc[g] for g in gamma), sign


def symmetry_group(coef: np.ndarray = COEF0) -> list[Relabeling]:
    """All signed relabelings of both parties that leave ``sum coef[x,z] <A_x C_z>`` unchanged.

    Invariance means ``coef[x, z] sa[x] sc[z] = coef[pa[x], pc[z]]``. Charlie's map
    is forced column by column once Alice's is fixed.
    """
    n_x, n_z = coef.shape
    cols = [coef[:, z] for z in range(n_z)]
    out = []
    for pa in itertools.permutations(range(n_x)):
        for sa in itertools.product((1, -1), repeat=n_x):
            pc, sc = [], []
            for z in range(n_z):
                # column z after the Alice map, indexed by the new setting pa[x]
                v = np.zeros(n_x)
                for x in range(n_x):
                    v[pa[x]] = coef[x, z] * sa[x]
                hit = [(z2, s) for z2 in range(n_z) for s in (1, -1) if np.array_equal(s * v, cols[z2])]
                if len(hit) != 1:
                    break
                pc.append(hit[0][0])
                sc.append(hit[0][1])
            else:
                if sorted(pc) == list(range(n_z)):
                    out.append(Relabeling(tuple(pa), tuple(sa), tuple(pc), tuple(sc)))
    return out


def _flip_even(alpha: Word, flips: list[frozenset[int]]) -> bool:
    return all(sum(g in f for g in alpha) % 2 == 0 for f in flips)


class _SignedUnionFind:
    """Union-find storing, for every key, its sign relative to the class root."""

    def __init__(self, n: int):
        self.parent = list(range(n))
        self.sign = [1] * n
        self.zero = [False] * n

    def find(self, i: int) -> tuple[int, int]:
        s = 1
        path = []
        while self.parent[i] != i:
            path.append(i)
            s *= self.sign[i]
            i = self.parent[i]
        root = i
        # path compression with accumulated signs
        acc = s
        for j in path:
            nxt_sign = acc
            acc *= self.sign[j]
            self.parent[j] = root
            self.sign[j] = nxt_sign
        return root, s

    def union(self, i: int, j: int, s: int) -> None:
        """Record ``x_i = s * x_j``."""
        ri, si = self.find(i)
        rj, sj = self.find(j)
        if ri == rj:
            if si != s * sj:
                self.zero[ri] = True
            return
        self.parent[ri] = rj
        self.sign[ri] = si * s * sj
        self.zero[rj] = self.zero[rj] or self.zero[ri]


@dataclass
class ReducedStructure:
    n_a: int
    n_c: int
    ppt: bool
    alice_basis: list[Word]
    charlie_basis: list[Word]
    keys: list[tuple[Word, Word]]
    key_class: np.ndarray  # class index per key, -1 for identically zero
    key_sign: np.ndarray
    n_classes: int
    unit_class: int
    entry_class: np.ndarray  # [i, j] -> class (or -1)
    entry_sign: np.ndarray
    group_order: int

    @property
    def dim(self) -> int:
        return len(self.alice_basis) * len(self.charlie_basis)

    def key_index(self, alpha, gamma) -> int:
        return self._index[(reduce_obs(alpha), reduce_obs(gamma))]

    def lookup(self, alpha, gamma) -> tuple[int, int]:
        """(class, sign) of a moment; class -1 means the moment is forced to zero."""
        k = self.key_index(alpha, gamma)
        return int(self.key_class[k]), int(self.key_sign[k])


def _products(basis: list[Word]) -> list[Word]:
    seen: dict[Word, None] = {}
    for a in basis:
        for a2 in basis:
            seen.setdefault(reduce_obs(a2 + a[::-1]), None)
    return list(seen)


def build_reduced(n_a: int, n_c: int, ppt: bool = True) -> ReducedStructure:
    if n_a < 1 or n_c < 1:
        raise ValueError("relaxation levels must be at least 1")
    ab, cb = obs_basis(N_X, n_a), obs_basis(N_Z, n_c)
    aw, cw = _products(ab), _products(cb)
    keys = [(a, c) for a in aw for c in cw]
    index = {k: i for i, k in enumerate(keys)}
    uf = _SignedUnionFind(len(keys))
    group = symmetry_group()
    flips = outcome_flips()
    for i, (a, c) in enumerate(keys):
        uf.union(i, index[(a[::-1], c[::-1])], 1)
        if ppt and _flip_even(a, flips):
            uf.union(i, index[(a[::-1], c)], 1)
        for h in group:
            a2, c2, s = h.apply(a, c)
            uf.union(i, index[(a2, c2)], s)
    roots: dict[int, int] = {}
    key_class = np.empty(len(keys), dtype=np.int64)
    key_sign = np.empty(len(keys), dtype=np.int64)
    for i in range(len(keys)):
        r, s = uf.find(i)
        if uf.zero[r]:
            key_class[i], key_sign[i] = -1, 0
            continue
        key_class[i] = roots.setdefault(r, len(roots))
        key_sign[i] = s
    # entry ((a, c), (a', c')) is the moment of (a' a^T, c' c^T)
    rows = [(a, c) for a in ab for c in cb]
    kid = np.array([[index[(reduce_obs(a2 + a[::-1]), reduce_obs(c2 + c[::-1]))]
                     for (a2, c2) in rows] for (a, c) in rows])
    unit = int(key_class[index[((), ())]])
    out = ReducedStructure(n_a, n_c, ppt, ab, cb, keys, key_class, key_sign, len(roots), unit,
                           key_class[kid], key_sign[kid], len(group))
    out._index = index
    return out


def _correlator_terms(rs: ReducedStructure, x: int | None, z: int | None) -> tuple[int, int]:
    return rs.lookup(() if x is None else (x,), () if z is None else (z,))


def assemble_reduced(rs: ReducedStructure, fixed: CorrelationTensor | None = None,
                     min_eig: bool = False) -> SdpProblem:
    """SDP over the class variables.

    Variables are the class values except the unit class, whose value is
    ``P(b) = 1/4``. The objective is ``sum_b T_b = 4 T_0``. ``fixed`` pins every
    correlator and marginal of block 0 to a flip- and relabeling-symmetric tensor;
    ``min_eig`` adds a variable ``lam in [-1, 1/4]`` and maximizes it subject to
    ``Gamma_0 - lam I >= 0``, so a certified negative optimum proves infeasibility.
    """
    # class -> variable index (unit class and pinned classes become constants)
    const: dict[int, float] = {rs.unit_class: 1.0 / N_B}
    if fixed is not None:
        if not _fixed_is_symmetric(rs, fixed):
            raise ValueError("fixed tensor is not invariant under the reduction group")
        p0 = fixed.p[0]
        for x in range(N_X):
            cls, s = _correlator_terms(rs, x, None)
            val = float(p0[x, 0].sum() - p0[x, 1].sum())
            _pin(const, cls, s, val)
        for z in range(N_Z):
            cls, s = _correlator_terms(rs, None, z)
            _pin(const, cls, s, _marg_c(p0, z))
        for x, z in itertools.product(range(N_X), range(N_Z)):
            cls, s = _correlator_terms(rs, x, z)
            e = p0[x, z, 0, 0] - p0[x, z, 0, 1] - p0[x, z, 1, 0] + p0[x, z, 1, 1]
            _pin(const, cls, s, float(e))
    free = [c for c in range(rs.n_classes) if c not in const]
    var_of = {c: i for i, c in enumerate(free)}
    n_vars = len(free) + (1 if min_eig else 0)

    def linear(cls: int, sign: int) -> tuple[list[int], list[float]]:
        """(vars, coefs) of sign * class, with -1 standing for the constant term."""
        if cls < 0 or sign == 0:
            return [], []
        if cls in const:
            return [-1], [sign * const[cls]]
        return [var_of[cls]], [float(sign)]

    blocks = []
    iu, ju = np.triu_indices(rs.dim)
    var, row, col, val = [], [], [], []
    for i, j in zip(iu, ju):
        vs, cs = linear(int(rs.entry_class[i, j]), int(rs.entry_sign[i, j]))
        var += vs
        val += cs
        row += [i] * len(vs)
        col += [j] * len(vs)
    if min_eig:
        lam = n_vars - 1
        var += [lam] * rs.dim
        row += list(range(rs.dim))
        col += list(range(rs.dim))
        val += [-1.0] * rs.dim
    blocks.append(Block("gamma_0", rs.dim, "psd", var, row, col, val))

    # P(a,0,c|x,z) >= 0 up to the factor 1/4
    var, pos, val = [], [], []
    k = 0
    for x, z in itertools.product(range(N_X), range(N_Z)):
        for a, c in itertools.product((1, -1), repeat=2):
            for (cls, s), coef in ((rs.lookup((), ()), 1), (_correlator_terms(rs, x, None), a),
                                   (_correlator_terms(rs, None, z), c),
                                   (_correlator_terms(rs, x, z), a * c)):
                vs, cs = linear(cls, s)
                var += vs
                val += [coef * v for v in cs]
                pos += [k] * len(vs)
            k += 1
    if min_eig:
        # -1 <= lam, so that every variable of the feasible set is bounded by 1
        var += [n_vars - 1, -1]
        pos += [k, k]
        val += [1.0, 1.0]
        k += 1
    blocks.append(Block("p_nonneg", k, "diag", var, pos, pos, val))

    objective = np.zeros(n_vars)
    if min_eig:
        objective[-1] = 1.0
    else:
        for x, z in itertools.product(range(N_X), range(N_Z)):
            cls, s = _correlator_terms(rs, x, z)
            if COEF0[x, z] and cls >= 0 and cls not in const:
                objective[var_of[cls]] += N_B * COEF0[x, z] * s
    names = [f"m{c}{_class_label(rs, c)}" for c in free] + (["lam"] if min_eig else [])
    meta = {
        "scenario": "swap network, symmetry-reduced real moment relaxation",
        "level": [rs.n_a, rs.n_c],
        "ppt": "exact" if rs.ppt else "none",
        "basis": "observable",
        "group_order": rs.group_order,
        "n_classes": rs.n_classes,
        "fixed_tensor": fixed is not None,
        "min_eig": min_eig,
        "objective_constant": _objective_constant(rs, const),
        # |Gamma_ij| <= Gamma_00 = 1/4 for unitary words; lam is boxed in [-1, 1/4]
        "var_bound": 1.0,
    }
    return SdpProblem(n_vars, objective, blocks, np.zeros((0, n_vars)), np.zeros(0), names,
                      meta).validate()


def _marg_c(p0: np.ndarray, z: int) -> float:
    # Charlie's marginal correlator from the x = 0 slice (no-signalling makes x irrelevant)
    return float(p0[0, z, :, 0].sum() - p0[0, z, :, 1].sum())


def _pin(const: dict[int, float], cls: int, sign: int, value: float, tol: float = 1e-12) -> None:
    if cls < 0:
        if abs(value) > tol:
            raise ValueError("fixed tensor gives a nonzero value to a moment forced to vanish")
        return
    v = sign * value
    if cls in const and abs(const[cls] - v) > tol:
        raise ValueError("fixed tensor is inconsistent with the moment classes")
    const[cls] = v


def _objective_constant(rs: ReducedStructure, const: dict[int, float]) -> float:
    total = 0.0
    for x, z in itertools.product(range(N_X), range(N_Z)):
        cls, s = _correlator_terms(rs, x, z)
        if COEF0[x, z] and cls in const:
            total += N_B * COEF0[x, z] * s * const[cls]
    return total


def _class_label(rs: ReducedStructure, cls: int) -> str:
    k = int(np.flatnonzero(rs.key_class == cls)[0])
    a, c = rs.keys[k]
    la = "".join(f"A{g + 1}" for g in a) or "1"
    lc = "".join(f"C{g + 1}" for g in c) or "1"
    return f"({la},{lc})"


def _fixed_is_symmetric(rs: ReducedStructure, t: CorrelationTensor, tol: float = 1e-12) -> bool:
    from .npo import tensor_is_symmetric

    if not tensor_is_symmetric(t, tol):
        return False
    p0 = t.p[0]
    e = np.einsum("xzac,a,c->xz", p0, [1, -1], [1, -1])
    ea = np.einsum("xzac,a->x", p0[:, :1], [1, -1])
    ec = np.einsum("xzac,c->z", p0[:1], [1, -1])
    for h in symmetry_group():
        for x, z in itertools.product(range(N_X), range(N_Z)):
            if abs(e[x, z] - h.sa[x] * h.sc[z] * e[h.pa[x], h.pc[z]]) > tol:
                return False
        for x in range(N_X):
            if abs(ea[x] - h.sa[x] * ea[h.pa[x]]) > tol:
                return False
        for z in range(N_Z):
            if abs(ec[z] - h.sc[z] * ec[h.pc[z]]) > tol:
                return False
    return True


# ---------------------------------------------------------------------------
# lifting a reduced point to the projector formulation


def class_values(rs: ReducedStructure, p: SdpProblem, y: np.ndarray) -> np.ndarray:
    """Value of every class from a point of :func:`assemble_reduced` (constants included)."""
    vals = np.zeros(rs.n_classes)
    names = p.var_names or []
    free = [int(n[1:n.index("(")]) for n in names if n.startswith("m")]
    vals[free] = y[:len(free)]
    vals[rs.unit_class] = 1.0 / N_B
    return vals


def key_values(rs: ReducedStructure, vals: np.ndarray) -> dict[tuple[Word, Word], float]:
    cls = np.maximum(rs.key_class, 0)
    v = np.where(rs.key_class >= 0, rs.key_sign * vals[cls], 0.0)
    return dict(zip(rs.keys, v.tolist()))


def lift(rs: ReducedStructure, vals: np.ndarray) -> tuple[np.ndarray, object]:
    """Point of the projector relaxation ``npo.assemble(build_structure(n_a, n_c))``.

    Projector words expand as ``P_w = 2^-|w| sum_S O_{w_S}``; block ``b`` takes the
    observable moments of block 0 with the signs of the outcome flip ``F_b``.
    """
    st = build_structure(rs.n_a, rs.n_c)
    obs = key_values(rs, vals)
    flips = outcome_flips()
    lay = Layout(st.n_moments)
    y = np.zeros(lay.n_vars)

    def expand(word: Word) -> dict[Word, float]:
        out: dict[Word, float] = {}
        for mask in itertools.product((0, 1), repeat=len(word)):
            w = reduce_obs(tuple(g for g, m in zip(word, mask) if m))
            out[w] = out.get(w, 0.0) + 0.5 ** len(word)
        return out

    for k, (alpha, gamma) in enumerate(st.moment_keys):
        ea, ec = expand(alpha), expand(gamma)
        for b in range(N_B):
            total = 0.0
            for wa, ca in ea.items():
                sign = (-1) ** sum(g in flips[b] for g in wa)
                for wc, cc in ec.items():
                    total += ca * cc * sign * obs[(wa, wc)]
            y[lay.d(b, k)] = total
    p = np.zeros((N_B, N_X, N_Z, 2, 2))
    for b, x, z in itertools.product(range(N_B), range(N_X), range(N_Z)):
        sx = -1 if x in flips[b] else 1
        m1, mx, mz, mxz = obs[((), ())], sx * obs[((x,), ())], obs[((), (z,))], sx * obs[((x,), (z,))]
        for a, c in itertools.product(range(2), repeat=2):
            sa, sc = 1 - 2 * a, 1 - 2 * c
            p[b, x, z, a, c] = (m1 + sa * mx + sc * mz + sa * sc * mxz) / 4
    t = CorrelationTensor(p)
    for b, x, z, a, c in itertools.product(range(N_B), range(N_X), range(N_Z), range(2), range(2)):
        y[lay.full(a, b, c, x, z)] = p[b, x, z, a, c]
    pab, pbc, pb = t.p_ab(), t.p_bc(), t.p_b()
    for b, x, a in itertools.product(range(N_B), range(N_X), range(2)):
        y[lay.ab(a, b, x)] = pab[b, x, a]
    for b, z, c in itertools.product(range(N_B), range(N_Z), range(2)):
        y[lay.bc(b, c, z)] = pbc[b, z, c]
    for b in range(N_B):
        y[lay.pb(b)] = pb[b]
    return y, t


# ---------------------------------------------------------------------------
# lifting a reduced dual point to the projector formulation


def _row_action(rs: ReducedStructure, h: Relabeling) -> tuple[np.ndarray, np.ndarray]:
    rows = [(a, c) for a in rs.alice_basis for c in rs.charlie_basis]
    index = {r: i for i, r in enumerate(rows)}
    perm, sign = np.empty(len(rows), dtype=np.int64), np.empty(len(rows))
    for i, (a, c) in enumerate(rows):
        a2, c2, s = h.apply(a, c)
        perm[i], sign[i] = index[(a2, c2)], s
    return perm, sign


def _projector_to_observable(basis: list[Word]) -> np.ndarray:
    """Q with projector word ``basis[i]`` = sum_j Q[i, j] observable word ``basis[j]``."""
    index = {w: i for i, w in enumerate(basis)}
    q = np.zeros((len(basis), len(basis)))
    for i, word in enumerate(basis):
        for mask in itertools.product((0, 1), repeat=len(word)):
            w = reduce_obs(tuple(g for g, m in zip(word, mask) if m))
            q[i, index[w]] += 0.5 ** len(word)
    return q


def lift_dual(rs: ReducedStructure, dual_blocks: list[np.ndarray]) -> list[np.ndarray]:
    """Dual blocks for ``npo.assemble(build_structure(n_a, n_c))`` from a reduced dual point.

    The Gram block is averaged over the relabeling group, carried to block ``b``
    with the signs of ``F_b`` and to the projector basis with ``Q``; with
    ``Gamma^proj = Q Gamma^obs Q^T`` the pairing of every block with a symmetric
    point reproduces the reduced pairing. Equality multipliers are left to the
    certificate's least-squares refinement.
    """
    w, wd = np.asarray(dual_blocks[0], dtype=float), np.diag(np.asarray(dual_blocks[1], dtype=float))
    avg = np.zeros_like(w)
    for h in symmetry_group():
        perm, sign = _row_action(rs, h)
        avg += np.outer(sign, sign) * w[np.ix_(perm, perm)]
    avg /= rs.group_order
    q = np.kron(_projector_to_observable(rs.alice_basis), _projector_to_observable(rs.charlie_basis))
    qinv = np.linalg.inv(q)
    flips = outcome_flips()
    rows = [(a, c) for a in rs.alice_basis for c in rs.charlie_basis]
    out = []
    for f in flips:
        d = np.array([(-1.0) ** sum(g in f for g in a) for a, _ in rows])
        out.append(qinv.T @ (np.outer(d, d) * avg) @ qinv / N_B)
    # p_nonneg: full order (b, x, z, a, c); reduced order (x, z, a, c) with a = 0 meaning +1
    red = wd[:N_X * N_Z * 4].reshape(N_X, N_Z, 2, 2)
    full = np.zeros((N_B, N_X, N_Z, 2, 2))
    for b, x in itertools.product(range(N_B), range(N_X)):
        full[b, x] = red[x, :, ::-1] if x in flips[b] else red[x]
    out.append(np.diag(full.ravel()))
    return out
