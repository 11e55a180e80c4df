from __future__ import annotations

import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from realnet import npo, reduced
from realnet.bellfunc import COEF, QUANTUM_MAX
from realnet.bound import lifted_solution
from realnet.netsim import apply_white_noise, correlations, ideal_strategy
from realnet.sdp.certify import certificate
from realnet.sdp.solver import OPTIMAL, solve


@pytest.fixture(scope="module")
def group():
    return reduced.symmetry_group()


@pytest.fixture(scope="module")
def solved():
    out = {}
    for level in [(1, 1), (2, 1), (1, 2)]:
        rs = reduced.build_reduced(*level)
        p = reduced.assemble_reduced(rs)
        out[level] = rs, p, solve(p, gap_tol=1e-9)
    return out


def compose(h, g):
    """Relabeling ``h o g`` (apply g first)."""
    pa = tuple(h.pa[g.pa[x]] for x in range(len(g.pa)))
    sa = tuple(g.sa[x] * h.sa[g.pa[x]] for x in range(len(g.pa)))
    pc = tuple(h.pc[g.pc[z]] for z in range(len(g.pc)))
    sc = tuple(g.sc[z] * h.sc[g.pc[z]] for z in range(len(g.pc)))
    return reduced.Relabeling(pa, sa, pc, sc)


class TestWords:
    def test_reduce(self):
        assert reduced.reduce_obs((0, 0, 1)) == (1,)
        assert reduced.reduce_obs((0, 1, 1, 0)) == ()
        assert reduced.reduce_obs((2, 1, 2)) == (2, 1, 2)

    @pytest.mark.parametrize("n,k,count", [(3, 1, 4), (3, 2, 10), (6, 2, 37), (6, 1, 7)])
    def test_basis_size(self, n, k, count):
        # 1 + n + n (n - 1) + ... reduced words
        words = reduced.obs_basis(n, k)
        assert len(words) == count == sum(n * (n - 1) ** (d - 1) if d else 1 for d in range(k + 1))
        assert all(reduced.reduce_obs(w) == w for w in words)

    @given(st.lists(st.integers(0, 3), max_size=10))
    def test_reduce_is_group_word(self, word):
        # the reduced word multiplies out to the same product of reflections
        vecs = np.linalg.qr(np.random.default_rng(0).standard_normal((4, 4)))[0] @ np.ones((4, 4)) / 2
        vecs = vecs + np.eye(4)
        ops = [np.eye(4) - 2 * np.outer(v, v) / (v @ v) for v in vecs.T]  # non-commuting reflections
        prod = lambda w: np.linalg.multi_dot([np.eye(4), np.eye(4)] + [ops[g] for g in w])
        assert_allclose(prod(word), prod(reduced.reduce_obs(word)), atol=1e-12)


class TestSymmetryGroup:
    def test_order(self, group):
        assert len(group) == 48
        assert len(set(group)) == 48

    def test_invariance(self, group):
        for h in group:
            for x, z in itertools.product(range(3), range(6)):
                assert COEF[0][x, z] * h.sa[x] * h.sc[z] == COEF[0][h.pa[x], h.pc[z]]

    def test_closure(self, group):
        members = set(group)
        for h, g in itertools.product(group, repeat=2):
            assert compose(h, g) in members

    def test_contains_identity_and_inverses(self, group):
        ident = reduced.Relabeling((0, 1, 2), (1, 1, 1), tuple(range(6)), (1,) * 6)
        assert ident in group
        for h in group:
            assert any(compose(h, g) == ident for g in group)

    def test_apply_sign(self):
        h = reduced.Relabeling((1, 0, 2), (-1, 1, 1), tuple(range(6)), (1, -1, 1, 1, 1, 1))
        assert h.apply((0, 2), (1,)) == ((1, 2), (1,), 1)
        assert h.apply((0,), ()) == ((1,), (), -1)


class TestStructure:
    @pytest.mark.parametrize("level,n_classes", [((1, 1), 8), ((2, 1), 26), ((1, 2), 138)])
    def test_class_counts(self, level, n_classes):
        rs = reduced.build_reduced(*level)
        assert rs.n_classes == n_classes
        assert rs.group_order == 48

    def test_dimension(self):
        rs = reduced.build_reduced(1, 1)
        assert rs.dim == 4 * 7

    def test_lookup_relations(self):
        rs = reduced.build_reduced(2, 1)
        # real symmetry: a key and its transpose share a class with the same sign
        assert rs.lookup((0, 1), (2,)) == rs.lookup((1, 0), (2,))
        assert rs.lookup((), ()) == (rs.unit_class, 1)

    def test_odd_keys_vanish(self):
        # <A_x> is odd under some outcome flip and so is forced to zero
        rs = reduced.build_reduced(1, 1)
        for x in range(3):
            cls, sign = rs.lookup((x,), ())
            assert cls == -1 or sign == 0

    def test_dropping_ppt_gives_more_classes(self):
        assert reduced.build_reduced(2, 1, ppt=False).n_classes > reduced.build_reduced(2, 1).n_classes


class TestReducedOptimum:
    @pytest.mark.parametrize("level", [(1, 1), (2, 1), (1, 2)])
    def test_value(self, solved, level):
        rs, p, sol = solved[level]
        assert sol.status == OPTIMAL
        assert sol.primal_value == pytest.approx(QUANTUM_MAX, abs=1e-7)
        assert certificate(p, sol).bound == pytest.approx(QUANTUM_MAX, abs=1e-7)

    def test_matches_full_level_one(self, solved):
        rs, p, sol = solved[(1, 1)]
        full = solve(npo.assemble(npo.build_structure(1, 1)), gap_tol=1e-9)
        assert full.primal_value == pytest.approx(sol.primal_value, abs=1e-6)

    @pytest.mark.parametrize("level", [(1, 1), (2, 1)])
    def test_lift_primal_feasible(self, solved, level):
        rs, p, sol = solved[level]
        y, t = reduced.lift(rs, reduced.class_values(rs, p, sol.y))
        res = npo.assemble(npo.build_structure(*level)).residuals(y)
        assert res["eq_residual"] < 1e-12
        assert res["min_eig"] > -1e-8
        assert res["objective"] == pytest.approx(sol.primal_value, abs=1e-8)
        assert t.is_valid(1e-8)

    @pytest.mark.parametrize("level", [(1, 1), (2, 1)])
    def test_lift_dual_certifies_full(self, solved, level):
        # the lifted primal and lifted dual sandwich the full optimum at the reduced value
        rs, p, sol = solved[level]
        full = npo.assemble(npo.build_structure(*level))
        cert = certificate(full, lifted_solution(rs, sol))
        assert cert.bound == pytest.approx(QUANTUM_MAX, abs=1e-6)
        assert cert.bound >= sol.primal_value - 1e-9

    def test_lift_dual_shapes(self, solved):
        rs, p, sol = solved[(1, 1)]
        blocks = reduced.lift_dual(rs, [b.data.real for b in sol.dual_blocks])
        full = npo.assemble(npo.build_structure(1, 1))
        assert [b.shape[0] for b in blocks] == [blk.size for blk in full.blocks]
        for b in blocks[:4]:
            assert np.linalg.eigvalsh(b)[0] > -1e-10


class TestFixedTensor:
    def test_ideal_feasible_level_one(self):
        rs = reduced.build_reduced(1, 1)
        p = reduced.assemble_reduced(rs, fixed=correlations(ideal_strategy()), min_eig=True)
        sol = solve(p, gap_tol=1e-9)
        assert sol.status == OPTIMAL
        assert sol.primal_value >= -1e-7

    def test_noisy_tensor_accepted(self):
        rs = reduced.build_reduced(1, 1)
        t = correlations(apply_white_noise(ideal_strategy(), 0.8))
        p = reduced.assemble_reduced(rs, fixed=t)
        assert p.metadata["objective_constant"] == pytest.approx(QUANTUM_MAX * 0.64, abs=1e-12)

    def test_rejects_asymmetric_tensor(self):
        rs = reduced.build_reduced(1, 1)
        p = correlations(ideal_strategy()).p.copy()
        p[0, 0, 0] = [[0.5, 0.0], [0.0, 0.5]]
        p[0, 0, 0] *= p[0, 0, 1].sum()
        with pytest.raises(ValueError):
            reduced.assemble_reduced(rs, fixed=type(correlations(ideal_strategy()))(p))

    def test_min_eig_variable(self):
        rs = reduced.build_reduced(1, 1)
        p = reduced.assemble_reduced(rs, min_eig=True)
        assert p.var_names[-1] == "lam"
        assert p.objective[-1] == 1 and np.count_nonzero(p.objective) == 1
