from __future__ import annotations

import importlib.util
import itertools
import json
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from realnet import npo, qcore
from realnet.bellfunc import QUANTUM_MAX
from realnet.netsim import (Strategy, apply_white_noise, correlations, ideal_strategy,
                            observable_projectors)

HERE = Path(__file__).resolve().parent
GOLDEN = json.loads((HERE / "data" / "npo_level_counts.json").read_text())


def _oracle():
    spec = importlib.util.spec_from_file_location("enumerate_npo", HERE / "oracles" / "enumerate_npo.py")
    mod = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(mod)
    return mod


def random_strategy(rng, real=False):
    proj = qcore.random_projective_measurement(4, 4, rng, real)
    return Strategy(qcore.random_density(4, rng, real=real), qcore.random_density(4, rng, real=real),
                    [qcore.random_involution(2, rng, real) for _ in range(3)], list(proj),
                    [qcore.random_involution(2, rng, real) for _ in range(6)])


@pytest.fixture(scope="module")
def s11():
    return npo.build_structure(1, 1)


class TestWords:
    def test_reduce(self):
        assert npo.reduce_word((0, 0, 1, 1, 1, 0)) == (0, 1, 0)
        assert npo.reduce_word(()) == ()

    def test_product_and_adjoint(self):
        assert npo.product((0, 1), (1, 2)) == (0, 1, 2)
        assert npo.adjoint((0, 1, 2)) == (2, 1, 0)

    def test_canonicalize(self):
        m = npo.canonicalize([2, 2, 0], "C", 6)
        assert m.word == (2, 0) and m.degree == 2
        assert m.label() == "C3C1"
        with pytest.raises(IndexError):
            npo.canonicalize([3], "A", 3)

    def test_monomial_algebra(self):
        a = npo.Monomial((0, 1), "A")
        assert (a * a.adjoint()).word == (0, 1, 0)
        assert npo.Monomial((), "A").is_identity
        with pytest.raises(ValueError):
            a * npo.Monomial((0,), "C")

    def test_basis_order(self):
        words = [m.word for m in npo.enumerate_basis(3, 2)]
        assert words[:4] == [(), (0,), (1,), (2,)]
        assert len(words) == 10
        assert all(npo.reduce_word(w) == w for w in words)
        with pytest.raises(ValueError):
            npo.enumerate_basis(3, -1)

    @given(st.lists(st.integers(0, 5), max_size=12))
    def test_reduction_idempotent(self, word):
        r = npo.reduce_word(word)
        assert npo.reduce_word(r) == r
        assert npo.adjoint(npo.reduce_word(npo.adjoint(tuple(word)))) == r


class TestCounts:
    def test_golden_matches_oracle(self):
        oracle = _oracle()
        assert [oracle.counts(*g["level"]) for g in GOLDEN] == GOLDEN

    @pytest.mark.parametrize("g", GOLDEN, ids=lambda g: "x".join(map(str, g["level"])))
    def test_structure(self, g):
        s = npo.build_structure(*g["level"])
        assert s.dim == g["block_dim"]
        assert len(s.alice_basis) == g["alice_basis"]
        assert len(s.charlie_basis) == g["charlie_basis"]
        assert len(s.alice_words) == g["alice_words"]
        assert len(s.charlie_words) == g["charlie_words"]
        assert s.n_moments == g["moments_per_block"]
        assert len(npo.ppt_pairs(s)) == g["ppt_rows"]

    @pytest.mark.parametrize("g", GOLDEN[:3], ids=lambda g: "x".join(map(str, g["level"])))
    def test_assembled(self, g):
        p = npo.assemble(npo.build_structure(*g["level"]))
        assert (p.n_vars, p.n_eq) == (g["n_vars"], g["n_eq"])
        assert p.metadata["n_ppt_rows"] == g["ppt_rows"]
        assert [b.size for b in p.blocks[:4]] == [g["block_dim"]] * 4

    def test_level_one_golden(self):
        # the counts recorded in the data file for level (1,1)
        assert GOLDEN[0] == {"level": [1, 1], "block_dim": 28, "alice_basis": 4, "charlie_basis": 7,
                             "alice_words": 10, "charlie_words": 37, "moments_per_block": 199,
                             "ppt_rows": 45, "n_vars": 1160, "n_eq": 482}

    def test_bad_level(self):
        with pytest.raises(ValueError):
            npo.build_structure(0, 1)


class TestStructure:
    def test_entry_map_symmetric(self, s11):
        assert np.array_equal(s11.entry_map, s11.entry_map.T)
        assert s11.entry_map[0, 0] == s11.moment_id((), ())

    def test_entry_lookup(self, s11):
        # row (A1, 1), column (1, C2) holds the moment of C2 A1
        assert s11.entry(((0,), ()), ((), (1,))) == s11.moment_id((0,), (1,))

    def test_adjoint_pairs_share_variable(self, s11):
        assert s11.moment_id((0, 1), (2, 3)) == s11.moment_id((1, 0), (3, 2))
        assert s11.moment_id((0, 1), (2, 3)) != s11.moment_id((1, 0), (2, 3))

    def test_names(self, s11):
        names = npo.variable_names(s11)
        assert len(names) == len(set(names)) == npo.Layout(s11.n_moments).n_vars
        assert names[0] == "d[0](1,1)"

    def test_layout_symmetric(self):
        lay = npo.Layout(10, 1)
        assert lay.p_full == 10
        with pytest.raises(IndexError):
            lay.d(1, 0)


class TestStrategyMoments:
    @given(st.integers(0, 2**31 - 1))
    @settings(max_examples=10, deadline=None)
    def test_gram_oracle(self, seed):
        s11 = npo.build_structure(1, 1)
        s = random_strategy(np.random.default_rng(seed))
        moments = npo.strategy_moments(s11, s)
        pa = [observable_projectors(o)[0] for o in s.alice]
        pc = [observable_projectors(o)[0] for o in s.charlie]
        ops_a = [np.eye(2)] + pa
        ops_c = [np.eye(2)] + pc
        rows = [np.kron(a, c) for a in ops_a for c in ops_c]
        for b, w in enumerate(s.conditional_states()):
            gram = np.array([[np.trace(w @ r2 @ r1.conj().T) for r2 in rows] for r1 in rows])
            block = npo.moment_matrix(s11, moments[b].real)
            assert_allclose(block, gram.real, atol=1e-12)
            assert np.linalg.eigvalsh(block)[0] > -1e-12

    def test_ideal_point_level_one(self, s11):
        y = npo.strategy_point(s11, ideal_strategy())
        for mode in ("exact", "none"):
            res = npo.assemble(s11, mode).residuals(y)
            assert res["eq_residual"] < 1e-12 and res["min_eig"] > -1e-12
            assert res["objective"] == pytest.approx(QUANTUM_MAX, abs=1e-12)

    def test_ideal_violates_ppt_level_two(self):
        # sum_b omega_b = I/4, so each moment factorizes into tr(alpha) tr(gamma) / 4
        s22 = npo.build_structure(2, 2)
        s = ideal_strategy()
        pa = [observable_projectors(o)[0] for o in s.alice]
        pc = [observable_projectors(o)[0] for o in s.charlie]

        def tr(word, proj):
            m = np.eye(2, dtype=complex)
            for g in word:
                m = m @ proj[g]
            return np.trace(m) / 2

        ta = {w: tr(w, pa) for w in s22.alice_words}
        tc = {w: tr(w, pc) for w in s22.charlie_words}
        oracle = max(abs((ta[a] * tc[c]).real - (ta[a[::-1]] * tc[c]).real)
                     for a in s22.alice_words for c in s22.charlie_words)
        got = npo.ppt_violation(s22, npo.strategy_moments(s22, s).real)
        assert got == pytest.approx(oracle, abs=1e-14)
        assert got == pytest.approx(1 / (16 * np.sqrt(2)), abs=1e-14)

    @pytest.mark.parametrize("level", [(1, 2), (2, 1)])
    def test_ideal_ppt_below_level_two(self, level):
        st_ = npo.build_structure(*level)
        assert npo.ppt_violation(st_, npo.strategy_moments(st_, ideal_strategy()).real) < 1e-15

    def test_real_strategy_feasible(self):
        s21 = npo.build_structure(2, 1)
        s = random_strategy(np.random.default_rng(3), real=True)
        assert npo.ppt_violation(s21, npo.strategy_moments(s21, s).real) < 1e-14
        res = npo.assemble(s21).residuals(npo.strategy_point(s21, s))
        assert res["eq_residual"] < 1e-12 and res["min_eig"] > -1e-12


class TestAssemble:
    def test_objective_matches_functional(self, s11):
        s = apply_white_noise(ideal_strategy(), 0.9)
        p = npo.assemble(s11, "none")
        assert p.objective @ npo.strategy_point(s11, s) == pytest.approx(QUANTUM_MAX * 0.81, abs=1e-12)

    def test_fixed_rows(self, s11):
        t = correlations(ideal_strategy())
        p = npo.assemble(s11, "none", fixed=t)
        assert p.n_eq == 482 - 45 + 288
        assert p.residuals(npo.strategy_point(s11, ideal_strategy()))["eq_residual"] < 1e-12

    def test_slack_mode(self, s11):
        p = npo.assemble(s11, "slack")
        assert p.n_vars == 1161 and p.n_eq == 482 - 45
        blk = p.blocks[-1]
        assert blk.name == "ppt_slack" and blk.size == 2 * 45 + 1
        assert p.objective[-1] == -1 and np.count_nonzero(p.objective) == 1

    def test_var_bound(self, s11):
        assert npo.assemble(s11).metadata["var_bound"] == 1.0

    def test_unknown_mode(self, s11):
        with pytest.raises(ValueError):
            npo.assemble(s11, "loose")


class TestOutcomeSymmetry:
    def test_flip_sets(self):
        assert npo.outcome_flips() == [frozenset(), frozenset({0, 2}), frozenset({1, 2}),
                                       frozenset({0, 1})]

    def test_group_law(self, s11):
        flips = npo.outcome_flips()
        mats = [npo.flip_matrix(s11, f).toarray() for f in flips]
        for b1, b2 in itertools.product(range(4), repeat=2):
            assert_allclose(mats[b1] @ mats[b2], mats[b1 ^ b2], atol=0)

    @pytest.mark.parametrize("flips", [{0}, {1, 2}, {0, 1, 2}])
    def test_flip_matches_relabeled_strategy(self, flips):
        s21 = npo.build_structure(2, 1)
        s = random_strategy(np.random.default_rng(11))
        alice = [-o if x in flips else o for x, o in enumerate(s.alice)]
        t = Strategy(s.state_ab1, s.state_b2c, alice, s.bob, s.charlie)
        # an orbit stores one of two conjugate moments, so only real parts are comparable
        want = npo.strategy_moments(s21, t).real
        got = npo.flip_matrix(s21, flips) @ npo.strategy_moments(s21, s).real.T
        assert_allclose(got.T, want, atol=1e-12)

    def test_tensor_symmetry(self):
        assert npo.tensor_is_symmetric(correlations(ideal_strategy()))
        assert not npo.tensor_is_symmetric(correlations(random_strategy(np.random.default_rng(2))))
        with pytest.raises(ValueError):
            npo.assemble(npo.build_structure(1, 1), fixed=correlations(
                random_strategy(np.random.default_rng(2))), symmetric=True)

    def test_reduced_problem(self, s11):
        p = npo.assemble(s11, symmetric=True)
        assert len([b for b in p.blocks if b.kind == "psd"]) == 1
        assert p.n_vars == 199 + 364
        res = p.residuals(npo.strategy_point(s11, ideal_strategy(), symmetric=True))
        assert res["eq_residual"] < 1e-12 and res["min_eig"] > -1e-12
        assert res["objective"] == pytest.approx(QUANTUM_MAX, abs=1e-12)

    def test_reduced_ppt_rows_level_two(self):
        p = npo.assemble(npo.build_structure(2, 1), symmetric=True)
        assert p.n_eq == 437 + p.metadata["n_ppt_rows"]
        assert 0 < p.metadata["n_ppt_rows"] <= 270
