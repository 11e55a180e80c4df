from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from realnet import qcore
from realnet.bellfunc import QUANTUM_MAX, correlators, t_total
from realnet.netsim import (CorrelationTensor, Strategy, apply_white_noise, bell_projectors,
                            correlations, ideal_strategy, mixture, observable_projectors, sample)

seeds = st.integers(min_value=0, max_value=2**31 - 1)


def born_oracle(s: Strategy) -> np.ndarray:
    """p[b,x,z,a,c] from the full state on A (x) B1 (x) B2 (x) C."""
    d_a, d_b1, d_b2, d_c = s.dims
    rho = np.kron(s.state_ab1.data, s.state_b2c.data)
    p = np.zeros((4, 3, 6, 2, 2))
    for b, proj in enumerate(s.bob):
        for x, ox in enumerate(s.alice):
            for z, oz in enumerate(s.charlie):
                for a, sa in enumerate((1, -1)):
                    for c, sc in enumerate((1, -1)):
                        ea = (np.eye(d_a) + sa * ox) / 2
                        ec = (np.eye(d_c) + sc * oz) / 2
                        p[b, x, z, a, c] = np.trace(rho @ np.kron(np.kron(ea, proj), ec)).real
    return p


def random_strategy(rng, real=False, dims=None):
    d_a, d_b1, d_b2, d_c = dims or [int(v) for v in rng.integers(1, 3, size=4)]
    proj = qcore.random_projective_measurement(d_b1 * d_b2, min(4, d_b1 * d_b2), rng, real)
    proj = list(proj) + [np.zeros((d_b1 * d_b2,) * 2)] * (4 - len(proj))
    return Strategy(qcore.random_density(d_a * d_b1, rng, real=real),
                    qcore.random_density(d_b2 * d_c, rng, real=real),
                    [qcore.random_involution(d_a, rng, real) for _ in range(3)], proj,
                    [qcore.random_involution(d_c, rng, real) for _ in range(6)])


class TestStrategy:
    def test_ideal_is_valid(self):
        s = ideal_strategy()
        assert s.violations() == []
        assert s.dims == (2, 2, 2, 2)

    def test_ideal_charlie_order(self):
        s = ideal_strategy()
        r2 = np.sqrt(2)
        assert_allclose(s.charlie[0], (qcore.SZ + qcore.SX) / r2)
        assert_allclose(s.charlie[1], (qcore.SZ - qcore.SX) / r2)
        assert_allclose(s.charlie[3], (qcore.SZ - qcore.SY) / r2)
        assert_allclose(s.charlie[5], (qcore.SX - qcore.SY) / r2)

    def test_invalid_flags(self):
        s = ideal_strategy()
        bad = Strategy(s.state_ab1, s.state_b2c, [2 * qcore.SZ, qcore.SX, qcore.SY], s.bob, s.charlie)
        assert any("square" in v for v in bad.violations())
        with pytest.raises(ValueError):
            bad.validate()

    def test_dimension_mismatch(self):
        s = ideal_strategy()
        with pytest.raises(qcore.DimensionError):
            Strategy(s.state_ab1, s.state_b2c, [np.eye(3)] * 3, s.bob, s.charlie)

    def test_json_round_trip(self):
        s = ideal_strategy()
        back = Strategy.from_dict(s.to_dict())
        assert_allclose(correlations(back).p, correlations(s).p, atol=0)


class TestCorrelations:
    def test_ideal_values(self):
        score = t_total(correlations(ideal_strategy()))
        assert score.total == pytest.approx(6 * np.sqrt(2), abs=1e-12)
        assert_allclose(score.p_b, 0.25, atol=1e-15)
        assert_allclose(score.per_b, 6 * np.sqrt(2) / 4, atol=1e-12)

    def test_ideal_matches_born_oracle(self):
        s = ideal_strategy()
        assert_allclose(correlations(s).p, born_oracle(s), atol=1e-14)

    @given(seeds)
    @settings(max_examples=20, deadline=None)
    def test_random_matches_oracle_and_invariants(self, seed):
        rng = np.random.default_rng(seed)
        s = random_strategy(rng, real=bool(seed % 2))
        t = correlations(s)
        assert t.violations() == []
        assert_allclose(t.p, born_oracle(s), atol=1e-12)

    def test_deterministic_classical(self):
        zero = qcore.basis_ket(0, 2).projector()
        state = qcore.tensor(zero, zero)
        diag = [qcore.SZ] * 3
        s = Strategy(state, state, diag, [np.diag(v) for v in np.eye(4)], [qcore.SZ] * 6)
        p = correlations(s).p
        assert set(np.unique(np.round(p, 12))) <= {0.0, 1.0}

    def test_white_noise_kills_correlators(self):
        s = ideal_strategy()
        mixed = Strategy(np.eye(4) / 4, np.eye(4) / 4, s.alice, s.bob, s.charlie)
        assert_allclose(correlators(correlations(mixed)), 0, atol=1e-15)

    def test_outcome_relabeling_flips_sign(self):
        s = ideal_strategy()
        alice = list(s.alice)
        alice[1] = -alice[1]
        flipped = Strategy(s.state_ab1, s.state_b2c, alice, s.bob, s.charlie)
        e0, e1 = correlators(correlations(s)), correlators(correlations(flipped))
        assert_allclose(e1[:, 1], -e0[:, 1], atol=1e-15)
        assert_allclose(np.delete(e1, 1, axis=1), np.delete(e0, 1, axis=1), atol=1e-15)

    def test_tensor_json_round_trip(self):
        t = correlations(ideal_strategy())
        payload = t.to_dict()
        assert payload["settings"] == {"x": 3, "z": 6}
        assert set(payload["p"]["00"]["1"]["1"]) == {"+1", "-1"}
        assert_allclose(CorrelationTensor.from_json(t.to_json()).p, t.p, atol=0)


class TestNoise:
    def test_endpoints(self):
        s = ideal_strategy()
        assert_allclose(correlations(apply_white_noise(s, 1.0)).p, correlations(s).p, atol=1e-15)
        assert t_total(correlations(apply_white_noise(s, 0.0))).total == pytest.approx(0, abs=1e-14)

    @pytest.mark.parametrize("v", [0.9, 0.95, 1.0])
    def test_quadratic_law(self, v):
        got = t_total(correlations(apply_white_noise(ideal_strategy(), v))).total
        assert got == pytest.approx(QUANTUM_MAX * v ** 2, abs=1e-12)

    def test_bilinear_decomposition(self):
        s = ideal_strategy()
        v = 0.7
        white = Strategy(np.eye(4) / 4, np.eye(4) / 4, s.alice, s.bob, s.charlie)
        mixed_ab = Strategy(np.eye(4) / 4, s.state_b2c, s.alice, s.bob, s.charlie)
        mixed_bc = Strategy(s.state_ab1, np.eye(4) / 4, s.alice, s.bob, s.charlie)
        expect = (v * v * correlations(s).p + v * (1 - v) * correlations(mixed_bc).p
                  + (1 - v) * v * correlations(mixed_ab).p + (1 - v) ** 2 * correlations(white).p)
        assert_allclose(correlations(apply_white_noise(s, v)).p, expect, atol=1e-12)

    def test_rejects_bad_visibility(self):
        with pytest.raises(ValueError):
            apply_white_noise(ideal_strategy(), 1.5)


class TestMixture:
    def test_linear(self):
        s = ideal_strategy()
        noisy = apply_white_noise(s, 0.5)
        t = mixture([(0.25, s), (0.75, noisy)])
        assert_allclose(t.p, 0.25 * correlations(s).p + 0.75 * correlations(noisy).p, atol=1e-15)

    def test_weights_checked(self):
        with pytest.raises(ValueError):
            mixture([(0.5, ideal_strategy())])


class TestSample:
    def test_deterministic(self):
        t = correlations(ideal_strategy())
        a, b = sample(t, 5000, 11), sample(t, 5000, 11)
        assert np.array_equal(a.counts, b.counts)
        assert a.empirical.to_json() == b.empirical.to_json()

    def test_one_round(self):
        rec = sample(correlations(ideal_strategy()), 1, 3)
        assert rec.counts.sum() == 1
        assert rec.setting_counts.sum() == 1

    def test_zero_rounds(self):
        with pytest.raises(ValueError):
            sample(correlations(ideal_strategy()), 0, 0)

    def test_million_rounds_statistical(self):
        # standard error of T is about 0.0104 at 1e6 rounds; 0.02 is roughly 1.9 sigma
        rec = sample(correlations(ideal_strategy()), 1_000_000, 2024)
        assert abs(t_total(rec.empirical).total - QUANTUM_MAX) < 0.02


def test_observable_projectors():
    p, m = observable_projectors(qcore.SX)
    assert_allclose(p + m, np.eye(2), atol=1e-15)
    assert_allclose(p - m, qcore.SX, atol=1e-15)


def test_bell_projectors_real_and_complete():
    proj = bell_projectors()
    assert qcore.is_complete(proj)
    assert all(np.max(np.abs(p.imag)) == 0 for p in proj)
