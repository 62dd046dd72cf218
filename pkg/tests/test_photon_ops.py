from fractions import Fraction
from math import comb

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from photsub.errors import DomainError
from photsub.fock import DiagonalState, thermal_pmf, thermal_state, vacuum
from photsub.photon_ops import (
    JointDistribution,
    bernoulli_matrix,
    bernoulli_weight,
    joint_general,
    joint_thermal,
    joint_thermal_table,
    lossy_channel,
    split_weight,
)

GRID = (0.0, 0.25, 0.5, 0.9, 1.0)


class TestWeights:
    def test_split_examples(self):
        assert split_weight(1, 0, 0.5) == pytest.approx(0.5, abs=1e-15)
        for n in (0, 1, 7, 300):
            assert split_weight(n, 0, 1.0) == 1.0
        exact = comb(10, 4) * Fraction(3, 10) ** 6 * Fraction(7, 10) ** 4
        assert split_weight(10, 4, 0.3) == pytest.approx(float(exact), rel=1e-13)

    def test_bernoulli_examples(self):
        assert bernoulli_weight(5, 5, 1.0) == 1.0
        assert bernoulli_weight(5, 0, 0.0) == 1.0
        assert bernoulli_weight(3, 1, 0.5) == pytest.approx(float(Fraction(3, 8)), abs=1e-15)

    @pytest.mark.parametrize("args", [(3, 4, 0.5), (3, -1, 0.5), (3, 1, 1.5), (3, 1, -0.1)])
    def test_domain_errors(self, args):
        with pytest.raises(DomainError):
            split_weight(*args)
        with pytest.raises(DomainError):
            bernoulli_weight(*args)

    def test_large_photon_numbers_stay_finite(self):
        w = split_weight(1000, 500, 0.5)
        assert np.isfinite(w) and w > 0

    @pytest.mark.parametrize("x", GRID)
    def test_rows_sum_to_one(self, x):
        b = bernoulli_matrix(300, x)
        np.testing.assert_allclose(b.sum(axis=1), 1.0, atol=1e-12)
        assert np.all(b >= 0)
        for n in (0, 1, 17, 300):
            total = sum(split_weight(n, s, x) for s in range(n + 1))
            assert total == pytest.approx(1.0, abs=1e-12)


class TestLossyChannel:
    def test_identity_and_blind(self):
        s = thermal_state(2.0, 30)
        np.testing.assert_allclose(lossy_channel(s, 1.0).probs, s.probs, atol=1e-15)
        out = lossy_channel(s, 0.0)
        assert out.probs[0] == pytest.approx(s.probs.sum(), abs=1e-15)
        assert out.probs[1:].sum() == 0

    def test_thermal_attenuation(self):
        s = thermal_state(2.0, 150)
        out = lossy_channel(s, 0.5)
        np.testing.assert_allclose(out.probs, thermal_pmf(np.arange(151), 1.0), rtol=0, atol=1e-10)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(1, 40), st.floats(0, 1), st.floats(0, 1), st.integers(0, 1000))
    def test_composition(self, k, e1, e2, seed):
        p = DiagonalState(np.random.default_rng(seed).dirichlet(np.ones(k)))
        two = lossy_channel(lossy_channel(p, e1), e2)
        one = lossy_channel(p, e1 * e2)
        np.testing.assert_allclose(two.probs, one.probs, rtol=0, atol=1e-12)

    def test_mean_scales(self):
        p = DiagonalState(np.random.default_rng(3).dirichlet(np.ones(25)))
        n = np.arange(25) @ p.probs
        assert np.arange(25) @ lossy_channel(p, 0.37).probs == pytest.approx(0.37 * n, rel=1e-12)


class TestJoint:
    def test_vacuum_input(self):
        j = joint_general(vacuum(5), 0.5, 0.7, 0.3, 4, 4)
        assert j.table[0, 0] == pytest.approx(1.0, abs=1e-15)
        assert j.table.sum() == pytest.approx(1.0, abs=1e-15)

    def test_full_transmission(self):
        rho = DiagonalState(np.random.default_rng(1).dirichlet(np.ones(12)))
        j = joint_general(rho, 1.0, 1.0, 1.0, 11, 3)
        np.testing.assert_allclose(j.table[:, 0], rho.probs, atol=1e-15)
        assert j.table[:, 1:].sum() == 0

    def test_closed_form_examples(self):
        assert joint_thermal(0, 0, 1.0, 1.0) == pytest.approx(1 / 3, abs=1e-15)
        for m in range(10):
            assert joint_thermal(m, 0, 1.7, 0.0) == pytest.approx(
                float(thermal_pmf(m, 1.7)), rel=1e-13)

    def test_closed_form_against_brute_force(self):
        mt, mr = 1.254, 1.679
        n_th = mt + mr
        state = thermal_state(n_th, 400)
        brute = joint_general(state, mt / n_th, 1.0, 1.0, 39, 39)
        closed = joint_thermal_table(mt, mr, 39, 39)
        assert np.abs(brute.table - closed.table).max() < 1e-10

    def test_brute_force_with_inefficient_detectors(self):
        n_th, tau, et, er = 4.0, 0.3, 0.6, 0.45
        brute = joint_general(thermal_state(n_th, 300), tau, et, er, 25, 25)
        closed = joint_thermal_table(tau * et * n_th, (1 - tau) * er * n_th, 25, 25)
        assert np.abs(brute.table - closed.table).max() < 1e-10

    def test_scalar_and_table_agree(self):
        t = joint_thermal_table(0.8, 2.1, 6, 7)
        for a in range(7):
            for b in range(8):
                assert t.table[a, b] == pytest.approx(joint_thermal(a, b, 0.8, 2.1), rel=1e-14)

    def test_marginal_is_thermal(self):
        t = joint_thermal_table(1.254, 1.679, 30, 300)
        np.testing.assert_allclose(t.marginal_t(), thermal_pmf(np.arange(31), 1.254), atol=1e-10)

    @pytest.mark.parametrize("mt,mr,a,b", [(1.254, 1.679, 10, 10), (0.3, 5.0, 4, 30), (3.0, 0.0, 20, 2)])
    def test_tail_accounts_for_missing_mass(self, mt, mr, a, b):
        t = joint_thermal_table(mt, mr, a, b)
        assert t.table.sum() + t.tail == pytest.approx(1.0, abs=1e-12)
        pt = (mt / (1 + mt)) ** (a + 1)
        pr = (mr / (1 + mr)) ** (b + 1) if mr else 0.0
        assert max(pt, pr) - 1e-15 <= t.tail <= pt + pr + 1e-15

    def test_serialisation(self):
        t = joint_thermal_table(1.0, 0.5, 2, 3)
        back = JointDistribution.from_json(t.to_json())
        np.testing.assert_array_equal(back.table, t.table)
        d = t.to_dict()
        assert d["mt_max"] == 2 and d["mr_max"] == 3
        lines = t.to_csv().splitlines()
        assert lines[0] == "m_T,m_R,p" and len(lines) == 1 + 12
