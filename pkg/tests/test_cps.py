from math import comb

import numpy as np
import pytest

from photsub.cps import (
    cps_detected,
    cps_fano_closed,
    cps_mean_closed,
    cps_nong_bound,
    cps_photon_state,
    cps_sweep,
    condition_probability,
    thermal_setup,
)
from photsub.errors import ConditioningError
from photsub.fock import DiagonalState, fano, mean, thermal_entropy, thermal_pmf, thermal_state, vacuum
from photsub.photon_ops import joint_thermal

MT, MR = 1.254, 1.679


def two_mode_oracle(n_th, tau, n_max, reflected):
    """Exact two-mode photon table projected on ``reflected`` photons, by loops."""
    x = n_th / (1 + n_th)
    out = np.zeros(n_max + 1)
    for n in range(reflected, n_max + 1):
        rho_n = (1 - x) * x**n
        t = n - reflected
        out[t] = rho_n * comb(n, reflected) * tau**t * (1 - tau) ** reflected
    return out / out.sum()


def joint_column_oracle(mt, mr, m_r, size=400):
    col = np.array([joint_thermal(m, m_r, mt, mr) for m in range(size)])
    return col / col.sum()


class TestPhotonState:
    def test_vacuum(self):
        out = cps_photon_state(vacuum(6), 0.5, 0.8, 0)
        assert out.probs[0] == pytest.approx(1.0)
        assert condition_probability(vacuum(6), 0.5, 0.8, 0) == pytest.approx(1.0)

    def test_vacuum_cannot_lose_a_photon(self):
        with pytest.raises(ConditioningError):
            cps_photon_state(vacuum(6), 0.5, 0.8, 1)

    def test_matches_two_mode_table(self):
        out = cps_photon_state(thermal_state(2.0, 200), 0.5, 1.0, 1)
        oracle = two_mode_oracle(2.0, 0.5, 200, 1)
        assert np.abs(out.probs - oracle[:201]).max() < 1e-10


class TestDetected:
    @pytest.fixture(scope="class")
    @staticmethod
    def sweep():
        return cps_sweep(MT, MR, range(9))

    def test_fano_constant(self, sweep):
        for r in sweep[:7]:
            assert r.fano_cps == pytest.approx(1.468, abs=1e-3)
        f = [r.fano_cps for r in sweep]
        assert max(f) - min(f) < 1e-9

    def test_mean_against_column_oracle(self):
        r = cps_sweep(MT, MR, [2])[0]
        oracle = joint_column_oracle(MT, MR, 2)
        m_oracle = np.arange(oracle.size) @ oracle
        assert r.m_cps == pytest.approx(m_oracle, abs=1e-10)
        # the negative-binomial closed form agrees with the oracle
        assert cps_mean_closed(MT, MR, 2) == pytest.approx(m_oracle, abs=1e-10)
        assert r.m_cps == pytest.approx(1.404255, abs=1e-6)

    def test_bayes_consistency(self, sweep):
        for r in sweep:
            oracle = joint_column_oracle(MT, MR, r.m_r, r.state.probs.size)
            np.testing.assert_allclose(r.state.probs, oracle, rtol=0, atol=1e-12)

    def test_condition_probabilities_sum_to_one(self):
        state, tau = thermal_setup(MT, MR)
        total = sum(condition_probability(state, tau, 1.0, m) for m in range(60))
        # reflected counts are thermal: add the analytic remainder beyond 59
        total += (MR / (1 + MR)) ** 60
        assert total == pytest.approx(1.0, abs=1e-10)

    def test_no_conditioning_limit(self):
        state = thermal_state(3.0, 200)
        r = cps_detected(state, 1.0, 1.0, 0.4, 0)
        np.testing.assert_allclose(r.state.probs, thermal_pmf(np.arange(201), 1.2), atol=1e-12)
        assert r.eps_nong == pytest.approx(0.0, abs=1e-8)

    def test_invariants(self, sweep):
        for r in sweep:
            assert 0 < r.p_condition <= 1
            assert r.fano_cps >= 1
            assert r.eps_nong >= -1e-9

    def test_eps_increases_with_condition(self, sweep):
        eps = [r.eps_nong for r in sweep]
        assert all(b > a for a, b in zip(eps, eps[1:]))
        assert eps[6] > eps[1]

    def test_inefficient_arms(self):
        # only the detected means matter
        n_th, tau, et, er = 5.0, 0.4, 0.6, 0.7
        r = cps_detected(thermal_state(n_th, 300), tau, er, et, 3)
        mt, mr = tau * et * n_th, (1 - tau) * er * n_th
        assert r.fano_cps == pytest.approx(cps_fano_closed(mt, mr), abs=1e-10)
        assert r.m_cps == pytest.approx(cps_mean_closed(mt, mr, 3), abs=1e-10)


class TestZeroMean:
    def test_vacuum_input_leaves_fano_undefined(self):
        r = cps_detected(vacuum(), 0.5, 0.5, 0.5, 0)
        assert r.p_condition == 1.0 and r.m_cps == 0.0
        assert r.fano_cps is None


class TestClosedForms:
    def test_values(self):
        assert cps_fano_closed(MT, MR) == pytest.approx(1.468, abs=1e-3)
        assert cps_fano_closed(2.3, 0.0) == pytest.approx(3.3)
        assert cps_fano_closed(0.0, 4.0) == 1.0

    @pytest.mark.parametrize("mt", [0.0, 0.1, 1.0, 5.0, 30.0])
    @pytest.mark.parametrize("mr", [0.0, 0.2, 1.0, 7.0])
    def test_sandwich(self, mt, mr):
        assert 1.0 <= cps_fano_closed(mt, mr) <= 1.0 + mt


class TestNongBound:
    def test_thermal_is_zero(self):
        assert cps_nong_bound(thermal_state(1.7, 200)) == pytest.approx(0.0, abs=1e-8)

    def test_fock_one(self):
        assert cps_nong_bound(DiagonalState([0, 1, 0])) == pytest.approx(thermal_entropy(1.0))
        assert mean(DiagonalState([0, 1, 0])) == 1.0 and fano(DiagonalState([0, 1, 0])) == 0.0
