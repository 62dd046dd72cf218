"""Conclusive photon subtraction: conditioning on an exact reflected count."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConditioningError, DomainError
from .fock import DiagonalState, fano, mean, thermal_cutoff, thermal_state
from .nongauss import nong_eps
from .photon_ops import _check_unit, bernoulli_matrix, lossy_channel, split_table

MIN_CONDITION_PROB = 1e-15
DEFAULT_MR_RANGE = range(0, 7)


@dataclass(frozen=True)
class CpsResult:
    state: DiagonalState
    p_condition: float
    m_r: int
    m_cps: float
    fano_cps: float | None  # None when the conditioned mean is zero
    eps_nong: float

    def row(self) -> dict:
        return {"m_R": self.m_r, "p_R": self.p_condition, "M_CPS": self.m_cps,
                "F_CPS": self.fano_cps, "eps": self.eps_nong}


def _conditioned_transmitted(state: DiagonalState, tau: float, eta_r: float, m_r: int):
    tau = _check_unit("tau", tau)
    eta_r = _check_unit("eta_r", eta_r)
    if m_r < 0:
        raise DomainError("conditioning value must be >= 0")
    w = split_table(state, tau)
    if m_r > state.n_max:
        raise ConditioningError(f"m_R={m_r} exceeds the input cutoff")
    weights = bernoulli_matrix(state.n_max, eta_r, m_r)[:, m_r]
    unnorm = w @ weights
    p_r = float(unnorm.sum())
    if p_r < MIN_CONDITION_PROB:
        raise ConditioningError(f"p_R({m_r}) = {p_r:.3e} is below {MIN_CONDITION_PROB:g}")
    return unnorm, p_r


def cps_photon_state(state: DiagonalState, tau: float, eta_r: float, m_r: int,
                     n_max: int | None = None) -> DiagonalState:
    """Photon-number distribution of the transmitted mode given ``m_r`` reflected counts."""
    unnorm, p_r = _conditioned_transmitted(state, tau, eta_r, m_r)
    n_max = state.n_max if n_max is None else n_max
    probs = np.zeros(n_max + 1)
    k = min(n_max + 1, unnorm.size)
    probs[:k] = unnorm[:k] / p_r
    tail = float(unnorm[k:].sum()) / p_r
    return DiagonalState(probs, tail)


def condition_probability(state: DiagonalState, tau: float, eta_r: float, m_r: int) -> float:
    return _conditioned_transmitted(state, tau, eta_r, m_r)[1]


def cps_detected(state: DiagonalState, tau: float, eta_r: float, eta_t: float,
                 m_r: int) -> CpsResult:
    unnorm, p_r = _conditioned_transmitted(state, tau, eta_r, m_r)
    photons = DiagonalState(unnorm / p_r)
    detected = lossy_channel(photons, eta_t)
    m = mean(detected)
    return CpsResult(detected, p_r, int(m_r), m, fano(detected) if m > 0 else None,
                     cps_nong_bound(detected))


def cps_nong_bound(q: DiagonalState) -> float:
    return nong_eps(q)


def cps_fano_closed(big_mt: float, big_mr: float) -> float:
    """Fano factor of every CPS detected distribution of a thermal input."""
    if big_mt < 0 or big_mr < 0:
        raise DomainError("mean detected numbers must be >= 0")
    return (1.0 + big_mt + big_mr) / (1.0 + big_mr)


def cps_mean_closed(big_mt: float, big_mr: float, m_r: int) -> float:
    """Mean detected count given ``m_r``; the conditional is negative binomial."""
    return (m_r + 1) * big_mt / (1.0 + big_mr)


def thermal_setup(big_mt: float, big_mr: float, n_max: int | None = None):
    """Ideal-detector thermal input reproducing the detected means ``(M_T, M_R)``.

    Only the products ``tau * eta_T * N`` and ``(1 - tau) * eta_R * N``
    enter the statistics, so unit efficiencies lose no generality.
    Returns ``(state, tau)``.
    """
    if big_mt < 0 or big_mr < 0:
        raise DomainError("mean detected numbers must be >= 0")
    n_th = big_mt + big_mr
    tau = big_mt / n_th if n_th > 0 else 1.0
    if n_max is None:
        # conditioning on large m_R reweights the far tail
        n_max = thermal_cutoff(n_th, tol=1e-16) + 40
    return thermal_state(n_th, n_max), tau


def cps_sweep(big_mt: float, big_mr: float, m_r_values=DEFAULT_MR_RANGE,
              n_max: int | None = None) -> list[CpsResult]:
    state, tau = thermal_setup(big_mt, big_mr, n_max)
    return [cps_detected(state, tau, 1.0, 1.0, m) for m in m_r_values]
