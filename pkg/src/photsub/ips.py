"""Inconclusive photon subtraction from thermal light (on/off conditioning).

The phase-space route uses covariance matrices with vacuum ``I/2``
(hbar = 1, ``[x, p] = i``). A click of the on/off detector leaves the
transmitted mode in a difference of two thermal states; the Fock-basis
oracle rebuilds the same distribution by direct summation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConditioningError, DomainError
from .fock import DiagonalState, thermal_cutoff, thermal_pmf
from .nongauss import nong_eps
from .photon_ops import _check_unit, lossy_channel, split_table

MIN_CLICK_PROB = 1e-15
PDET_TOL = 1e-12


def thermal_cm(n: float) -> np.ndarray:
    return (1.0 + 2.0 * n) / 2.0 * np.eye(2)


@dataclass(frozen=True)
class GaussianState:
    cm: np.ndarray
    mean: np.ndarray | None = None

    def __post_init__(self):
        cm = np.asarray(self.cm, dtype=float)
        if cm.shape not in ((2, 2), (4, 4)):
            raise DomainError("covariance matrix must be 2x2 or 4x4")
        if not np.allclose(cm, cm.T, atol=1e-12):
            raise DomainError("covariance matrix must be symmetric")
        if cm.shape == (2, 2) and np.linalg.det(cm) < 0.25 - 1e-12:
            raise DomainError("covariance matrix violates the uncertainty relation")
        object.__setattr__(self, "cm", cm)
        mu = np.zeros(cm.shape[0]) if self.mean is None else np.asarray(self.mean, dtype=float)
        object.__setattr__(self, "mean", mu)

    @classmethod
    def thermal(cls, n: float) -> "GaussianState":
        return cls(thermal_cm(n))

    def blocks(self):
        """``(A, B, C)`` blocks of a two-mode covariance matrix."""
        if self.cm.shape != (4, 4):
            raise DomainError("blocks() needs a two-mode state")
        return self.cm[:2, :2], self.cm[2:, 2:], self.cm[:2, 2:]


def bs_symplectic(tau: float) -> np.ndarray:
    tau = _check_unit("tau", tau)
    t, r = math.sqrt(tau), math.sqrt(1.0 - tau)
    eye = np.eye(2)
    return np.block([[t * eye, r * eye], [-r * eye, t * eye]])


def split_thermal(n_th: float, tau: float) -> GaussianState:
    """Two-mode state after mixing thermal light with vacuum."""
    s = bs_symplectic(tau)
    cm_in = np.zeros((4, 4))
    cm_in[:2, :2] = thermal_cm(n_th)
    cm_in[2:, 2:] = thermal_cm(0.0)
    return GaussianState(s.T @ cm_in @ s)


def onoff_noise_cm(eta_r: float) -> np.ndarray:
    """Covariance-like matrix of the no-click element of an on/off counter."""
    eta_r = _check_unit("eta_r", eta_r)
    if eta_r == 0:
        raise DomainError("an on/off counter with zero efficiency never clicks")
    return (2.0 - eta_r) / (2.0 * eta_r) * np.eye(2)


def ips_click_probability(n_th: float, tau: float, eta_r: float) -> tuple[float, float]:
    """``(p_on, p_off)``; the determinant route is checked against the closed form."""
    if n_th < 0:
        raise DomainError("mean photon number must be >= 0")
    _, b, _ = split_thermal(n_th, tau).blocks()
    sigma_m = onoff_noise_cm(eta_r)
    p_off_det = 1.0 / (eta_r * math.sqrt(np.linalg.det(b + sigma_m)))
    x = eta_r * (1.0 - tau) * n_th
    p_off = 1.0 / (1.0 + x)
    if abs(p_off - p_off_det) > PDET_TOL:
        raise ArithmeticError(f"click probability routes disagree: {p_off} vs {p_off_det}")
    return x / (1.0 + x), p_off


def conditional_cms(n_th: float, tau: float, eta_r: float) -> tuple[np.ndarray, np.ndarray]:
    """Covariances of the two Gaussian components of the clicked state.

    ``Sigma_b`` follows the Gaussian conditioning rule
    ``A - C (B + sigma_M)^-1 C^T``.
    """
    a, b, c = split_thermal(n_th, tau).blocks()
    sigma_m = onoff_noise_cm(eta_r)
    return a, a - c @ np.linalg.solve(b + sigma_m, c.T)


@dataclass(frozen=True)
class IpsResult:
    n_a: float
    n_b: float
    p_on: float
    p_off: float
    m_a: float
    m_b: float
    m_ips: float
    var_ips: float
    fano_ips: float
    eps_nong: float
    detected: DiagonalState

    def row(self) -> dict:
        return {"p_on": self.p_on, "M_IPS": self.m_ips, "F_IPS": self.fano_ips,
                "eps": self.eps_nong, "N_a": self.n_a, "N_b": self.n_b}


def ips_fano_closed(m_a: float, m_b: float, p_off: float) -> float:
    """Factorised Fano factor of the clicked state."""
    return 1 + m_b + 2 * m_a * (m_a - m_b) / (m_a - p_off * m_b) - (m_a - m_b) / (1 - p_off)


def _mix(log_b, log_ratio, p_on: float):
    """``exp(log_b) * (1 + expm1(log_ratio) / p_on)`` without overflow or cancellation."""
    log_b = np.asarray(log_b, dtype=float)
    lr = np.asarray(log_ratio, dtype=float)
    small = lr <= 1.0
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        direct = np.exp(log_b) * (1.0 + np.expm1(np.minimum(lr, 1.0)) / p_on)
        logged = np.exp(log_b + lr + np.log1p(-(1.0 - p_on) * np.exp(-lr)) - math.log(p_on))
    return np.where(small, direct, logged)


def _ips_detected(m_a: float, x: float, mt_max: int) -> DiagonalState:
    """Detected distribution ``[nu(M_a) - p_off nu(M_b)] / p_on``.

    Rewritten as ``nu(M_b) * (1 + expm1(log nu(M_a) - log nu(M_b)) / p_on)``
    with every log ratio reduced to a single ``log1p``; the direct
    difference cancels catastrophically when clicks are rare.
    """
    p_on = x / (1.0 + x)
    m_b = m_a / (1.0 + x)
    u = m_a * x / ((1.0 + x) * (1.0 + m_b))           # (M_a - M_b) / (1 + M_b)
    log_q_ratio = math.log1p(x * (1.0 + x) / ((1.0 + x + m_a) * (1.0 + u)))
    m = np.arange(mt_max + 1)
    if m_b == 0:
        probs = (m == 0).astype(float)
        return DiagonalState(probs, 0.0)
    log_qb = math.log(m_b / (1.0 + m_b))
    probs = _mix(m * log_qb - math.log1p(m_b), m * log_q_ratio - math.log1p(u), p_on)
    k = mt_max + 1
    tail = float(_mix(k * log_qb, k * log_q_ratio, p_on))
    return DiagonalState(probs, tail)


def ips_state(n_th: float, tau: float, eta_r: float, eta_t: float,
              mt_max: int | None = None) -> IpsResult:
    """Clicked-state statistics from the two-thermal-component closed form.

    ``mt_max=None`` truncates where the tail drops below ``1e-12``.
    ``eps_nong`` is always evaluated on a converged support.
    """
    eta_t = _check_unit("eta_t", eta_t)
    p_on, p_off = ips_click_probability(n_th, tau, eta_r)
    if p_on < MIN_CLICK_PROB:
        raise ConditioningError(f"click probability {p_on:.3e} is too small to condition on")
    x = eta_r * (1.0 - tau) * n_th
    n_a = tau * n_th
    n_b = n_a / (1.0 + x)
    m_a, m_b = eta_t * n_a, eta_t * n_b
    # (M_a - p_off M_b) / p_on and the matching variance, with p_on divided out
    m_ips = m_a * (2.0 + x) / (1.0 + x)
    fano_ips = 1.0 + m_b + 2.0 * m_a * (1.0 + x) / (2.0 + x) - m_a
    converged = max(thermal_cutoff(m_a), mt_max or 0)
    full = _ips_detected(m_a, x, converged)
    detected = full if mt_max is None else _ips_detected(m_a, x, mt_max)
    return IpsResult(n_a, n_b, p_on, p_off, m_a, m_b, m_ips, fano_ips * m_ips, fano_ips,
                     nong_eps(full), detected)


def ips_moments_direct(m_a: float, m_b: float, p_off: float) -> tuple[float, float]:
    """Mean and variance as mixtures of the two thermal components."""
    p_on = 1.0 - p_off
    m = (m_a - p_off * m_b) / p_on
    var = (m_a * (1 + m_a) - p_off * m_b * (1 + m_b)) / p_on - p_off * (m_a - m_b) ** 2 / p_on**2
    return m, var


def ips_state_fock_oracle(state: DiagonalState, tau: float, eta_r: float, eta_t: float,
                          mt_max: int) -> DiagonalState:
    """Clicked-state detected distribution built by Fock-basis summation.

    Works for any diagonal input; for thermal light it must reproduce
    :func:`ips_state`.
    """
    eta_r = _check_unit("eta_r", eta_r)
    w = split_table(state, tau)
    s = np.arange(state.n_max + 1)
    # 1 - (1 - eta)^s without cancellation
    click = -np.expm1(s * math.log1p(-eta_r)) if eta_r < 1 else (s > 0).astype(float)
    unnorm = w @ click
    p_on = float(unnorm.sum())
    if p_on < MIN_CLICK_PROB:
        raise ConditioningError(f"click probability {p_on:.3e} is too small to condition on")
    detected = lossy_channel(DiagonalState(unnorm / p_on), eta_t)
    return DiagonalState(detected.padded(mt_max), max(0.0, 1.0 - detected.padded(mt_max).sum()))


def wigner_gaussian(cm: np.ndarray, x: np.ndarray, p: np.ndarray) -> np.ndarray:
    inv = np.linalg.inv(cm)
    det = np.linalg.det(cm)
    if det <= 0:
        raise DomainError("degenerate covariance matrix")
    quad = inv[0, 0] * x * x + 2 * inv[0, 1] * x * p + inv[1, 1] * p * p
    return np.exp(-0.5 * quad) / (2 * math.pi * math.sqrt(det))


def wigner_ips_grid(n_th: float, tau: float, eta_r: float, xs, ps) -> np.ndarray:
    """Wigner function of the clicked state on the grid ``xs x ps`` (indexed ``[i_x, i_p]``).

    Evaluated as ``W_b + (W_a - W_b) / p_on`` with the difference taken in
    log space, which stays accurate for rare clicks.
    """
    p_on, _ = ips_click_probability(n_th, tau, eta_r)
    if p_on < MIN_CLICK_PROB:
        raise ConditioningError("click probability too small to condition on")
    a, b, c = split_thermal(n_th, tau).blocks()
    k = c @ np.linalg.solve(b + onoff_noise_cm(eta_r), c.T)  # Sigma_a - Sigma_b
    cm_b = a - k
    x, p = np.meshgrid(np.asarray(xs, float), np.asarray(ps, float), indexing="ij")
    w_b = wigner_gaussian(cm_b, x, p)
    # log W_a - log W_b = X^T (Sb^-1 - Sa^-1) X / 2 - log det(I + K Sb^-1) / 2
    inv_b = np.linalg.inv(cm_b)
    diff = inv_b @ k @ np.linalg.inv(a)
    diff = 0.5 * (diff + diff.T)
    mk = k @ inv_b
    log_det = math.log1p(np.trace(mk) + np.linalg.det(mk))
    quad = diff[0, 0] * x * x + 2 * diff[0, 1] * x * p + diff[1, 1] * p * p
    return w_b * (1.0 + np.expm1(0.5 * quad - 0.5 * log_det) / p_on)


def default_wigner_axis(n_th: float, tau: float, points: int = 256, width: float = 6.0) -> np.ndarray:
    sigma = math.sqrt(thermal_cm(tau * n_th)[0, 0])
    return np.linspace(-width * sigma, width * sigma, points)
