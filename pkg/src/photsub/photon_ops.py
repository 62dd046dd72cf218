"""Beam-splitter splitting, inefficient photon counting and joint counts.

Every binomial weight is evaluated through log-gamma sums so that photon
numbers in the thousands stay finite.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln, xlog1py, xlogy
from scipy.stats import nbinom

from .errors import DomainError
from .fock import DiagonalState, thermal_pmf


def _check_unit(name: str, x: float) -> float:
    x = float(x)
    if not 0.0 <= x <= 1.0:
        raise DomainError(f"{name} must lie in [0, 1], got {x}")
    return x


def log_binom_pmf(k, n, p: float) -> np.ndarray:
    """``log[C(n, k) p^k (1-p)^(n-k)]`` elementwise; ``-inf`` outside support."""
    k = np.asarray(k, dtype=float)
    n = np.asarray(n, dtype=float)
    with np.errstate(invalid="ignore"):
        out = (
            gammaln(n + 1) - gammaln(k + 1) - gammaln(n - k + 1)
            + xlogy(k, p) + xlog1py(n - k, -p)
        )
    return np.where((k >= 0) & (k <= n), out, -np.inf)


def split_weight(n: int, s: int, tau: float) -> float:
    """Squared splitting amplitude: ``s`` of ``n`` photons are reflected."""
    tau = _check_unit("tau", tau)
    if not 0 <= s <= n:
        raise DomainError(f"need 0 <= s <= n, got s={s}, n={n}")
    return float(np.exp(log_binom_pmf(s, n, 1.0 - tau)))


def bernoulli_weight(s: int, m: int, eta: float) -> float:
    """Probability that a counter of efficiency ``eta`` registers ``m`` of ``s`` photons."""
    eta = _check_unit("eta", eta)
    if not 0 <= m <= s:
        raise DomainError(f"need 0 <= m <= s, got m={m}, s={s}")
    return float(np.exp(log_binom_pmf(m, s, eta)))


def bernoulli_matrix(n_max: int, eta: float, m_max: int | None = None) -> np.ndarray:
    """Matrix ``B[s, m]`` of detection weights for ``s <= n_max``, ``m <= m_max``."""
    eta = _check_unit("eta", eta)
    m_max = n_max if m_max is None else m_max
    s = np.arange(n_max + 1)[:, None]
    m = np.arange(m_max + 1)[None, :]
    return np.exp(log_binom_pmf(m, s, eta))


def split_table(state: DiagonalState, tau: float) -> np.ndarray:
    """Photon-number table ``W[t, s]`` after a beam splitter.

    ``t`` photons are transmitted and ``s`` reflected; ``W`` sums to the
    represented mass of ``state``.
    """
    tau = _check_unit("tau", tau)
    p = state.probs
    n_max = p.size - 1
    t = np.arange(n_max + 1)[:, None]
    s = np.arange(n_max + 1)[None, :]
    n = t + s
    inside = n <= n_max
    logw = log_binom_pmf(s, n, 1.0 - tau)
    rho = np.where(inside, p[np.minimum(n, n_max)], 0.0)
    return np.where(inside, rho * np.exp(logw), 0.0)


def lossy_channel(state: DiagonalState, eta: float) -> DiagonalState:
    """Detected-photon distribution through a counter of efficiency ``eta``.

    The output keeps the input cutoff. Mass beyond it stays in the tail.
    """
    eta = _check_unit("eta", eta)
    b = bernoulli_matrix(state.n_max, eta)
    return DiagonalState(state.probs @ b, state.tail_mass)


@dataclass(frozen=True)
class JointDistribution:
    """Joint detected counts ``table[m_T, m_R]`` on a rectangular grid.

    ``tail`` is the probability falling outside the grid.
    """

    table: np.ndarray
    big_mt: float
    big_mr: float
    tail: float = 0.0

    @property
    def mt_max(self) -> int:
        return self.table.shape[0] - 1

    @property
    def mr_max(self) -> int:
        return self.table.shape[1] - 1

    def marginal_t(self) -> np.ndarray:
        return self.table.sum(axis=1)

    def marginal_r(self) -> np.ndarray:
        return self.table.sum(axis=0)

    def column(self, m_r: int) -> np.ndarray:
        return self.table[:, m_r]

    def to_dict(self) -> dict:
        return {
            "mt_max": self.mt_max,
            "mr_max": self.mr_max,
            "Mt": self.big_mt,
            "Mr": self.big_mr,
            "tail": self.tail,
            "table": self.table.tolist(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "JointDistribution":
        d = json.loads(text)
        return cls(np.asarray(d["table"], dtype=float), d.get("Mt", float("nan")),
                   d.get("Mr", float("nan")), d.get("tail", 0.0))

    def rows(self):
        for mt in range(self.table.shape[0]):
            for mr in range(self.table.shape[1]):
                yield mt, mr, float(self.table[mt, mr])

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["m_T", "m_R", "p"])
        for mt, mr, p in self.rows():
            w.writerow([mt, mr, repr(p)])
        return buf.getvalue()


def joint_general(state: DiagonalState, tau: float, eta_t: float, eta_r: float,
                  mt_max: int, mr_max: int) -> JointDistribution:
    """Joint detected counts for an arbitrary diagonal input by direct summation."""
    tau = _check_unit("tau", tau)
    eta_t = _check_unit("eta_t", eta_t)
    eta_r = _check_unit("eta_r", eta_r)
    if mt_max < 0 or mr_max < 0:
        raise DomainError("grid cutoffs must be >= 0")
    w = split_table(state, tau)
    n_max = state.n_max
    bt = bernoulli_matrix(n_max, eta_t, mt_max)
    br = bernoulli_matrix(n_max, eta_r, mr_max)
    table = bt.T @ w @ br
    n_in = np.arange(n_max + 1) @ state.probs
    tail = max(0.0, 1.0 - float(table.sum()))
    return JointDistribution(table, tau * eta_t * n_in, (1 - tau) * eta_r * n_in, tail)


def _log_joint_thermal(m_t, m_r, big_mt: float, big_mr: float):
    m_t = np.asarray(m_t, dtype=float)
    m_r = np.asarray(m_r, dtype=float)
    return (
        gammaln(m_t + m_r + 1) - gammaln(m_t + 1) - gammaln(m_r + 1)
        + xlogy(m_t, big_mt) + xlogy(m_r, big_mr)
        - (m_t + m_r + 1) * math.log1p(big_mt + big_mr)
    )


def joint_thermal(m_t: int, m_r: int, big_mt: float, big_mr: float) -> float:
    """Closed-form joint count probability for a thermal input."""
    if m_t < 0 or m_r < 0:
        raise DomainError("counts must be >= 0")
    if big_mt < 0 or big_mr < 0:
        raise DomainError("mean detected numbers must be >= 0")
    return float(np.exp(_log_joint_thermal(m_t, m_r, big_mt, big_mr)))


def joint_thermal_table(big_mt: float, big_mr: float, mt_max: int, mr_max: int) -> JointDistribution:
    """:func:`joint_thermal` on the grid ``[0, mt_max] x [0, mr_max]``."""
    if big_mt < 0 or big_mr < 0:
        raise DomainError("mean detected numbers must be >= 0")
    mt = np.arange(mt_max + 1)[:, None]
    mr = np.arange(mr_max + 1)[None, :]
    table = np.exp(_log_joint_thermal(mt, mr, big_mt, big_mr))
    return JointDistribution(table, float(big_mt), float(big_mr), joint_thermal_tail(big_mt, big_mr, mt_max, mr_max))


def joint_thermal_tail(big_mt: float, big_mr: float, mt_max: int, mr_max: int) -> float:
    """Thermal mass outside the grid, ``P(m_T > a) + P(m_T <= a, m_R > b)``.

    Given ``m_T`` the reflected count is negative binomial, so both terms
    are exact survival functions rather than ``1 - sum(table)``.
    """
    pt_out = (big_mt / (1 + big_mt)) ** (mt_max + 1) if big_mt > 0 else 0.0
    y = big_mr / (1.0 + big_mt + big_mr)
    if y == 0:
        return float(pt_out)
    mt = np.arange(mt_max + 1)
    r_out = nbinom.sf(mr_max, mt + 1, 1.0 - y)
    return float(pt_out + thermal_pmf(mt, big_mt) @ r_out)
