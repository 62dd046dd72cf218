"""Photon-number-diagonal states on a truncated Fock basis.

A :class:`DiagonalState` stores the probabilities ``p_n`` for ``n <= n_max``
together with the probability mass known to lie beyond the cutoff. All
operations are pure functions; entropies are in nats.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import xlogy

from .errors import DomainError, UndefinedStatisticError

NORM_TOL = 1e-12


@dataclass(frozen=True)
class DiagonalState:
    """Truncated photon-number distribution.

    ``probs[n]`` is the probability of ``n`` photons and ``tail_mass`` the
    mass beyond ``n_max = len(probs) - 1``.
    """

    probs: np.ndarray
    tail_mass: float = 0.0

    def __post_init__(self):
        p = np.array(self.probs, dtype=float, copy=True).ravel()
        if p.size == 0:
            raise DomainError("a diagonal state needs at least one entry")
        # round-off from subtractions can leave tiny negatives
        if np.any(p < -1e-13):
            raise DomainError(f"negative probability {p.min():.3e}")
        p = np.clip(p, 0.0, None)
        p.setflags(write=False)
        object.__setattr__(self, "probs", p)
        tail = float(self.tail_mass)
        if tail < -1e-13:
            raise DomainError(f"negative tail mass {tail:.3e}")
        object.__setattr__(self, "tail_mass", max(tail, 0.0))
        total = p.sum() + self.tail_mass
        if abs(total - 1.0) > 1e-10:
            raise DomainError(f"state is not normalised (total mass {total!r})")

    @classmethod
    def from_probs(cls, probs, tail_mass: float = 0.0, normalize: bool = False):
        p = np.asarray(probs, dtype=float)
        if normalize:
            total = p.sum() + tail_mass
            p = p / total
            tail_mass = tail_mass / total
        return cls(p, tail_mass)

    @property
    def n_max(self) -> int:
        return self.probs.size - 1

    @property
    def total_mass(self) -> float:
        return float(self.probs.sum() + self.tail_mass)

    def padded(self, n_max: int) -> np.ndarray:
        """Probabilities zero-padded (or cut) to length ``n_max + 1``."""
        out = np.zeros(n_max + 1)
        k = min(n_max + 1, self.probs.size)
        out[:k] = self.probs[:k]
        return out

    def to_dict(self) -> dict:
        return {"probs": self.probs.tolist(), "tail_mass": self.tail_mass}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "DiagonalState":
        d = json.loads(text)
        return cls(np.asarray(d["probs"], dtype=float), float(d.get("tail_mass", 0.0)))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["n", "p_n"])
        for n, p in enumerate(self.probs):
            w.writerow([n, repr(float(p))])
        return buf.getvalue()


def vacuum(n_max: int = 0) -> DiagonalState:
    p = np.zeros(n_max + 1)
    p[0] = 1.0
    return DiagonalState(p)


def fock(n: int, n_max: int | None = None) -> DiagonalState:
    """Number state ``|n><n|``."""
    n_max = n if n_max is None else n_max
    if not 0 <= n <= n_max:
        raise DomainError("photon number must lie inside the cutoff")
    p = np.zeros(n_max + 1)
    p[n] = 1.0
    return DiagonalState(p)


def _check_mean(n_th: float) -> float:
    n_th = float(n_th)
    if not n_th >= 0 or not math.isfinite(n_th):
        raise DomainError(f"mean photon number must be finite and >= 0, got {n_th}")
    return n_th


def thermal_cutoff(n_th: float, tol: float = NORM_TOL, minimum: int = 16) -> int:
    """Smallest cutoff whose thermal tail mass drops below ``tol``."""
    n_th = _check_mean(n_th)
    if n_th == 0:
        return minimum
    log_ratio = math.log(n_th / (1.0 + n_th))
    return max(minimum, math.ceil(math.log(tol) / log_ratio))


def thermal_pmf(m, mean: float) -> np.ndarray:
    """Bose-Einstein probabilities ``mean**m / (1 + mean)**(m + 1)``."""
    mean = _check_mean(mean)
    m = np.asarray(m, dtype=float)
    if mean == 0:
        return (m == 0).astype(float)
    return np.exp(m * math.log(mean / (1.0 + mean)) - math.log1p(mean))


def thermal_state(n_th: float, n_max: int | None = None) -> DiagonalState:
    """Single-mode thermal state truncated at ``n_max`` (auto-chosen if None)."""
    n_th = _check_mean(n_th)
    if n_max is None:
        n_max = thermal_cutoff(n_th)
    if n_max < 0:
        raise DomainError("n_max must be >= 0")
    probs = thermal_pmf(np.arange(n_max + 1), n_th)
    tail = 0.0 if n_th == 0 else (n_th / (1.0 + n_th)) ** (n_max + 1)
    return DiagonalState(probs, tail)


def mean(state: DiagonalState) -> float:
    n = np.arange(state.probs.size)
    return float(n @ state.probs)


def variance(state: DiagonalState) -> float:
    n = np.arange(state.probs.size)
    m = n @ state.probs
    # centred second moment avoids cancellation at large means
    return float(((n - m) ** 2) @ state.probs)


def fano(state: DiagonalState) -> float:
    m = mean(state)
    if m <= 0:
        raise UndefinedStatisticError("Fano factor is undefined for a zero-mean state")
    return variance(state) / m


def shannon_entropy(state: DiagonalState) -> float:
    """Entropy ``-sum p log p`` with ``0 log 0 = 0``."""
    return float(-np.sum(xlogy(state.probs, state.probs)))


def thermal_entropy(n: float) -> float:
    """Von Neumann entropy of a thermal state with mean ``n``."""
    n = _check_mean(n)
    if n == 0:
        return 0.0
    return n * math.log1p(1.0 / n) + math.log1p(n)


def fidelity(p: DiagonalState, q: DiagonalState) -> float:
    """Bhattacharyya overlap ``sum sqrt(p_m q_m)`` on the common support.

    The two tail masses act as one extra lumped bin, so a truncated state
    has unit fidelity with itself.
    """
    n_max = max(p.n_max, q.n_max)
    f = float(np.sum(np.sqrt(p.padded(n_max) * q.padded(n_max))))
    f += math.sqrt(p.tail_mass * q.tail_mass)
    return min(f, 1.0)
