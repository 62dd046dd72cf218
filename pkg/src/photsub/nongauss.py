"""Relative-entropy non-Gaussianity of photon-number-diagonal states.

For a diagonal state the closest Gaussian reference is the thermal state
with the same mean, so the measure reduces to an entropy difference.
Applied to a detected (loss-smeared) distribution the same functional
gives a lower bound on the non-Gaussianity of the undetected state.
"""

from __future__ import annotations

from dataclasses import dataclass

from .fock import DiagonalState, mean, shannon_entropy, thermal_entropy
from .photon_ops import _check_unit, lossy_channel

SLACK = 1e-9


@dataclass(frozen=True)
class NongReport:
    delta: float
    eps: float
    eta_used: float

    @property
    def ok(self) -> bool:
        return self.eps <= self.delta + SLACK and self.eps >= -SLACK


def nong_delta(p: DiagonalState) -> float:
    return thermal_entropy(mean(p)) - shannon_entropy(p)


def nong_eps(q: DiagonalState) -> float:
    """Bound from a detected distribution ``q``; numerically identical to :func:`nong_delta`."""
    return thermal_entropy(mean(q)) - shannon_entropy(q)


def verify_monotonicity(p: DiagonalState, eta: float) -> NongReport:
    """Compare the non-Gaussianity of ``p`` with that of its lossy image."""
    eta = _check_unit("eta", eta)
    return NongReport(nong_delta(p), nong_eps(lossy_channel(p, eta)), eta)
