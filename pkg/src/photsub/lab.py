"""Shot-by-shot emulation of the pulsed photon-counting experiment.

Every shot draws a fixed block of uniforms from a counter-based Philox
stream keyed by the seed, so shot ``i`` can be regenerated on its own and
any split of the index range reproduces the same record stream.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.special import ndtri
from scipy.stats import binom

from .errors import CalibrationError, DomainError, EmptySelectionError, SaturationError
from .fock import DiagonalState, fano, fidelity, mean, thermal_cutoff, thermal_state
from .nongauss import nong_eps
from .photon_ops import log_binom_pmf

UNIFORMS_PER_SHOT = 8   # two Philox blocks of four 64-bit words
LINEAR_RANGE = 100      # largest count the detectors resolve linearly
SMALL_BINOMIAL = 64
CHUNK = 1 << 16


@dataclass(frozen=True)
class DetectorModel:
    eta: float
    gamma: float = 1.0
    noise_sigma: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.eta <= 1.0:
            raise DomainError(f"efficiency must lie in [0, 1], got {self.eta}")
        if not self.gamma > 0:
            raise DomainError(f"conversion factor must be > 0, got {self.gamma}")
        if not self.noise_sigma >= 0:
            raise DomainError(f"noise width must be >= 0, got {self.noise_sigma}")


@dataclass(frozen=True)
class ExperimentConfig:
    n_th: float
    tau: float
    det_t: DetectorModel
    det_r: DetectorModel
    shots: int = 30_000
    seed: int = 20100

    def __post_init__(self):
        if not self.n_th >= 0 or not math.isfinite(self.n_th):
            raise DomainError(f"mean photon number must be >= 0, got {self.n_th}")
        if not 0.0 <= self.tau <= 1.0:
            raise DomainError(f"tau must lie in [0, 1], got {self.tau}")
        if self.shots < 1:
            raise DomainError("need at least one shot")
        if not 0 <= self.seed < 2**64:
            raise DomainError("seed must be a 64-bit unsigned integer")

    @property
    def big_mt(self) -> float:
        return self.tau * self.det_t.eta * self.n_th

    @property
    def big_mr(self) -> float:
        return (1.0 - self.tau) * self.det_r.eta * self.n_th

    @classmethod
    def from_detected_means(cls, big_mt: float, big_mr: float, n_th: float = 6.0,
                            tau: float = 0.5, gamma_t: float = 0.093, gamma_r: float = 0.104,
                            noise_sigma: float = 0.0, **kw) -> "ExperimentConfig":
        """Pick efficiencies so that the detected means equal ``(M_T, M_R)``."""
        det_t = DetectorModel(big_mt / (tau * n_th), gamma_t, noise_sigma)
        det_r = DetectorModel(big_mr / ((1 - tau) * n_th), gamma_r, noise_sigma)
        return cls(n_th, tau, det_t, det_r, **kw)

    @classmethod
    def default(cls) -> "ExperimentConfig":
        return cls.from_detected_means(1.254, 1.679)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        d = dict(d)
        det_t = DetectorModel(**d.pop("det_t"))
        det_r = DetectorModel(**d.pop("det_r"))
        return cls(det_t=det_t, det_r=det_r, **d)


@dataclass(frozen=True)
class ShotRecord:
    n_true: int
    s_r: int
    s_t: int
    m_r: int
    m_t: int
    v_r: float
    v_t: float


@dataclass
class ShotBatch:
    """Columnar block of shot records."""

    n_true: np.ndarray
    s_r: np.ndarray
    s_t: np.ndarray
    m_r: np.ndarray
    m_t: np.ndarray
    v_r: np.ndarray
    v_t: np.ndarray

    FIELDS = ("n_true", "s_r", "s_t", "m_r", "m_t", "v_r", "v_t")

    def __len__(self) -> int:
        return self.n_true.size

    def records(self):
        for row in zip(*(getattr(self, f).tolist() for f in self.FIELDS)):
            yield ShotRecord(*row)

    @classmethod
    def concat(cls, batches) -> "ShotBatch":
        batches = list(batches)
        return cls(*(np.concatenate([getattr(b, f) for b in batches]) for f in cls.FIELDS))

    @classmethod
    def from_records(cls, records) -> "ShotBatch":
        cols = {f: [] for f in cls.FIELDS}
        for r in records:
            for f in cls.FIELDS:
                cols[f].append(getattr(r, f))
        ints = {f: np.asarray(cols[f], dtype=np.int64) for f in cls.FIELDS[:5]}
        floats = {f: np.asarray(cols[f], dtype=float) for f in cls.FIELDS[5:]}
        return cls(**ints, **floats)

    def counts(self, cfg: ExperimentConfig | None = None) -> tuple[np.ndarray, np.ndarray]:
        """``(m_t, m_r)``: inferred from voltages when ``cfg`` is given."""
        if cfg is None:
            return self.m_t, self.m_r
        return rebin_voltages(self.v_t, cfg.det_t.gamma), rebin_voltages(self.v_r, cfg.det_r.gamma)


def shot_uniforms(seed: int, start: int, stop: int) -> np.ndarray:
    """Uniform deviates in ``(0, 1)`` for shots ``start..stop-1``, shape ``(n, 8)``."""
    bitgen = np.random.Philox(key=seed)
    bitgen.advance(start * UNIFORMS_PER_SHOT // 4)
    u = np.random.Generator(bitgen).random((stop - start, UNIFORMS_PER_SHOT))
    # shift off zero so log and ndtri stay finite
    return u + 2.0**-54


def geometric_inverse(u: np.ndarray, n_th: float) -> np.ndarray:
    if n_th == 0:
        return np.zeros(u.shape, dtype=np.int64)
    q = n_th / (1.0 + n_th)
    return np.floor(np.log1p(-u) / math.log(q)).astype(np.int64)


def binomial_inverse(u: np.ndarray, n: np.ndarray, p: float) -> np.ndarray:
    """Inverse-CDF binomial draws; exact cumulative search for ``n <= 64``."""
    n = np.asarray(n, dtype=np.int64)
    out = np.empty(n.shape, dtype=np.int64)
    small = n <= SMALL_BINOMIAL
    if small.any():
        us, ns = u[small], n[small]
        k_out = ns.copy()
        cdf = np.zeros(us.shape)
        open_ = np.ones(us.shape, dtype=bool)
        for k in range(int(ns.max()) + 1):
            cdf += np.exp(log_binom_pmf(k, ns, p))
            hit = open_ & (us < cdf)
            k_out[hit] = k
            open_ &= ~hit
            if not open_.any():
                break
        out[small] = k_out
    if (~small).any():
        big = ~small
        out[big] = binom.ppf(u[big], n[big], p).astype(np.int64)
    return out


def simulate_range(cfg: ExperimentConfig, start: int, stop: int) -> ShotBatch:
    u = shot_uniforms(cfg.seed, start, stop)
    n_true = geometric_inverse(u[:, 0], cfg.n_th)
    s_r = binomial_inverse(u[:, 1], n_true, 1.0 - cfg.tau)
    s_t = n_true - s_r
    m_t = binomial_inverse(u[:, 2], s_t, cfg.det_t.eta)
    m_r = binomial_inverse(u[:, 3], s_r, cfg.det_r.eta)
    for name, m in (("T", m_t), ("R", m_r)):
        if m.size and m.max() > LINEAR_RANGE:
            i = int(np.argmax(m > LINEAR_RANGE)) + start
            raise SaturationError(f"detector {name} saturated on shot {i} ({int(m.max())} photons)")
    v_t = cfg.det_t.gamma * m_t
    v_r = cfg.det_r.gamma * m_r
    if cfg.det_t.noise_sigma > 0:
        v_t = v_t + cfg.det_t.noise_sigma * ndtri(u[:, 4])
    if cfg.det_r.noise_sigma > 0:
        v_r = v_r + cfg.det_r.noise_sigma * ndtri(u[:, 5])
    return ShotBatch(n_true, s_r, s_t, m_r, m_t, v_r.astype(float), v_t.astype(float))


def simulate(cfg: ExperimentConfig) -> ShotBatch:
    return ShotBatch.concat(
        simulate_range(cfg, a, min(a + CHUNK, cfg.shots)) for a in range(0, cfg.shots, CHUNK)
    )


def run_experiment(cfg: ExperimentConfig):
    """Stream :class:`ShotRecord` objects for the whole run."""
    for a in range(0, cfg.shots, CHUNK):
        yield from simulate_range(cfg, a, min(a + CHUNK, cfg.shots)).records()


def rebin_voltages(voltages, gamma: float) -> np.ndarray:
    """Nearest-integer photon counts ``round(v / gamma)``, clamped at zero."""
    if not gamma > 0:
        raise DomainError("conversion factor must be > 0")
    m = np.floor(np.asarray(voltages, dtype=float) / gamma + 0.5)
    return np.maximum(m, 0).astype(np.int64)


def _comb_score(v: np.ndarray, gamma: float, width: float) -> float:
    x = v / gamma
    d = x - np.round(x)
    return float(np.mean(np.exp(-0.5 * (d / width) ** 2)))


def _golden_max(f, a: float, b: float, rtol: float = 1e-10) -> float:
    inv_phi = (math.sqrt(5) - 1) / 2
    c, d = b - inv_phi * (b - a), a + inv_phi * (b - a)
    fc, fd = f(c), f(d)
    while b - a > rtol * (abs(a) + abs(b)):
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - inv_phi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + inv_phi * (b - a)
            fd = f(d)
    return (a + b) / 2


def calibrate_gamma(voltages, gamma_range: tuple[float, float] = (0.02, 0.5),
                    width: float = 0.1, max_scan_samples: int = 5000) -> float:
    """Estimate the volts-per-photon factor from the comb structure of ``voltages``.

    A log-spaced scan brackets the peaks of a Gaussian comb score. Divisors
    ``gamma/k`` fit the comb equally well, so the largest near-optimal
    peak wins; golden-section search then refines it on all samples.
    """
    v = np.asarray(voltages, dtype=float).ravel()
    lo, hi = map(float, gamma_range)
    if not 0 < lo < hi:
        raise DomainError("gamma range must satisfy 0 < lo < hi")
    if v.size < 1000:
        raise DomainError(f"need at least 1000 samples, got {v.size}")
    stride = max(1, v.size // max_scan_samples)
    vs = v[::stride]
    m_top = max(np.percentile(np.abs(vs), 99) / lo, 1.0)
    n_grid = int(np.clip(math.log(hi / lo) / (width / (4 * m_top)), 200, 40_000))
    grid = np.geomspace(lo, hi, n_grid)
    scores = np.array([_comb_score(vs, g, width) for g in grid])
    if scores.max() - scores.min() < 1e-6:
        raise CalibrationError("voltage data carry no comb structure")
    peak = (scores >= np.roll(scores, 1)) & (scores >= np.roll(scores, -1))
    peak[[0, -1]] = False
    good = np.flatnonzero(peak & (scores >= 0.97 * scores.max()))
    i = good[-1] if good.size else int(np.argmax(scores))
    a, b = grid[max(i - 1, 0)], grid[min(i + 1, n_grid - 1)]
    return _golden_max(lambda g: _comb_score(v, g, width), a, b)


@dataclass(frozen=True)
class Condition:
    """Conditioning rule on the reflected count: exact value or any click."""

    kind: str
    m_r: int | None = None

    @classmethod
    def cps(cls, m_r: int) -> "Condition":
        if m_r < 0:
            raise DomainError("conditioning value must be >= 0")
        return cls("cps", int(m_r))

    @classmethod
    def ips(cls) -> "Condition":
        return cls("ips")

    @classmethod
    def parse(cls, text: str) -> "Condition":
        text = text.strip().lower()
        if text == "ips":
            return cls.ips()
        if text.startswith("cps:"):
            return cls.cps(int(text[4:]))
        raise DomainError(f"unknown conditioning mode {text!r} (use 'ips' or 'cps:K')")

    def select(self, m_r: np.ndarray) -> np.ndarray:
        return m_r >= 1 if self.kind == "ips" else m_r == self.m_r

    def __str__(self) -> str:
        return "ips" if self.kind == "ips" else f"cps:{self.m_r}"


@dataclass(frozen=True)
class ConditionedHistogram:
    state: DiagonalState
    selected: int
    total: int

    @property
    def p_select(self) -> float:
        return self.selected / self.total


def histogram(counts: np.ndarray) -> DiagonalState:
    counts = np.asarray(counts, dtype=np.int64)
    if counts.size == 0:
        raise EmptySelectionError("no shots to histogram")
    h = np.bincount(counts)
    return DiagonalState(h / counts.size)


def condition_counts(m_t: np.ndarray, m_r: np.ndarray, mode: Condition) -> ConditionedHistogram:
    sel = mode.select(np.asarray(m_r))
    n_sel = int(sel.sum())
    if n_sel == 0:
        raise EmptySelectionError(f"no shot satisfies the {mode} condition")
    return ConditionedHistogram(histogram(np.asarray(m_t)[sel]), n_sel, int(sel.size))


def condition_records(records, mode: Condition, cfg: ExperimentConfig | None = None) -> ConditionedHistogram:
    """Histogram of ``m_t`` over the shots selected by ``mode``.

    ``records`` is a :class:`ShotBatch` or an iterable of :class:`ShotRecord`.
    With ``cfg`` the counts are re-inferred from the stored voltages.
    """
    batch = records if isinstance(records, ShotBatch) else ShotBatch.from_records(records)
    m_t, m_r = batch.counts(cfg)
    return condition_counts(m_t, m_r, mode)


def joint_histogram(m_t: np.ndarray, m_r: np.ndarray, mt_max: int, mr_max: int) -> np.ndarray:
    """Empirical joint frequencies; shots outside the grid are dropped."""
    inside = (m_t <= mt_max) & (m_r <= mr_max)
    h = np.zeros((mt_max + 1, mr_max + 1))
    np.add.at(h, (m_t[inside], m_r[inside]), 1.0)
    return h / m_t.size


# -- analysis shared by ``simulate`` and ``analyze``

DEFAULT_CPS_VALUES = tuple(range(5))


def theory_input(cfg: ExperimentConfig) -> DiagonalState:
    return thermal_state(cfg.n_th, thermal_cutoff(cfg.n_th, tol=1e-16) + 40)


def _stats(state: DiagonalState) -> dict:
    m = mean(state)
    return {
        "mean": m,
        "fano": fano(state) if m > 0 else None,
        "eps": nong_eps(state),
    }


def analyze_batch(batch: ShotBatch, cfg: ExperimentConfig,
                  modes: list[Condition] | None = None) -> dict:
    """Empirical statistics of a run next to their closed-form expectations."""
    from .cps import cps_detected
    from .ips import ips_state

    if modes is None:
        modes = [Condition.cps(k) for k in DEFAULT_CPS_VALUES] + [Condition.ips()]
    m_t, m_r = batch.counts(cfg)
    uncond_t = histogram(m_t)
    theory_t = thermal_state(cfg.big_mt)
    summary = {
        "shots": len(batch),
        "Mt_theory": cfg.big_mt,
        "Mr_theory": cfg.big_mr,
        "unconditional": {
            **_stats(uncond_t),
            "mean_r": float(np.mean(m_r)),
            "fidelity": fidelity(uncond_t, theory_t),
            "theory": {"mean": cfg.big_mt, "fano": 1 + cfg.big_mt},
        },
        "conditioned": [],
    }
    state_in = None
    for mode in modes:
        entry = {"mode": str(mode)}
        try:
            h = condition_counts(m_t, m_r, mode)
        except EmptySelectionError as exc:
            if len(modes) == 1:
                raise
            entry["error"] = str(exc)
            summary["conditioned"].append(entry)
            continue
        if mode.kind == "cps":
            if state_in is None:
                state_in = theory_input(cfg)
            th = cps_detected(state_in, cfg.tau, cfg.det_r.eta, cfg.det_t.eta, mode.m_r)
            theory = {"p": th.p_condition, "mean": th.m_cps, "fano": th.fano_cps,
                      "eps": th.eps_nong}
            th_state = th.state
        else:
            th = ips_state(cfg.n_th, cfg.tau, cfg.det_r.eta, cfg.det_t.eta)
            theory = {"p": th.p_on, "mean": th.m_ips, "fano": th.fano_ips, "eps": th.eps_nong}
            th_state = th.detected
        entry.update({
            "selected": h.selected,
            "p": h.p_select,
            **_stats(h.state),
            "fidelity": fidelity(h.state, th_state),
            "theory": theory,
            "histogram": h.state.probs.tolist(),
        })
        summary["conditioned"].append(entry)
    return summary
