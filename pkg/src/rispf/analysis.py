"""Closed-form references and statistical metrics."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .ris_controller import RisCodebook, optimal_state_for_ue

PMF_ATOL = 1e-9


def _check_pmf_pair(p, q):
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape != q.shape:
        raise ValueError(f"length mismatch: {p.shape} vs {q.shape}")
    for name, x in (("p", p), ("q", q)):
        if np.any(x < 0) or abs(x.sum() - 1.0) > PMF_ATOL:
            raise ValueError(f"{name} is not a normalised pmf (sum={x.sum()})")
    return p, q


def tv_distance(p, q) -> float:
    p, q = _check_pmf_pair(p, q)
    return 0.5 * float(np.abs(p - q).sum())


def kl_divergence(p, q) -> float:
    """``sum p ln(p/q)`` in nats, with ``0 ln 0 = 0``."""
    p, q = _check_pmf_pair(p, q)
    support = p > 0
    if np.any(q[support] == 0):
        raise ValueError("p is not absolutely continuous with respect to q")
    ps, qs = p[support], q[support]
    return max(0.0, float(np.sum(ps * (np.log(ps) - np.log(qs)))))


@dataclass(frozen=True)
class BoundParams:
    eps1: float = 0.1
    eps2: float = 0.1
    eta1: float = 0.1
    eta2: float = 0.1
    L: int = 10
    K: int = 10
    ts_slots: int = 1

    def __post_init__(self):
        for name in ("eps1", "eps2"):
            if not 0.0 < getattr(self, name) < 1.0:
                raise ValueError(f"{name} must lie in (0, 1)")
        for name in ("eta1", "eta2"):
            if not 0.0 < getattr(self, name) < 0.5:
                raise ValueError(f"{name} must lie in (0, 0.5)")
        if self.L < 1 or self.K < 1 or self.ts_slots < 1:
            raise ValueError("L, K and ts_slots must be positive")

    @property
    def gap_threshold(self) -> float:
        return 2.0 * self.K * (self.eps1 + self.eps2)

    @property
    def confidence(self) -> float:
        return 1.0 - self.eta1 - self.eta2


def required_tc_slots(b: BoundParams) -> int:
    """Smallest EWMA window (slots) meeting both Hoeffding conditions."""
    ris_term = b.ts_slots * math.log(2 * b.L / b.eta1) / (2 * b.eps1 ** 2)
    ue_term = math.log(2 * b.K / b.eta2) / (2 * b.eps2 ** 2)
    return math.ceil(max(ris_term, ue_term))


@dataclass(frozen=True)
class ThroughputVectors:
    achieved: np.ndarray
    optimal: np.ndarray


def optimality_gap(tv: ThroughputVectors) -> float:
    achieved = np.asarray(tv.achieved, dtype=float)
    optimal = np.asarray(tv.optimal, dtype=float)
    scale = np.max(np.abs(optimal))
    if scale == 0:
        raise ValueError("optimal throughput vector is all zero")
    return float(np.max(np.abs(achieved - optimal)) / scale)


def optimal_rates(responses, betas, fading_power, codebook: RisCodebook, tx_snr: float,
                  residual_gain: float = 0.0) -> np.ndarray:
    """Per-UE rate under its best codeword; ``residual_gain`` is an additive array-gain floor."""
    out = np.empty(len(responses))
    for k, a in enumerate(responses):
        _, gain = optimal_state_for_ue(codebook, a)
        out[k] = math.log2(1.0 + tx_snr * betas[k] * fading_power[k] * (gain + residual_gain))
    return out


def genie_throughput(responses, betas, fading_power, codebook: RisCodebook, tx_snr: float,
                     residual_gain: float = 0.0):
    """Round-robin with the RIS pointed at the served UE.

    Returns ``(per_ue, mean)`` with ``per_ue[k] = R_k^opt / K`` and ``mean`` their sum.
    """
    r_opt = optimal_rates(responses, betas, fading_power, codebook, tx_snr, residual_gain)
    per_ue = r_opt / len(r_opt)
    return per_ue, float(per_ue.sum())


def class_win_oracle(k_ell: int) -> float:
    """Probability a given UE has the largest of ``k_ell`` i.i.d. Exp(1) fading powers."""
    if k_ell < 1:
        raise ValueError("class size must be >= 1")
    return 1.0 / k_ell


def class_win_integral(k_ell: int) -> float:
    """Numerical value of ``int_0^inf (1 - e^-x)^(k-1) e^-x dx``."""
    from scipy.integrate import quad

    val, _ = quad(lambda x: (1.0 - math.exp(-x)) ** (k_ell - 1) * math.exp(-x), 0.0, math.inf)
    return val


def max_exponential_frequencies(k_ell: int, n_trials: int, rng: np.random.Generator) -> np.ndarray:
    """Brute-force win frequencies of each of ``k_ell`` i.i.d. Exp(1) draws."""
    wins = np.argmax(rng.exponential(size=(n_trials, k_ell)), axis=1)
    return np.bincount(wins, minlength=k_ell) / n_trials


def mean_ci(samples, confidence: float = 0.95):
    """Sample mean and two-sided Student-t half width."""
    x = np.asarray(samples, dtype=float)
    if x.size < 2:
        return float(x.mean()), float("nan")
    sem = x.std(ddof=1) / math.sqrt(x.size)
    return float(x.mean()), float(stats.t.ppf(0.5 + confidence / 2, x.size - 1) * sem)


def lower_confidence_bound(samples, confidence: float = 0.95) -> float:
    """One-sided lower bound on the mean."""
    x = np.asarray(samples, dtype=float)
    sem = x.std(ddof=1) / math.sqrt(x.size)
    return float(x.mean() - stats.t.ppf(confidence, x.size - 1) * sem)
