"""Sample-complexity and regret calculus for scenario programs.

Binomial tails are evaluated in log space (log-gamma coefficients, xlogy /
xlog1py powers) and summed with ``math.fsum``.
"""
from __future__ import annotations

from dataclasses import dataclass
import enum
import logging
import math
from typing import Optional, Union

import numpy as np
from scipy.special import gammaln, xlog1py, xlogy

from .core import Instance, Parameter, derive_seed, draw_contexts, greedy_action_set, tie_break
from .errors import InstanceError, LowDataRegimeError

logger = logging.getLogger(__name__)

N_SEARCH_MAX = 10**9
DIVERSITY_CHUNK = 2048


class Guarantee(str, enum.Enum):
    NOT_INFORMATIVE = "not-informative"


NOT_INFORMATIVE = Guarantee.NOT_INFORMATIVE


@dataclass(frozen=True)
class TailQuery:
    T: int
    d: int
    eps: float = 0.0
    beta: float = 0.5

    def __post_init__(self) -> None:
        if self.T < 1 or self.d < 1:
            raise InstanceError(f"need T >= 1 and d >= 1, got T={self.T}, d={self.d}")
        if not 0.0 <= self.eps <= 1.0:
            raise InstanceError(f"eps must lie in [0, 1], got {self.eps}")
        if not 0.0 < self.beta < 1.0:
            raise InstanceError(f"beta must lie in (0, 1), got {self.beta}")


def binomial_tail(T: int, d: int, eps: float) -> float:
    """sum_{i=0}^{d-1} C(T, i) eps^i (1 - eps)^(T - i)."""
    TailQuery(T, d, eps)
    i = np.arange(min(d - 1, T) + 1, dtype=float)
    log_terms = (
        gammaln(T + 1.0) - gammaln(i + 1.0) - gammaln(T - i + 1.0) + xlogy(i, eps) + xlog1py(T - i, -eps)
    )
    total = math.fsum(np.exp(log_terms).tolist())
    return min(1.0, max(0.0, total))


def sample_complexity_N(d: int, eps: float, beta: float, dim_offset: int = 0) -> Union[int, Guarantee]:
    """Smallest n >= d with binomial_tail(n, d, eps) <= beta.

    ``dim_offset`` counts extra decision variables (1 for the slack program).
    Returns NOT_INFORMATIVE if no n up to 1e9 qualifies.
    """
    dim = d + dim_offset
    TailQuery(dim, dim, eps, beta)
    if eps <= 0.0:
        raise InstanceError("eps must be positive")
    if binomial_tail(dim, dim, eps) <= beta:
        return dim
    lo, hi = dim, 2 * dim
    while binomial_tail(hi, dim, eps) > beta:
        lo, hi = hi, 2 * hi
        if hi > N_SEARCH_MAX:
            return NOT_INFORMATIVE
    # invariant: tail(lo) > beta >= tail(hi)
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if binomial_tail(mid, dim, eps) <= beta:
            hi = mid
        else:
            lo = mid
    return hi


def scenario_epsilon(T: int, d: int, beta: float, tol: float = 1e-12) -> Union[float, Guarantee]:
    """Smallest eps with binomial_tail(T, d, eps) <= beta; NOT_INFORMATIVE when T < d."""
    TailQuery(T, d, 0.0, beta)
    if T < d:
        return NOT_INFORMATIVE
    lo, hi = 0.0, 1.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if binomial_tail(T, d, mid) <= beta:
            hi = mid
        else:
            lo = mid
    return hi


def epsilon_explicit(T: int, d: int, beta: float) -> float:
    """2 (d + ln(1/beta)) / T, valid once T >= 2 (d + ln(1/beta))."""
    TailQuery(T, d, 0.0, beta)
    need = 2.0 * (d + math.log(1.0 / beta))
    if T < need * (1.0 - 1e-12):
        raise LowDataRegimeError(f"T={T} is below 2(d + ln(1/beta)) = {need:.4f}; use eps = 1")
    return min(1.0, need / T)


def action_level_bound(
    eps: float,
    B: float,
    lam: float,
    slack: Optional[float] = None,
    theta_norm: Optional[float] = None,
) -> float:
    """eps B^2 / lambda, plus gamma^2 / (lambda ||theta||^2) for a slack fit; clamped to [0, 1]."""
    if B <= 0:
        raise InstanceError("B must be positive")
    if not lam > 0:
        raise InstanceError("lambda must be positive")
    value = eps * B * B / lam
    if slack is not None:
        if not theta_norm:
            raise InstanceError("a slack term needs a non-zero theta norm")
        value += slack * slack / (lam * theta_norm * theta_norm)
    return min(1.0, max(0.0, value))


def regret_lower_bound(T: int, d: int) -> float:
    """d ln((T + 1) / (d + 1))."""
    if d < 1 or T < d + 1:
        raise InstanceError(f"need T >= d + 1, got T={T}, d={d}")
    return d * math.log((T + 1.0) / (d + 1.0))


def instantaneous_regret_bound(t: int, d: int, theta_norm: float, B: float) -> float:
    """||theta*|| B min(1, d / t): expected round-t regret after t - 1 demonstrations."""
    if t < 1:
        raise InstanceError("t must be >= 1")
    return theta_norm * B * min(1.0, d / t)


def _harmonic(lo: int, hi: int) -> float:
    if hi < lo:
        return 0.0
    return math.fsum(1.0 / k for k in range(lo, hi + 1))


def expected_regret_upper_bound(T: int, d: int, theta_norm: float, B: float) -> float:
    """||theta*|| B (min(d, T) + d sum_{t=d+1}^{T} 1/t)."""
    if T < 1 or d < 1:
        raise InstanceError("need T >= 1 and d >= 1")
    return theta_norm * B * (min(d, T) + d * _harmonic(d + 1, T))


def high_probability_regret_bound(T: int, d: int, delta: float, theta_norm: float, B: float) -> float:
    """Cumulative regret bound holding with probability at least 1 - delta."""
    if T < 1 or d < 1:
        raise InstanceError("need T >= 1 and d >= 1")
    if not 0.0 < delta < 1.0:
        raise InstanceError("delta must lie in (0, 1)")
    c = 2.0 * (d + math.log(2.0 * T / delta))
    t0 = min(T + 1, math.ceil(c) + 1)
    S = (t0 - 1) + c * _harmonic(t0 - 1, T - 1)
    log_term = math.log(2.0 / delta)
    scale = theta_norm * B
    return scale * (S + math.sqrt(2.0 * S * log_term) + (2.0 / 3.0) * log_term)


def _diversity_moments(instance: Instance, theta: Parameter, contexts) -> tuple[np.ndarray, int]:
    M = np.zeros((instance.dim, instance.dim))
    count = 0
    for s in contexts:
        learner = tie_break(greedy_action_set(instance, theta, s), instance.tie_break)
        expert = instance.expert_action(s)
        if learner == expert:
            continue
        delta = instance.features(s, learner) - instance.features(s, expert)
        M += np.outer(delta, delta)
        count += 1
    return M, count


def estimate_covariance_diversity(
    instance: Instance, theta: Parameter, n_samples: int, seed: int, chunk: int = DIVERSITY_CHUNK
) -> float:
    """Minimum eigenvalue of E[delta delta^T | a_theta(s) != a_theta*(s)].

    Moments are accumulated per chunk of contexts and merged additively.
    Returns +inf when no disagreement is sampled.
    """
    if n_samples < 50 * instance.dim:
        raise InstanceError(f"need at least {50 * instance.dim} samples, got {n_samples}")
    M = np.zeros((instance.dim, instance.dim))
    count = 0
    for k, start in enumerate(range(0, n_samples, chunk)):
        size = min(chunk, n_samples - start)
        contexts = draw_contexts(instance, size, derive_seed(seed, k))
        M_k, c_k = _diversity_moments(instance, theta, contexts)
        M += M_k
        count += c_k
    if count == 0:
        return math.inf
    logger.debug("covariance diversity: %d disagreements of %d samples", count, n_samples)
    return float(np.linalg.eigvalsh(M / count)[0])


def audit_feature_bound(instance: Instance, n_samples: int, seed: int) -> float:
    """Empirical max ||psi(s, a)|| over sampled contexts and extreme actions."""
    worst = 0.0
    for s in draw_contexts(instance, n_samples, seed):
        cands = instance.action_space.candidates(s)
        F = instance.feature_map.matrix(s, np.asarray([c.value for c in cands], dtype=float))
        worst = max(worst, float(np.linalg.norm(F, axis=1).max()))
    return worst


def expert_uniqueness_rate(instance: Instance, n_samples: int, seed: int) -> float:
    """Fraction of sampled contexts whose expert argmax set is a singleton."""
    contexts = draw_contexts(instance, n_samples, seed)
    unique = sum(1 for s in contexts if greedy_action_set(instance, instance.theta_star, s).is_singleton)
    return unique / n_samples
