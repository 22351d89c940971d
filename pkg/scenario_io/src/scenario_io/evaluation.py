"""Monte Carlo evaluation: mismatch rates, online regret and scenario tail checks."""
from __future__ import annotations

from dataclasses import dataclass, replace
import logging
import math
from pathlib import Path
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.special import betainc
from scipy.stats import norm

from . import journal
from .bounds import binomial_tail
from .core import (
    Action,
    Context,
    Demonstration,
    Dataset,
    FiniteActionSpace,
    Instance,
    Parameter,
    SegmentOracle,
    TieBreak,
    default_tie_tol,
    derive_seed,
    draw_contexts,
    draw_dataset,
    greedy_action_set,
    theta_vector,
    tie_break,
)
from .errors import InstanceError, ScenarioIOError
from .estimators import EstimatorConfig, default_polyak_init, fit
from .ir.models import CurveCell, CurvePoint, MismatchReport, RegretTrace, TailRow, TailTable
from .losses import suboptimality_gap

logger = logging.getLogger(__name__)

Z90 = float(norm.ppf(0.95))
INNER_MC_SAMPLES = 10_000
SCHEDULES = ("every-round", "doubling")


def wald_band(rate: float, n: int) -> Tuple[float, float]:
    half = Z90 * math.sqrt(rate * (1.0 - rate) / n)
    return max(0.0, rate - half), min(1.0, rate + half)


@dataclass(frozen=True, eq=False)
class HoldoutBatch:
    """Fresh test contexts with their expert actions, drawn once and reused across fits."""

    contexts: Tuple[Context, ...]
    experts: Tuple[Action, ...]
    seed: int
    features: Optional[np.ndarray] = None
    expert_index: Optional[np.ndarray] = None

    def __len__(self) -> int:
        return len(self.contexts)


def draw_holdout_batch(instance: Instance, n_test: int, seed: int) -> HoldoutBatch:
    if n_test < 1:
        raise InstanceError("n_test must be >= 1")
    contexts = tuple(draw_contexts(instance, n_test, seed))
    experts = tuple(instance.expert_action(s) for s in contexts)
    space = instance.action_space
    if isinstance(space, FiniteActionSpace) and instance.tie_break is TieBreak.SMALLEST_INDEX:
        features = np.stack([instance.feature_map.matrix(s, space.values) for s in contexts])
        expert_index = np.array([a.index for a in experts])
        return HoldoutBatch(contexts, experts, seed, features, expert_index)
    return HoldoutBatch(contexts, experts, seed)


def _failures_finite(batch: HoldoutBatch, theta: np.ndarray, rel: float) -> Tuple[np.ndarray, np.ndarray]:
    scores = batch.features @ theta
    best = scores.max(axis=1)
    tol = rel * (1.0 + np.abs(best))
    in_set = scores >= (best - tol)[:, None]
    learner = np.argmax(in_set, axis=1)
    rows = np.arange(len(batch))
    set_fail = ~in_set[rows, batch.expert_index]
    action_fail = set_fail | (learner != batch.expert_index)
    return set_fail, action_fail


def _failures_generic(instance: Instance, batch: HoldoutBatch, theta: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    set_fail = np.zeros(len(batch), dtype=bool)
    action_fail = np.zeros(len(batch), dtype=bool)
    for i, (s, expert) in enumerate(zip(batch.contexts, batch.experts)):
        gap = suboptimality_gap(instance, theta, s, expert)
        best = gap.value + float(instance.features(s, expert) @ theta)
        set_fail[i] = gap.value > default_tie_tol(best, instance.tie_tol_rel)
        if set_fail[i]:
            action_fail[i] = True
            continue
        learner = tie_break(greedy_action_set(instance, theta, s), instance.tie_break)
        action_fail[i] = learner != expert
    return set_fail, action_fail


def mismatch_flags(instance: Instance, theta: Parameter | np.ndarray, batch: HoldoutBatch) -> Tuple[np.ndarray, np.ndarray]:
    """Per-sample (set failure, action failure); set failures always imply action failures."""
    vec = theta_vector(theta)
    if batch.features is not None:
        return _failures_finite(batch, vec, instance.tie_tol_rel)
    return _failures_generic(instance, batch, vec)


def evaluate_mismatch(
    instance: Instance,
    theta_hat: Parameter | np.ndarray,
    n_test: int,
    seed: int,
    batch: Optional[HoldoutBatch] = None,
) -> MismatchReport:
    """Set- and action-level mismatch on ``n_test`` fresh contexts with a Wald 90% band."""
    if batch is None:
        batch = draw_holdout_batch(instance, n_test, seed)
    set_fail, action_fail = mismatch_flags(instance, theta_hat, batch)
    n = len(batch)
    action_rate = float(action_fail.sum()) / n
    lo, hi = wald_band(action_rate, n)
    return MismatchReport(
        n_test=n,
        set_rate=float(set_fail.sum()) / n,
        action_rate=action_rate,
        ci90_lower=lo,
        ci90_upper=hi,
        seed=batch.seed,
        set_failures=int(set_fail.sum()),
        action_failures=int(action_fail.sum()),
    )


def _should_refit(t: int, schedule: str) -> bool:
    if schedule == "every-round":
        return True
    return t & (t - 1) == 0


def run_online(
    instance: Instance,
    config: EstimatorConfig,
    T: int,
    refit_schedule: str = "every-round",
    seed: int = 0,
    journal_path: Optional[Path] = None,
) -> RegretTrace:
    """Play the tie-broken greedy action of the current fit, then learn from the expert.

    Failed refits keep the previous parameter; the round's regret still counts.
    """
    if T < 1:
        raise InstanceError("T must be >= 1")
    if refit_schedule not in SCHEDULES:
        raise InstanceError(f"unknown refit schedule {refit_schedule!r}")
    theta = config.polyak_init or default_polyak_init(instance, config.seed)
    theta_star = instance.theta_star.vector
    dataset = Dataset((), seed, instance.name)
    per_round: List[float] = []
    flags: List[bool] = []
    failures = 0
    for t, s in enumerate(draw_contexts(instance, T, seed), start=1):
        expert = instance.expert_action(s)
        learner = tie_break(greedy_action_set(instance, theta, s), instance.tie_break)
        mismatch = learner != expert
        regret = 0.0
        if mismatch:
            regret = float((instance.features(s, expert) - instance.features(s, learner)) @ theta_star)
        per_round.append(regret)
        flags.append(mismatch)
        dataset = dataset.extended(Demonstration(s, expert))
        if not _should_refit(t, refit_schedule):
            continue
        try:
            theta = fit(instance, dataset, config).theta
        except ScenarioIOError as exc:
            failures += 1
            logger.debug("round %d refit failed: %s", t, exc)
            if journal_path is not None:
                journal.append_record("refit-failure", {"round": t, "seed": seed, "error": str(exc)}, journal_path, exc.code)
    cumulative = np.cumsum(per_round).tolist()
    return RegretTrace(per_round=per_round, cumulative=cumulative, mismatch_flags=flags, refit_failures=failures)


def _sphere_cap(t: float, d: int) -> float:
    """P(u_1 > t) for u uniform on S^{d-1}, d >= 2."""
    if t >= 1.0:
        return 0.0
    if t <= -1.0:
        return 1.0
    upper = 0.5 * float(betainc((d - 1) / 2.0, 0.5, 1.0 - t * t))
    return upper if t >= 0.0 else 1.0 - upper


def resolve_method(method: str, d: int) -> str:
    if method == "auto":
        return "exact" if d <= 2 else "monte-carlo"
    return method


def violation_probability(
    instance: Instance,
    theta: Parameter | np.ndarray,
    method: str = "auto",
    n_inner: int = INNER_MC_SAMPLES,
    seed: int = 0,
) -> float:
    """P_s(expert action 0 is outside the greedy set) on the tightness instance.

    The expert leaves the greedy set iff <s, theta_-1> > theta_0 or
    <s, theta_-1> < -3 theta_0. ``auto`` uses the exact form for d <= 2 (the
    two-point sphere and circular arcs) and seeded Monte Carlo otherwise;
    ``cap`` uses the incomplete-beta spherical cap for any d.
    """
    if not isinstance(instance.action_space, SegmentOracle):
        raise InstanceError("violation probability is defined on the tightness instance")
    vec = theta_vector(theta)
    head, w = float(vec[0]), vec[1:]
    d = w.size
    rho = float(np.linalg.norm(w))
    method = resolve_method(method, d)
    if method == "monte-carlo":
        s = instance.context_sampler.sample_array(np.random.default_rng(seed), n_inner)
        x = s @ w
        return float(np.mean((x > head) | (x < -3.0 * head)))
    if rho == 0.0:
        return float(head < 0.0)
    if d == 1:
        x = np.array([w[0], -w[0]])
        return float(np.mean((x > head) | (x < -3.0 * head)))
    if method not in ("exact", "cap"):
        raise InstanceError(f"unknown violation method {method!r}")
    if head <= 0.0:
        raise InstanceError("closed-form violation needs theta_0 > 0")
    if method == "exact" and d == 2:
        upper = math.acos(min(1.0, head / rho)) / math.pi if head < rho else 0.0
        lower = math.acos(min(1.0, 3.0 * head / rho)) / math.pi if 3.0 * head < rho else 0.0
        return upper + lower
    return _sphere_cap(head / rho, d) + _sphere_cap(3.0 * head / rho, d)


def _linear(config: EstimatorConfig) -> EstimatorConfig:
    return config if config.objective == "linear" else replace(config, objective="linear")


def _trial_violations(
    instance: Instance,
    config: EstimatorConfig,
    N: int,
    n_trials: int,
    seed: int,
    method: str,
    journal_path: Optional[Path],
) -> Tuple[List[float], int]:
    values: List[float] = []
    discarded = 0
    for k in range(n_trials):
        trial_seed = derive_seed(seed, k)
        dataset = draw_dataset(instance, N, trial_seed)
        try:
            theta = fit(instance, dataset, config).theta
        except ScenarioIOError as exc:
            discarded += 1
            if journal_path is not None:
                journal.append_record("trial-discarded", {"trial": k, "N": N, "error": str(exc)}, journal_path, exc.code)
            continue
        values.append(violation_probability(instance, theta, method, seed=derive_seed(trial_seed, 1)))
    return values, discarded


def expected_violation(
    instance: Instance,
    config: EstimatorConfig,
    N: int,
    n_trials: int,
    seed: int,
    method: str = "auto",
    journal_path: Optional[Path] = None,
) -> Tuple[float, float, int]:
    """(trial mean, standard error, discarded) of the violation probability at sample size N."""
    values, discarded = _trial_violations(instance, _linear(config), N, n_trials, seed, method, journal_path)
    if not values:
        return math.nan, math.nan, discarded
    arr = np.asarray(values)
    stderr = float(arr.std(ddof=1) / math.sqrt(arr.size)) if arr.size > 1 else 0.0
    return float(arr.mean()), stderr, discarded


def tail_experiment(
    instance: Instance,
    config: EstimatorConfig,
    T: int,
    n_trials: int,
    eps_grid: Sequence[float],
    seed: int,
    method: str = "auto",
    journal_path: Optional[Path] = None,
) -> TailTable:
    """Empirical P_D(violation > eps) next to binomial_tail(T, d, eps)."""
    if not isinstance(instance.action_space, SegmentOracle):
        raise InstanceError("tail experiment runs on the tightness instance")
    d = instance.dim - 1
    if T < d:
        raise InstanceError(f"need T >= d, got T={T}, d={d}")
    values, discarded = _trial_violations(instance, _linear(config), T, n_trials, seed, method, journal_path)
    arr = np.asarray(values)
    rows = []
    for eps in eps_grid:
        empirical = float(np.mean(arr > eps)) if arr.size else math.nan
        rows.append(TailRow(eps=float(eps), empirical=empirical, theoretical=binomial_tail(T, d, float(eps)), discarded=discarded))
    if discarded:
        logger.info("tail experiment discarded %d of %d trials", discarded, n_trials)
    return TailTable(
        T=T,
        d=d,
        n_trials=n_trials,
        discarded=discarded,
        mean_violation=float(arr.mean()) if arr.size else math.nan,
        method=resolve_method(method, d),
        rows=rows,
    )


def run_curve_cell(
    instance: Instance,
    d: int,
    run: int,
    t_grid: Iterable[int],
    estimators: Sequence[str],
    n_test: int,
    seed: int,
    polyak_iters: Optional[int] = None,
    journal_path: Optional[Path] = None,
) -> CurveCell:
    """One run of the nested experiment: data drawn once up to max(t_grid), each T fits the prefix."""
    grid = sorted(set(int(t) for t in t_grid))
    data = draw_dataset(instance, grid[-1], derive_seed(seed, d, run, 0))
    batch = draw_holdout_batch(instance, n_test, derive_seed(seed, d, run, 1))
    points: List[CurvePoint] = []
    for T in grid:
        prefix = data.prefix(T)
        for name in estimators:
            config = EstimatorConfig(kind=name, polyak_iters=polyak_iters, seed=derive_seed(seed, d, run, 2))
            try:
                theta = fit(instance, prefix, config).theta
            except ScenarioIOError as exc:
                logger.warning("d=%s run=%s T=%s %s failed: %s", d, run, T, name, exc)
                if journal_path is not None:
                    journal.append_record(
                        "fit-failure", {"d": d, "run": run, "T": T, "estimator": name, "error": str(exc)}, journal_path, exc.code
                    )
                points.append(CurvePoint(estimator=name, T=T, failed=True))
                continue
            set_fail, action_fail = mismatch_flags(instance, theta, batch)
            points.append(
                CurvePoint(
                    estimator=name,
                    T=T,
                    set_rate=float(set_fail.mean()),
                    action_rate=float(action_fail.mean()),
                )
            )
    return CurveCell(d=d, run=run, points=points)


def across_run_band(values: Sequence[float]) -> Tuple[float, float, float]:
    """(mean, lower, upper): mean +/- z_0.95 * sd / sqrt(runs), clipped to [0, 1]."""
    arr = np.asarray([v for v in values if v is not None and not math.isnan(v)], dtype=float)
    if arr.size == 0:
        return math.nan, math.nan, math.nan
    mean = float(arr.mean())
    if arr.size == 1:
        return mean, mean, mean
    half = Z90 * float(arr.std(ddof=1)) / math.sqrt(arr.size)
    return mean, max(0.0, mean - half), min(1.0, mean + half)
