"""Loss functionals over parameters.

Inner maxima are taken over ``action_space.candidates(s)``: every action for
finite spaces, {-1, 0, 1} for the segment oracle and the four corners of the
square. Both losses are convex in the competitor action on each linear piece
of psi, so those candidates attain the exact maximum.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import Action, Context, Dataset, Instance, Parameter, theta_vector
from .errors import InfeasibleActionError, InstanceError


@dataclass(frozen=True)
class LossEvaluation:
    value: float
    witness: Action
    witness_index: Optional[int] = None


def _candidate_features(instance: Instance, s: Context, a: Action) -> tuple[tuple[Action, ...], np.ndarray, np.ndarray]:
    if not instance.action_space.contains(a):
        raise InfeasibleActionError(f"action {a.value} is not in A(s)")
    candidates = instance.action_space.candidates(s)
    stack = np.asarray([c.value for c in candidates] + [a.value], dtype=float)
    F = instance.feature_map.matrix(s, stack)
    return candidates, F[:-1], F[-1]


def suboptimality_gap(instance: Instance, theta: Parameter | np.ndarray, s: Context, a: Action) -> LossEvaluation:
    """max over a' of <theta, psi(s, a') - psi(s, a)>."""
    vec = theta_vector(theta)
    candidates, F, f_a = _candidate_features(instance, s, a)
    values = (F - f_a) @ vec
    k = int(np.argmax(values))
    return LossEvaluation(float(values[k]), candidates[k])


def incenter_loss(instance: Instance, theta: Parameter | np.ndarray, s: Context, a_star: Action) -> LossEvaluation:
    """max over a of <theta, delta(s, a)> + ||delta(s, a)|| with delta relative to ``a_star``."""
    vec = theta_vector(theta)
    candidates, F, f_star = _candidate_features(instance, s, a_star)
    deltas = F - f_star
    values = deltas @ vec + np.linalg.norm(deltas, axis=1)
    k = int(np.argmax(values))
    # the a = a_star term is zero even when a_star is not a candidate
    if values[k] < 0.0:
        return LossEvaluation(0.0, a_star)
    return LossEvaluation(float(values[k]), candidates[k])


def consistency_residual(instance: Instance, theta: Parameter | np.ndarray, dataset: Dataset) -> LossEvaluation:
    """f_T(theta): the largest suboptimality gap of a demonstrated action."""
    if len(dataset) == 0:
        raise InstanceError("consistency residual needs a non-empty dataset")
    best: Optional[LossEvaluation] = None
    for t, demo in enumerate(dataset):
        ev = suboptimality_gap(instance, theta, demo.context, demo.expert_action)
        if best is None or ev.value > best.value:
            best = LossEvaluation(ev.value, ev.witness, t)
    return best
