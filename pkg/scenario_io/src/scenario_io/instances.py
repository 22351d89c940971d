"""Generators for the three concrete problem instances.

* ``synthetic-linear``: K unit-norm actions, d x d Unif[-3, 3] contexts,
  psi(s, a) = s a, theta* on the sum-to-one slice.
* ``tightness``: unit-sphere contexts, the segment oracle on [-1, 1] and
  psi(s, a) = (-2|a| + a, a s); theta* = (1, 0, ..., 0).
* ``example-one``: two equiprobable states, A = [-1, 1]^2 and
  psi(s, a) = (a_1, a_2, s a_2); theta* = (1, -1, 2).

Feature maps and samplers are plain module-level classes so instances can be
pickled into worker processes.
"""
from __future__ import annotations

import math
from dataclasses import replace
from typing import Dict, Literal

import numpy as np
from pydantic import BaseModel, validator

from .core import (
    Context,
    ContextKind,
    FiniteActionSpace,
    Instance,
    Parameter,
    SegmentOracle,
    Slice,
    SquareActionSpace,
    TIE_TOL_REL,
    TieBreak,
)
from .errors import InstanceError


class LinearContextFeatures:
    """psi(s, a) = s a for a d x d context matrix."""

    def __init__(self, dim: int) -> None:
        self.dim = dim

    def matrix(self, s: Context, actions: np.ndarray) -> np.ndarray:
        return actions @ s.array.T


class TightnessFeatures:
    def __init__(self, d: int) -> None:
        self.dim = d + 1

    def matrix(self, s: Context, actions: np.ndarray) -> np.ndarray:
        a = np.asarray(actions, dtype=float)[:, 0]
        head = -2.0 * np.abs(a) + a
        return np.column_stack([head, np.outer(a, s.array)])


class ExampleOneFeatures:
    dim = 3

    def matrix(self, s: Context, actions: np.ndarray) -> np.ndarray:
        acts = np.asarray(actions, dtype=float)
        return np.column_stack([acts[:, 0], acts[:, 1], float(s.payload) * acts[:, 1]])


class ActionFeatures:
    """psi(s, a) = a; context-free scores, handy for small hand-checked spaces."""

    def __init__(self, dim: int) -> None:
        self.dim = dim

    def matrix(self, s: Context, actions: np.ndarray) -> np.ndarray:
        return np.asarray(actions, dtype=float)


class UniformMatrixSampler:
    def __init__(self, d: int, low: float = -3.0, high: float = 3.0) -> None:
        self.d, self.low, self.high = d, low, high

    def sample_array(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return rng.uniform(self.low, self.high, size=(n, self.d, self.d))

    def sample_many(self, rng: np.random.Generator, n: int) -> list[Context]:
        return [Context(ContextKind.MATRIX, m) for m in self.sample_array(rng, n)]


class SphereSampler:
    """Uniform on S^{d-1} via a normalized standard Gaussian."""

    def __init__(self, d: int) -> None:
        self.d = d

    def sample_array(self, rng: np.random.Generator, n: int) -> np.ndarray:
        g = rng.standard_normal((n, self.d))
        norms = np.linalg.norm(g, axis=1, keepdims=True)
        return g / norms

    def sample_many(self, rng: np.random.Generator, n: int) -> list[Context]:
        return [Context(ContextKind.SPHERE, v) for v in self.sample_array(rng, n)]


class LabelSampler:
    def __init__(self, labels: tuple[int, ...] = (0, 1)) -> None:
        self.labels = labels

    def sample_many(self, rng: np.random.Generator, n: int) -> list[Context]:
        picks = rng.integers(0, len(self.labels), size=n)
        return [Context(ContextKind.LABEL, self.labels[int(i)]) for i in picks]


def make_synthetic(d: int, K: int = 15, seed: int = 0) -> Instance:
    if d < 1:
        raise InstanceError(f"d must be >= 1, got {d}")
    if K < 2:
        raise InstanceError(f"K must be >= 2, got {K}")
    rng = np.random.default_rng(seed)
    actions = rng.standard_normal((K, d))
    actions /= np.linalg.norm(actions, axis=1, keepdims=True)
    weights = rng.uniform(0.0, 1.0, size=d)
    theta_star = Parameter.from_vector(weights / weights.sum(), Slice.AFFINE_SUM)
    return Instance(
        name=f"synthetic-d{d}-K{K}-seed{seed}",
        action_space=FiniteActionSpace(actions),
        feature_map=LinearContextFeatures(d),
        context_sampler=UniformMatrixSampler(d),
        theta_star=theta_star,
        tie_break=TieBreak.SMALLEST_INDEX,
        # each row of s has norm <= 3 sqrt(d) and |a| = 1
        feature_bound=3.0 * d,
    )


def make_tightness(d: int, seed: int = 0) -> Instance:
    """``d`` is the dimension of theta_{-1}; the parameter itself has d + 1 coordinates."""
    if d < 1:
        raise InstanceError(f"d must be >= 1, got {d}")
    theta_star = Parameter((1.0,) + (0.0,) * d, Slice.FIRST_FIXED)
    return Instance(
        name=f"tightness-d{d}-seed{seed}",
        action_space=SegmentOracle(),
        feature_map=TightnessFeatures(d),
        context_sampler=SphereSampler(d),
        theta_star=theta_star,
        tie_break=TieBreak.SMALLEST_INDEX,
        feature_bound=math.sqrt(10.0),
    )


def make_example_one(grid_points: int = 201) -> Instance:
    return Instance(
        name="example-one",
        action_space=SquareActionSpace(grid_points),
        feature_map=ExampleOneFeatures(),
        context_sampler=LabelSampler((0, 1)),
        theta_star=Parameter((1.0, -1.0, 2.0), Slice.FIRST_FIXED),
        tie_break=TieBreak.SMALLEST_INDEX,
        feature_bound=math.sqrt(3.0),
    )


class InstanceSpec(BaseModel):
    kind: Literal["synthetic-linear", "tightness", "example-one"]
    d: int = 5
    K: int = 15
    seed: int = 0
    grid_points: int = 201
    tie_tol_rel: float = TIE_TOL_REL

    @validator("d")
    def _check_d(cls, v: int) -> int:
        if v < 1:
            raise ValueError("d must be >= 1")
        return v

    @validator("K")
    def _check_k(cls, v: int, values: Dict) -> int:
        if values.get("kind") == "synthetic-linear" and v < 2:
            raise ValueError("K must be >= 2 for synthetic-linear")
        return v

    @validator("tie_tol_rel")
    def _check_tie_tol(cls, v: float) -> float:
        if v < 0.0:
            raise ValueError("tie_tol_rel must be non-negative")
        return v

    def build(self) -> Instance:
        if self.kind == "synthetic-linear":
            instance = make_synthetic(self.d, self.K, self.seed)
        elif self.kind == "tightness":
            instance = make_tightness(self.d, self.seed)
        else:
            instance = make_example_one(self.grid_points)
        return replace(instance, tie_tol_rel=self.tie_tol_rel)

    def to_kv(self) -> str:
        return "".join(f"{k}={v}\n" for k, v in self.dict().items())

    @classmethod
    def from_kv(cls, text: str) -> "InstanceSpec":
        return cls(**parse_kv(text))


def parse_kv(text: str) -> Dict[str, str]:
    """Parse ``key=value`` lines; blank lines and ``#`` comments are skipped."""
    out: Dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InstanceError(f"line {lineno}: expected key=value, got {raw!r}")
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out
