"""Domain types and the greedy-action abstraction.

Scores are linear in the parameter: F(s, a) = <theta, psi(s, a)>. Three action
spaces are supported: finite lists referenced by index, the closed-form
segment oracle of the tightness construction, and the [-1, 1]^2 square of the
two-state example (argmax sets reported on a grid).
"""
from __future__ import annotations

from dataclasses import dataclass, field
import enum
from typing import Any, Iterable, Protocol, Sequence, Tuple

import numpy as np
from scipy.linalg import null_space

from .errors import EmptyActionSpaceError, InfeasibleActionError, InstanceError

SLICE_TOL = 1e-9
TIE_TOL_REL = 1e-9


class Slice(str, enum.Enum):
    AFFINE_SUM = "affine-sum-to-one"
    FIRST_FIXED = "first-coordinate-fixed-to-one"
    UNCONSTRAINED = "unconstrained"

    def equations(self, dim: int) -> Tuple[np.ndarray, np.ndarray]:
        """Equality rows (A, b) with A theta = b; empty for the unconstrained slice."""
        if self is Slice.AFFINE_SUM:
            return np.ones((1, dim)), np.ones(1)
        if self is Slice.FIRST_FIXED:
            row = np.zeros((1, dim))
            row[0, 0] = 1.0
            return row, np.ones(1)
        return np.zeros((0, dim)), np.zeros(0)

    def basis(self, dim: int) -> Tuple[np.ndarray, np.ndarray]:
        """Affine parametrization theta = origin + N z of the slice.

        ``origin`` is the minimum-norm point of the slice and N has orthonormal
        columns spanning its tangent space.
        """
        if self is Slice.AFFINE_SUM:
            return np.full(dim, 1.0 / dim), null_space(np.ones((1, dim)))
        if self is Slice.FIRST_FIXED:
            origin = np.zeros(dim)
            origin[0] = 1.0
            return origin, np.eye(dim)[:, 1:]
        return np.zeros(dim), np.eye(dim)

    def project(self, vec: np.ndarray) -> np.ndarray:
        out = np.array(vec, dtype=float)
        if self is Slice.AFFINE_SUM:
            out += (1.0 - out.sum()) / out.size
        elif self is Slice.FIRST_FIXED:
            out[0] = 1.0
        return out


@dataclass(frozen=True)
class Parameter:
    coords: Tuple[float, ...]
    slice: Slice = Slice.UNCONSTRAINED

    def __post_init__(self) -> None:
        coords = tuple(float(c) for c in self.coords)
        object.__setattr__(self, "coords", coords)
        if not coords:
            raise InstanceError("parameter must have at least one coordinate")
        if not all(np.isfinite(coords)):
            raise InstanceError(f"parameter has non-finite coordinates: {coords}")
        if self.slice is not Slice.UNCONSTRAINED and not any(coords):
            raise InstanceError("the zero vector is not a valid sliced parameter")
        if self.slice is Slice.AFFINE_SUM and abs(sum(coords) - 1.0) > SLICE_TOL:
            raise InstanceError(f"coordinates must sum to one, got {sum(coords)!r}")
        if self.slice is Slice.FIRST_FIXED and coords[0] != 1.0:
            raise InstanceError(f"first coordinate must equal one, got {coords[0]!r}")

    @classmethod
    def from_vector(cls, vec: Iterable[float], slice: Slice, snap: bool = True) -> "Parameter":
        arr = np.asarray(list(vec) if not isinstance(vec, np.ndarray) else vec, dtype=float)
        if snap:
            arr = slice.project(arr)
        return cls(tuple(arr.tolist()), slice)

    @property
    def dim(self) -> int:
        return len(self.coords)

    @property
    def vector(self) -> np.ndarray:
        return np.asarray(self.coords, dtype=float)

    def scaled(self, alpha: float) -> "Parameter":
        """Positive rescaling; the result is unconstrained since slices are not cones."""
        return Parameter(tuple(alpha * c for c in self.coords), Slice.UNCONSTRAINED)


class ContextKind(str, enum.Enum):
    MATRIX = "matrix"
    SPHERE = "sphere"
    LABEL = "label"


@dataclass(frozen=True, eq=False)
class Context:
    kind: ContextKind
    payload: Any

    def __post_init__(self) -> None:
        if self.kind is ContextKind.LABEL:
            object.__setattr__(self, "payload", int(self.payload))
            return
        arr = np.array(self.payload, dtype=float)
        if not np.all(np.isfinite(arr)):
            raise InstanceError("context payload has non-finite entries")
        if self.kind is ContextKind.MATRIX and (arr.ndim != 2 or arr.shape[0] != arr.shape[1]):
            raise InstanceError(f"matrix context must be square, got shape {arr.shape}")
        if self.kind is ContextKind.SPHERE:
            if arr.ndim != 1 or abs(np.linalg.norm(arr) - 1.0) > SLICE_TOL:
                raise InstanceError("sphere context must be a unit vector")
        arr.setflags(write=False)
        object.__setattr__(self, "payload", arr)

    @property
    def array(self) -> np.ndarray:
        return np.atleast_1d(np.asarray(self.payload, dtype=float))


@dataclass(frozen=True)
class Action:
    """An action referenced by its position in the space's stored order and by value.

    Equality compares values only.
    """

    value: Tuple[float, ...]
    index: int | None = field(default=None, compare=False)

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.value, dtype=float)


@dataclass(frozen=True)
class GreedySet:
    """Argmax set of a score. ``is_interval`` marks a continuum between the listed endpoints."""

    actions: Tuple[Action, ...]
    is_interval: bool = False

    def __len__(self) -> int:
        return len(self.actions)

    def contains(self, action: Action, atol: float = 0.0) -> bool:
        if self.is_interval and len(action.value) == 1:
            lo = min(a.value[0] for a in self.actions)
            hi = max(a.value[0] for a in self.actions)
            return lo - atol <= action.value[0] <= hi + atol
        return action in self.actions

    @property
    def is_singleton(self) -> bool:
        return len(self.actions) == 1 and not self.is_interval


class FeatureMap(Protocol):
    dim: int

    def matrix(self, s: Context, actions: np.ndarray) -> np.ndarray:
        """Feature rows psi(s, a_k) for a stack of action values (K, m) -> (K, dim)."""
        ...


class ContextSampler(Protocol):
    def sample_many(self, rng: np.random.Generator, n: int) -> list[Context]:
        ...


class TieBreak(str, enum.Enum):
    SMALLEST_INDEX = "smallest-index"
    LEXICOGRAPHIC = "lexicographic"


def default_tie_tol(max_score: float, rel: float = TIE_TOL_REL) -> float:
    return rel * (1.0 + abs(max_score))


def _select(actions: Sequence[Action], scores: np.ndarray, tie_tol: float | None, rel: float) -> Tuple[Action, ...]:
    best = float(np.max(scores))
    tol = default_tie_tol(best, rel) if tie_tol is None else tie_tol
    return tuple(a for a, v in zip(actions, scores) if v >= best - tol)


class FiniteActionSpace:
    """Finite action list; actions are referenced by their row index."""

    kind = "finite"

    def __init__(self, actions: np.ndarray) -> None:
        arr = np.array(actions, dtype=float)
        if arr.ndim == 1:
            arr = arr[:, None]
        if arr.shape[0] == 0:
            raise EmptyActionSpaceError("finite action space has no actions")
        if arr.shape[0] < 2 or np.unique(arr, axis=0).shape[0] != arr.shape[0]:
            raise InstanceError("finite action space needs at least two distinct actions")
        arr.setflags(write=False)
        self.values = arr
        self.actions = tuple(Action(tuple(row.tolist()), i) for i, row in enumerate(arr))

    def __len__(self) -> int:
        return len(self.actions)

    def candidates(self, s: Context) -> Tuple[Action, ...]:
        return self.actions

    def contains(self, action: Action) -> bool:
        return action in self.actions

    def greedy(self, instance: "Instance", theta: np.ndarray, s: Context, tie_tol: float | None) -> GreedySet:
        scores = instance.feature_map.matrix(s, self.values) @ theta
        return GreedySet(_select(self.actions, scores, tie_tol, instance.tie_tol_rel))


class SegmentOracle:
    """The interval [-1, 1] with the closed-form tightness scores.

    Under psi(s, a) = (-2|a| + a, a s) the score is a(x - theta_0) for a >= 0
    and a(3 theta_0 + x) for a <= 0, with x = <s, theta_{-1}>. Both pieces are
    linear, so maxima of linear or piecewise-convex expressions sit on {-1, 0, 1}.
    """

    kind = "segment-oracle"

    def __init__(self) -> None:
        self.actions = (Action((-1.0,), 0), Action((0.0,), 1), Action((1.0,), 2))
        self.values = np.array([[-1.0], [0.0], [1.0]])

    def candidates(self, s: Context) -> Tuple[Action, ...]:
        return self.actions

    def contains(self, action: Action) -> bool:
        return len(action.value) == 1 and -1.0 <= action.value[0] <= 1.0

    @staticmethod
    def slopes(theta: np.ndarray, s: Context) -> Tuple[float, float]:
        """Return (p, n): score is a*p on [0, 1] and a*n on [-1, 0]."""
        x = float(np.dot(s.array, theta[1:]))
        return x - float(theta[0]), 3.0 * float(theta[0]) + x

    def greedy(self, instance: "Instance", theta: np.ndarray, s: Context, tie_tol: float | None) -> GreedySet:
        p, n = self.slopes(theta, s)
        neg, zero, pos = self.actions
        best = max(0.0, p, -n)
        tol = default_tie_tol(best, instance.tie_tol_rel) if tie_tol is None else tie_tol
        right_flat = abs(p) <= tol and best <= tol
        left_flat = abs(n) <= tol and best <= tol
        if right_flat and left_flat:
            return GreedySet((neg, zero, pos), is_interval=True)
        if right_flat:
            return GreedySet((zero, pos), is_interval=True)
        if left_flat:
            return GreedySet((neg, zero), is_interval=True)
        members = tuple(a for a, v in ((neg, -n), (zero, 0.0), (pos, p)) if v >= best - tol)
        return GreedySet(members)


class SquareActionSpace:
    """[-1, 1]^2 with argmax sets reported on a grid.

    Stored order runs a_1 ascending (outer) then a_2 ascending (inner), so the
    smallest-index tie break prefers the lowest a_1 and then the lowest a_2.
    """

    kind = "two-state-square"

    def __init__(self, grid_points: int = 201) -> None:
        if grid_points < 2:
            raise InstanceError("grid needs at least two points per axis")
        self.grid_points = grid_points
        axis = np.linspace(-1.0, 1.0, grid_points)
        a1, a2 = np.meshgrid(axis, axis, indexing="ij")
        self.values = np.column_stack([a1.ravel(), a2.ravel()])
        self.values.setflags(write=False)
        self._corners = tuple(
            Action((u, v), self._grid_index(u, v)) for u in (-1.0, 1.0) for v in (-1.0, 1.0)
        )

    def _grid_index(self, u: float, v: float) -> int:
        step = 2.0 / (self.grid_points - 1)
        return int(round((u + 1.0) / step)) * self.grid_points + int(round((v + 1.0) / step))

    def action_at(self, index: int) -> Action:
        return Action(tuple(self.values[index].tolist()), index)

    def candidates(self, s: Context) -> Tuple[Action, ...]:
        return self._corners

    def contains(self, action: Action) -> bool:
        return len(action.value) == 2 and all(-1.0 <= v <= 1.0 for v in action.value)

    def greedy(self, instance: "Instance", theta: np.ndarray, s: Context, tie_tol: float | None) -> GreedySet:
        scores = instance.feature_map.matrix(s, self.values) @ theta
        best = float(np.max(scores))
        tol = default_tie_tol(best, instance.tie_tol_rel) if tie_tol is None else tie_tol
        idx = np.flatnonzero(scores >= best - tol)
        return GreedySet(tuple(self.action_at(int(i)) for i in idx))


@dataclass(frozen=True, eq=False)
class Instance:
    name: str
    action_space: Any
    feature_map: Any
    context_sampler: Any
    theta_star: Parameter
    tie_break: TieBreak = TieBreak.SMALLEST_INDEX
    feature_bound: float = 1.0
    tie_tol_rel: float = TIE_TOL_REL

    @property
    def dim(self) -> int:
        return self.theta_star.dim

    @property
    def slice(self) -> Slice:
        return self.theta_star.slice

    def features(self, s: Context, action: Action) -> np.ndarray:
        return self.feature_map.matrix(s, np.asarray([action.value], dtype=float))[0]

    def expert_action(self, s: Context) -> Action:
        return tie_break(greedy_action_set(self, self.theta_star, s), self.tie_break)


@dataclass(frozen=True, eq=False)
class Demonstration:
    context: Context
    expert_action: Action


@dataclass(frozen=True, eq=False)
class Dataset:
    demos: Tuple[Demonstration, ...]
    seed: int | None = None
    instance_name: str = ""

    def __len__(self) -> int:
        return len(self.demos)

    def __iter__(self):
        return iter(self.demos)

    def prefix(self, n: int) -> "Dataset":
        return Dataset(self.demos[:n], self.seed, self.instance_name)

    def extended(self, demo: Demonstration) -> "Dataset":
        return Dataset(self.demos + (demo,), self.seed, self.instance_name)


def theta_vector(theta: Parameter | np.ndarray) -> np.ndarray:
    vec = theta.vector if isinstance(theta, Parameter) else np.asarray(theta, dtype=float)
    if not np.all(np.isfinite(vec)):
        raise InstanceError("theta must be finite")
    return vec


def greedy_action_set(
    instance: Instance, theta: Parameter | np.ndarray, s: Context, tie_tol: float | None = None
) -> GreedySet:
    """All actions whose score is within ``tie_tol`` of the best score at ``s``.

    ``tie_tol`` defaults to instance.tie_tol_rel * (1 + |max score|).
    """
    if tie_tol is not None and tie_tol < 0:
        raise InstanceError("tie_tol must be non-negative")
    space = instance.action_space
    if getattr(space, "values", None) is not None and len(space.values) == 0:
        raise EmptyActionSpaceError("action space is empty")
    return space.greedy(instance, theta_vector(theta), s, tie_tol)


def tie_break(action_set: GreedySet | Sequence[Action], rule: TieBreak | str = TieBreak.SMALLEST_INDEX) -> Action:
    actions = action_set.actions if isinstance(action_set, GreedySet) else tuple(action_set)
    if not actions:
        raise EmptyActionSpaceError("cannot break ties in an empty action set")
    if TieBreak(rule) is TieBreak.LEXICOGRAPHIC:
        return min(actions, key=lambda a: a.value)
    return min(actions, key=lambda a: (a.index is None, a.index if a.index is not None else 0, a.value))


def delta_features(instance: Instance, s: Context, a: Action, a_ref: Action) -> np.ndarray:
    """psi(s, a) - psi(s, a_ref)."""
    space = instance.action_space
    for act in (a, a_ref):
        if not space.contains(act):
            raise InfeasibleActionError(f"action {act.value} is not in A(s)")
    rows = instance.feature_map.matrix(s, np.asarray([a.value, a_ref.value], dtype=float))
    return rows[0] - rows[1]


def derive_seed(seed: int, *keys: int) -> int:
    """Independent child seed for (seed, keys...) via numpy's SeedSequence spawning."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in keys))
    return int(ss.generate_state(1, dtype=np.uint32)[0])


def draw_contexts(instance: Instance, n: int, seed: int) -> list[Context]:
    return instance.context_sampler.sample_many(np.random.default_rng(seed), n)


def draw_dataset(instance: Instance, T: int, seed: int) -> Dataset:
    """T demonstrations labelled by the tie-broken expert action."""
    contexts = draw_contexts(instance, T, seed)
    demos = tuple(Demonstration(s, instance.expert_action(s)) for s in contexts)
    return Dataset(demos, seed, instance.name)
