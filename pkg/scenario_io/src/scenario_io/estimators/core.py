"""Scenario-program estimators fitted from demonstrations.

``sub``       minimum-norm (or linear-objective) point of the consistency set.
``incenter``  the same program on margin rows <theta, delta> <= -||delta||.
``polyak``    Polyak subgradient steps on f_T(theta) = max_t gap_t(theta).
``slack``     min ||theta||^2 + gamma^2 with every gap bounded by gamma.
"""
from __future__ import annotations

from dataclasses import dataclass, field
import logging
from typing import Optional, Tuple

import numpy as np

from ..core import Dataset, Instance, Parameter, SegmentOracle, Slice
from ..errors import InstanceError, SolverFailure, UnsupportedOracleError, ZeroSubgradientError
from ..solvers import ConstraintSystem, SolveReport, SolveStatus, solve_lp, solve_min_norm_qp
from .registry import EstimatorRegistry

logger = logging.getLogger(__name__)

KINDS = ("sub", "incenter", "polyak", "slack")
ALIASES = {"suboptimality": "sub", "pol": "polyak", "in": "incenter"}
POLYAK_INIT_RADIUS = 0.1


@dataclass(frozen=True)
class EstimatorConfig:
    kind: str = "sub"
    objective: str = "min-norm"
    cost: Optional[Tuple[float, ...]] = None
    polyak_iters: Optional[int] = None
    polyak_init: Optional[Parameter] = None
    seed: int = 0
    incenter_slice: bool = False

    def __post_init__(self) -> None:
        kind = ALIASES.get(self.kind, self.kind)
        object.__setattr__(self, "kind", kind)
        if kind not in KINDS:
            raise InstanceError(f"unknown estimator {self.kind!r}; expected one of {KINDS}")
        if self.objective not in ("min-norm", "linear"):
            raise InstanceError(f"unknown objective {self.objective!r}")
        if self.polyak_iters is not None and self.polyak_iters < 0:
            raise InstanceError("polyak_iters must be non-negative")
        if self.polyak_init is not None and not any(self.polyak_init.coords):
            raise InstanceError("polyak_init must be away from the origin")


@dataclass(frozen=True, eq=False)
class EstimatorResult:
    theta: Parameter
    kind: str
    status: SolveStatus = SolveStatus.OPTIMAL
    residual: float = 0.0
    iterations: int = 0
    active_rows: Tuple[int, ...] = ()
    slack: Optional[float] = None
    trace: Tuple[float, ...] = field(default=())

    @property
    def best_so_far(self) -> np.ndarray:
        return np.minimum.accumulate(np.asarray(self.trace)) if self.trace else np.zeros(0)


def assemble_constraints(instance: Instance, dataset: Dataset, mode: str = "suboptimality") -> ConstraintSystem:
    """One row per (demonstration, competitor action).

    Suboptimality rows are <delta, theta> <= 0, incenter rows
    <delta, theta> <= -||delta||. On the segment oracle with expert action 0
    the two strip rows (0, s) <= 1 and (0, -s) <= 3 are emitted instead.
    """
    if len(dataset) == 0:
        raise InstanceError("cannot assemble constraints from an empty dataset")
    if mode not in ("suboptimality", "incenter"):
        raise InstanceError(f"unknown constraint mode {mode!r}")
    space = instance.action_space
    if mode == "incenter" and isinstance(space, SegmentOracle):
        raise UnsupportedOracleError("incenter rows are infinite on the continuous segment oracle")

    G_parts, h_parts, t_parts, a_parts = [], [], [], []
    for t, demo in enumerate(dataset):
        s, a_star = demo.context, demo.expert_action
        if isinstance(space, SegmentOracle) and a_star.value == (0.0,):
            x_row = np.concatenate([[0.0], s.array])
            G_parts.append(np.vstack([x_row, -x_row]))
            h_parts.append(np.array([1.0, 3.0]))
            a_parts.append(np.array([2, 0]))
            t_parts.append(np.full(2, t))
            continue
        candidates = [c for c in space.candidates(s) if c != a_star]
        stack = np.asarray([c.value for c in candidates] + [a_star.value], dtype=float)
        F = instance.feature_map.matrix(s, stack)
        deltas = F[:-1] - F[-1]
        G_parts.append(deltas)
        if mode == "incenter":
            h_parts.append(-np.linalg.norm(deltas, axis=1))
        else:
            h_parts.append(np.zeros(len(candidates)))
        a_parts.append(np.array([c.index if c.index is not None else k for k, c in enumerate(candidates)]))
        t_parts.append(np.full(len(candidates), t))

    if mode == "incenter":
        slice_ = Slice.UNCONSTRAINED
    else:
        slice_ = instance.slice
    return ConstraintSystem(
        np.vstack(G_parts),
        np.concatenate(h_parts),
        slice_,
        np.concatenate(t_parts),
        np.concatenate(a_parts),
    )


def _with_slice(system: ConstraintSystem, slice_: Slice) -> ConstraintSystem:
    return ConstraintSystem(system.G, system.h, slice_, system.origin_t, system.origin_action)


def default_cost(instance: Instance) -> np.ndarray:
    """Unit cost on the first free coordinate of the instance slice."""
    c = np.zeros(instance.dim)
    c[1 if instance.slice is Slice.FIRST_FIXED else 0] = 1.0
    return c


def _solve(instance: Instance, system: ConstraintSystem, config: EstimatorConfig) -> SolveReport:
    if config.objective == "linear":
        cost = np.asarray(config.cost, dtype=float) if config.cost is not None else default_cost(instance)
        return solve_lp(cost, system)
    return solve_min_norm_qp(system)


def _result_from_report(report: SolveReport, kind: str, slice_: Slice) -> EstimatorResult:
    if not report.ok:
        raise SolverFailure(f"{kind} program ended with status {report.status.value}", report.status.value)
    theta = report.solution or Parameter.from_vector(report.x, slice_)
    return EstimatorResult(
        theta=theta,
        kind=kind,
        status=report.status,
        residual=report.residual,
        iterations=report.iterations,
        active_rows=report.active_rows,
    )


def fit_suboptimality(instance: Instance, dataset: Dataset, config: EstimatorConfig) -> EstimatorResult:
    system = assemble_constraints(instance, dataset, "suboptimality")
    return _result_from_report(_solve(instance, system, config), "sub", system.slice)


def fit_incenter(instance: Instance, dataset: Dataset, config: EstimatorConfig) -> EstimatorResult:
    system = assemble_constraints(instance, dataset, "incenter")
    if config.incenter_slice:
        system = _with_slice(system, instance.slice)
    return _result_from_report(_solve(instance, system, config), "incenter", system.slice)


def default_polyak_init(instance: Instance, seed: int = 0) -> Parameter:
    """Uniform slice point plus a seeded tangent perturbation of norm 0.1."""
    slice_ = instance.slice
    origin, N = slice_.basis(instance.dim)
    if slice_ is Slice.UNCONSTRAINED:
        origin = np.full(instance.dim, 1.0 / instance.dim)
    rng = np.random.default_rng(seed)
    vec = origin.copy()
    if N.shape[1]:
        u = rng.standard_normal(N.shape[1])
        vec = vec + POLYAK_INIT_RADIUS * (N @ (u / np.linalg.norm(u)))
    return Parameter.from_vector(vec, slice_)


def polyak_step(theta: np.ndarray, g: np.ndarray, f: float) -> np.ndarray:
    """theta - f / ||g||^2 * g."""
    norm2 = float(g @ g)
    if norm2 == 0.0:
        raise ZeroSubgradientError("most violated row has a zero feature difference")
    return theta - (f / norm2) * g


def max_violation(system: ConstraintSystem, theta: np.ndarray) -> Tuple[float, int]:
    """(f_T(theta), index of the first most violated row); f_T is clipped at zero."""
    viol = system.violations(theta)
    j = int(np.argmax(viol))
    return max(0.0, float(viol[j])), j


def fit_polyak(instance: Instance, dataset: Dataset, config: EstimatorConfig) -> EstimatorResult:
    system = assemble_constraints(instance, dataset, "suboptimality")
    init = config.polyak_init or default_polyak_init(instance, config.seed)
    if init.dim != instance.dim:
        raise InstanceError(f"polyak_init has dimension {init.dim}, expected {instance.dim}")
    n_iters = len(dataset) if config.polyak_iters is None else config.polyak_iters
    slice_ = instance.slice
    theta = init.vector
    trace = []
    it = 0
    f, j = max_violation(system, theta)
    trace.append(f)
    while it < n_iters and f > 0.0:
        theta = slice_.project(polyak_step(theta, system.G[j], f))
        it += 1
        f, j = max_violation(system, theta)
        trace.append(f)
    logger.debug("polyak: %d steps, final f_T=%.3e", it, f)
    return EstimatorResult(
        theta=Parameter.from_vector(theta, slice_),
        kind="polyak",
        status=SolveStatus.OPTIMAL if f == 0.0 else SolveStatus.MAX_ITERATIONS,
        residual=f,
        iterations=it,
        active_rows=system.active_rows(theta),
        slack=f,
        trace=tuple(trace),
    )


def slack_system(system: ConstraintSystem) -> ConstraintSystem:
    """Augment (theta, gamma): every row gains -gamma and gamma >= 0 is appended."""
    m, n = system.G.shape
    G = np.zeros((m + 1, n + 1))
    G[:m, :n] = system.G
    G[:m, n] = -1.0
    G[m, n] = -1.0
    h = np.concatenate([system.h, [0.0]])
    A, b = system.equations()
    A_aug = np.hstack([A, np.zeros((A.shape[0], 1))])
    return ConstraintSystem(
        G,
        h,
        Slice.UNCONSTRAINED,
        np.concatenate([system.origin_t, [-1]]),
        np.concatenate([system.origin_action, [-1]]),
        A_eq=A_aug,
        b_eq=b,
    )


def fit_slack(instance: Instance, dataset: Dataset, config: EstimatorConfig) -> EstimatorResult:
    system = slack_system(assemble_constraints(instance, dataset, "suboptimality"))
    report = solve_min_norm_qp(system)
    if not report.ok:
        raise SolverFailure(f"slack program ended with status {report.status.value}", report.status.value)
    theta, gamma = report.x[:-1], float(report.x[-1])
    return EstimatorResult(
        theta=Parameter.from_vector(theta, instance.slice),
        kind="slack",
        status=report.status,
        residual=report.residual,
        iterations=report.iterations,
        active_rows=report.active_rows,
        slack=gamma,
    )


DEFAULT_ESTIMATORS = {
    "sub": fit_suboptimality,
    "incenter": fit_incenter,
    "polyak": fit_polyak,
    "slack": fit_slack,
}

_registry = EstimatorRegistry()
for _name, _fn in DEFAULT_ESTIMATORS.items():
    _registry.register(_name, _fn)


def fit(instance: Instance, dataset: Dataset, config: EstimatorConfig) -> EstimatorResult:
    return _registry.apply(config.kind, instance, dataset, config)
