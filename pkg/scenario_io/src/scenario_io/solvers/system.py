"""Constraint systems <g_j, theta> <= h_j on an affine slice, and solver reports."""
from __future__ import annotations

from dataclasses import dataclass, field
import enum
from typing import Optional, Tuple

import numpy as np
from scipy.linalg import null_space

from ..core import Parameter, Slice
from ..errors import InstanceError

FEAS_TOL = 1e-7
ACT_TOL = 1e-7


class SolveStatus(str, enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    MAX_ITERATIONS = "max-iterations"


@dataclass(frozen=True, eq=False)
class ConstraintSystem:
    """Linear inequalities plus equality rows describing the slice.

    ``origin_t`` and ``origin_action`` give each row's provenance: the
    demonstration index and the competitor action id. Rows sharing an
    ``origin_t`` form one scenario group. ``A_eq``/``b_eq`` override the
    slice equations for augmented systems (the slack program).
    """

    G: np.ndarray
    h: np.ndarray
    slice: Slice = Slice.UNCONSTRAINED
    origin_t: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))
    origin_action: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))
    A_eq: Optional[np.ndarray] = None
    b_eq: Optional[np.ndarray] = None

    def __post_init__(self) -> None:
        G = np.array(self.G, dtype=float)
        h = np.array(self.h, dtype=float).reshape(-1)
        if G.ndim != 2 or G.shape[0] != h.shape[0]:
            raise InstanceError(f"row shapes disagree: G {G.shape}, h {h.shape}")
        if not (np.all(np.isfinite(G)) and np.all(np.isfinite(h))):
            raise InstanceError("constraint rows must be finite")
        m = G.shape[0]
        origin_t = np.array(self.origin_t, dtype=int).reshape(-1)
        origin_action = np.array(self.origin_action, dtype=int).reshape(-1)
        if origin_t.size == 0 and m:
            origin_t = np.arange(m)
        if origin_action.size == 0 and m:
            origin_action = np.zeros(m, dtype=int)
        if origin_t.size != m or origin_action.size != m:
            raise InstanceError("one provenance entry per row is required")
        for name, value in (("G", G), ("h", h), ("origin_t", origin_t), ("origin_action", origin_action)):
            value.setflags(write=False)
            object.__setattr__(self, name, value)

    @classmethod
    def empty(cls, dim: int, slice: Slice = Slice.UNCONSTRAINED) -> "ConstraintSystem":
        return cls(np.zeros((0, dim)), np.zeros(0), slice)

    @property
    def dim(self) -> int:
        return self.G.shape[1]

    @property
    def n_rows(self) -> int:
        return self.G.shape[0]

    def groups(self) -> np.ndarray:
        return np.unique(self.origin_t)

    def equations(self) -> Tuple[np.ndarray, np.ndarray]:
        if self.A_eq is not None:
            return np.asarray(self.A_eq, dtype=float), np.asarray(self.b_eq, dtype=float)
        return self.slice.equations(self.dim)

    def basis(self) -> Tuple[np.ndarray, np.ndarray]:
        """theta = origin + N z with origin the min-norm slice point and N orthonormal."""
        if self.A_eq is None:
            return self.slice.basis(self.dim)
        A, b = self.equations()
        if A.shape[0] == 0:
            return np.zeros(self.dim), np.eye(self.dim)
        origin = np.linalg.lstsq(A, b, rcond=None)[0]
        return origin, null_space(A)

    def without_group(self, t: int) -> "ConstraintSystem":
        keep = self.origin_t != t
        return ConstraintSystem(
            self.G[keep],
            self.h[keep],
            self.slice,
            self.origin_t[keep],
            self.origin_action[keep],
            self.A_eq,
            self.b_eq,
        )

    def violations(self, theta: np.ndarray) -> np.ndarray:
        return self.G @ theta - self.h

    def residual(self, theta: np.ndarray) -> float:
        """Largest violation over the inequality rows and the slice equations."""
        worst = 0.0
        if self.n_rows:
            worst = max(worst, float(np.max(self.violations(theta))))
        A, b = self.equations()
        if A.shape[0]:
            worst = max(worst, float(np.max(np.abs(A @ theta - b))))
        return worst

    def active_rows(self, theta: np.ndarray, act_tol: float = ACT_TOL) -> Tuple[int, ...]:
        if not self.n_rows:
            return ()
        scale = np.maximum(1.0, np.linalg.norm(self.G, axis=1))
        gap = np.abs(self.violations(theta))
        return tuple(int(j) for j in np.flatnonzero(gap <= act_tol * scale))


@dataclass(frozen=True, eq=False)
class SolveReport:
    status: SolveStatus
    x: Optional[np.ndarray] = None
    solution: Optional[Parameter] = None
    residual: float = float("inf")
    iterations: int = 0
    active_rows: Tuple[int, ...] = ()
    multipliers: Optional[np.ndarray] = None
    slice_multipliers: Optional[np.ndarray] = None
    objective: float = float("nan")
    degenerate: bool = False

    @property
    def ok(self) -> bool:
        return self.status is SolveStatus.OPTIMAL


def to_parameter(x: np.ndarray, system: ConstraintSystem) -> Optional[Parameter]:
    """Wrap a solver vector as a Parameter on the system's slice, or None for augmented systems."""
    if system.A_eq is not None:
        return None
    if system.slice is not Slice.UNCONSTRAINED and not np.any(x):
        return None
    return Parameter.from_vector(x, system.slice, snap=True)
