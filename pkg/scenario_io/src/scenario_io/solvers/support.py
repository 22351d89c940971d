"""Support-constraint counting for scenario programs."""
from __future__ import annotations

import logging
from typing import Literal

import numpy as np

from ..errors import SolverFailure
from .qp import solve_min_norm_qp
from .simplex import solve_lp
from .system import ConstraintSystem, SolveReport

logger = logging.getLogger(__name__)

SUPP_TOL = 1e-6


def _solve(system: ConstraintSystem, solver: str, c: np.ndarray | None) -> SolveReport:
    if solver == "lp":
        if c is None:
            raise ValueError("the lp solver needs a cost vector")
        return solve_lp(c, system)
    return solve_min_norm_qp(system)


def count_support_constraints(
    system: ConstraintSystem,
    solver: Literal["qp", "lp"] = "qp",
    c=None,
    supp_tol: float = SUPP_TOL,
) -> int:
    """Number of demonstration groups whose removal moves the optimizer by more than ``supp_tol``.

    Only groups owning an active row are re-solved; removing a non-binding
    group leaves a convex program with a unique optimizer unchanged.
    """
    cost = None if c is None else np.asarray(c, dtype=float)
    base = _solve(system, solver, cost)
    if not base.ok:
        raise SolverFailure(f"base solve is not optimal: {base.status.value}", base.status.value)
    candidates = sorted({int(system.origin_t[j]) for j in base.active_rows})
    count = 0
    for t in candidates:
        reduced = _solve(system.without_group(t), solver, cost)
        if not reduced.ok or np.linalg.norm(reduced.x - base.x) > supp_tol:
            count += 1
    logger.debug("support constraints: %d of %d candidate groups", count, len(candidates))
    return count
