"""Dense two-phase simplex with Bland's rule.

The primal problem min <c, theta> s.t. G theta <= h on a slice is solved
through its dual in standard form. After eliminating the slice
(theta = origin + N z) the primal reads min c_z^T z s.t. A z <= b with z free,
and its dual is

    min b^T y   s.t.   A^T y = -c_z,  y >= 0.

The dual tableau has one row per free coordinate, so scenario programs with
thousands of rows but few coordinates pivot on a tiny tableau. The primal
vertex is recovered from the rows that are basic in the dual.
"""
from __future__ import annotations

import logging
from typing import List, Tuple

import numpy as np

from ..errors import InstanceError
from .system import FEAS_TOL, ConstraintSystem, SolveReport, SolveStatus, to_parameter

logger = logging.getLogger(__name__)

PIVOT_TOL = 1e-10


def _pivot(T: np.ndarray, row: int, col: int) -> None:
    T[row, :] /= T[row, col]
    factors = T[:, col].copy()
    factors[row] = 0.0
    T -= np.outer(factors, T[row, :])


def _entering(reduced: np.ndarray, allowed: int, tol: float) -> int:
    """Bland: the lowest-index column with a negative reduced cost."""
    idx = np.flatnonzero(reduced[:allowed] < -tol)
    return int(idx[0]) if idx.size else -1


def _leaving(T: np.ndarray, col: int, basis: List[int]) -> int:
    """Minimum ratio row; ties go to the smallest basic variable index."""
    column = T[:-1, col]
    rhs = T[:-1, -1]
    rows = np.flatnonzero(column > PIVOT_TOL)
    if rows.size == 0:
        return -1
    ratios = rhs[rows] / column[rows]
    best = ratios.min()
    ties = rows[ratios <= best + 1e-12 * max(1.0, abs(best))]
    return int(min(ties, key=lambda r: basis[r]))


def _run(T: np.ndarray, basis: List[int], allowed: int, max_pivots: int, tol: float) -> Tuple[str, int]:
    for it in range(max_pivots):
        col = _entering(T[-1, :-1], allowed, tol)
        if col < 0:
            return "optimal", it
        row = _leaving(T, col, basis)
        if row < 0:
            return "unbounded", it
        _pivot(T, row, col)
        basis[row] = col
    return "max-iterations", max_pivots


def _solve_standard(
    M: np.ndarray, rhs: np.ndarray, cost: np.ndarray, max_pivots: int
) -> Tuple[str, np.ndarray, List[int], int, bool]:
    """min cost^T y s.t. M y = rhs, y >= 0. Returns (status, y, basis, pivots, degenerate)."""
    n, m = M.shape
    M = M.copy()
    rhs = rhs.copy()
    flip = rhs < 0
    M[flip] *= -1.0
    rhs[flip] *= -1.0

    # phase 1: artificial identity block appended after the m structural columns
    T = np.zeros((n + 1, m + n + 1))
    T[:n, :m] = M
    T[:n, m : m + n] = np.eye(n)
    T[:n, -1] = rhs
    T[-1, :m] = -M.sum(axis=0)
    T[-1, -1] = -rhs.sum()
    basis = list(range(m, m + n))
    scale = max(1.0, float(np.abs(rhs).max(initial=0.0)))
    status, pivots = _run(T, basis, m, max_pivots, PIVOT_TOL)
    if status == "max-iterations":
        return status, np.zeros(m), basis, pivots, False
    if -T[-1, -1] > FEAS_TOL * scale:
        return "infeasible", np.zeros(m), basis, pivots, False

    # drive artificials out of the basis; rows that cannot be cleared are redundant
    keep_rows = []
    for r in range(n):
        if basis[r] >= m:
            nz = np.flatnonzero(np.abs(T[r, :m]) > PIVOT_TOL)
            if nz.size == 0:
                continue
            _pivot(T, r, int(nz[0]))
            basis[r] = int(nz[0])
            pivots += 1
        keep_rows.append(r)
    T = np.vstack([T[keep_rows][:, list(range(m)) + [m + n]], np.zeros((1, m + 1))])
    basis = [basis[r] for r in keep_rows]

    # phase 2 reduced costs
    cb = cost[basis]
    T[-1, :m] = cost - cb @ T[:-1, :m]
    T[-1, -1] = -float(cb @ T[:-1, -1])
    tol = PIVOT_TOL * max(1.0, float(np.abs(cost).max(initial=0.0)))
    status, more = _run(T, basis, m, max_pivots, tol)
    pivots += more
    y = np.zeros(m)
    y[basis] = T[:-1, -1]
    nonbasic = np.setdiff1d(np.arange(m), basis)
    degenerate = bool(
        len(keep_rows) < n
        or np.any(T[:-1, -1] <= PIVOT_TOL)
        or (nonbasic.size and np.any(np.abs(T[-1, nonbasic]) <= tol))
    )
    return status, y, basis, pivots, degenerate


def is_feasible(A: np.ndarray, b: np.ndarray, max_pivots: int | None = None) -> bool:
    """Phase-1 style check of {z : A z <= b} through the Farkas alternative.

    The system is infeasible iff some y >= 0 has A^T y = 0 and b^T y < 0,
    i.e. iff min b^T y over that cone is unbounded.
    """
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    m, n = A.shape
    if m == 0:
        return True
    if n == 0:
        return bool(np.all(b >= -FEAS_TOL))
    limit = max_pivots or 50 * (m + n)
    status, _, _, _, _ = _solve_standard(A.T, np.zeros(n), b, limit)
    return status != "unbounded"


def solve_lp(c, system: ConstraintSystem, max_pivots: int | None = None) -> SolveReport:
    """Vertex minimizer of <c, theta> over the system's polytope."""
    c = np.asarray(c, dtype=float)
    if c.shape != (system.dim,):
        raise InstanceError(f"cost vector must have length {system.dim}")
    origin, N = system.basis()
    c_z = N.T @ c
    if N.shape[1] and not np.any(np.abs(c_z) > 0):
        raise InstanceError("cost vector is constant on the slice")
    A = system.G @ N
    b = system.h - system.G @ origin
    m, n = A.shape
    limit = max_pivots or 50 * (m + n + 1)

    if n == 0:
        status = SolveStatus.OPTIMAL if system.residual(origin) <= FEAS_TOL else SolveStatus.INFEASIBLE
        return _report(status, origin, system, c, 0, np.zeros(m), False)
    if m == 0:
        return SolveReport(SolveStatus.UNBOUNDED)

    status, y, basis, pivots, degenerate = _solve_standard(A.T, -c_z, b, limit)
    logger.debug("dual simplex finished: status=%s pivots=%d rows=%d", status, pivots, m)
    if status == "max-iterations":
        return SolveReport(SolveStatus.MAX_ITERATIONS, iterations=pivots)
    if status == "infeasible":
        # dual infeasible: primal is unbounded or empty
        feasible = is_feasible(A, b)
        return SolveReport(
            SolveStatus.UNBOUNDED if feasible else SolveStatus.INFEASIBLE, iterations=pivots
        )
    if status == "unbounded":
        return SolveReport(SolveStatus.INFEASIBLE, iterations=pivots)

    z = np.linalg.lstsq(A[basis], b[basis], rcond=None)[0]
    theta = origin + N @ z
    return _report(SolveStatus.OPTIMAL, theta, system, c, pivots, y, degenerate)


def _report(
    status: SolveStatus,
    theta: np.ndarray,
    system: ConstraintSystem,
    c: np.ndarray,
    pivots: int,
    y: np.ndarray,
    degenerate: bool,
) -> SolveReport:
    residual = system.residual(theta)
    if status is SolveStatus.OPTIMAL and residual > FEAS_TOL:
        logger.warning("simplex vertex violates rows by %.3g", residual)
    return SolveReport(
        status=status,
        x=theta,
        solution=to_parameter(theta, system) if status is SolveStatus.OPTIMAL else None,
        residual=residual,
        iterations=pivots,
        active_rows=system.active_rows(theta),
        multipliers=y,
        objective=float(c @ theta),
        degenerate=degenerate,
    )
