"""Minimum-norm QP over linear inequalities and an affine slice.

The slice is eliminated first (theta = origin + N z with origin orthogonal to
range(N)), which leaves

    min 1/2 ||z||^2   s.t.   A z <= b,   A = G N,   b = h - G origin.

It is solved by a dual active-set method. Starting from the unconstrained
minimizer z = 0, the most violated row is added to the active set. While it is
being added, rows whose multiplier would turn negative are dropped, so the
iterate always minimizes ||z|| over the equalities of the active set with
nonnegative multipliers. The active normals stay linearly independent, which
keeps every KKT solve small (at most dim(z) rows) and exact.
"""
from __future__ import annotations

import logging
from typing import List, Tuple

import numpy as np

from .system import FEAS_TOL, ConstraintSystem, SolveReport, SolveStatus, to_parameter

logger = logging.getLogger(__name__)

ADD_TOL = 1e-11
DEP_TOL = 1e-10
RATIO_TOL = 1e-12


def _step(normals: np.ndarray, normal: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Split ``normal`` as normals.T @ r + direction with direction orthogonal to every row of ``normals``."""
    if normals.shape[0] == 0:
        return normal.copy(), np.zeros(0)
    r = np.linalg.lstsq(normals.T, normal, rcond=None)[0]
    return normal - normals.T @ r, r


def _refine(A_act: np.ndarray, b_act: np.ndarray) -> Tuple[np.ndarray, np.ndarray] | None:
    """Exact (z, mu) with every active row tight, or None if a multiplier comes out negative."""
    if A_act.shape[0] == 0:
        return None
    try:
        mu = np.linalg.solve(A_act @ A_act.T, -b_act)
    except np.linalg.LinAlgError:
        return None
    if np.any(mu < -1e-12 * max(1.0, float(np.abs(mu).max()))):
        return None
    mu = np.maximum(mu, 0.0)
    return -A_act.T @ mu, mu


def _dual_active_set(
    A: np.ndarray, b: np.ndarray, max_steps: int
) -> Tuple[SolveStatus, np.ndarray, List[int], np.ndarray, int]:
    """Rows are a_j^T z <= b_j; multipliers u satisfy z = -sum_j u_j a_j on the active set."""
    m, n = A.shape
    norms = np.sqrt(np.sum(A * A, axis=1))
    flat = norms <= 1e-12
    scale = np.maximum(1.0, norms)
    z = np.zeros(n)
    active: List[int] = []
    u = np.zeros(0)
    steps = 0
    while True:
        if m == 0:
            return SolveStatus.OPTIMAL, z, active, u, steps
        viol = (A @ z - b) / scale
        viol[flat] = -np.inf
        if active:
            viol[active] = -np.inf
        p = int(np.argmax(viol))
        if viol[p] <= ADD_TOL * max(1.0, float(np.linalg.norm(z))):
            return SolveStatus.OPTIMAL, z, active, u, steps
        normal = -A[p]
        u_plus = np.append(u, 0.0)
        while True:
            steps += 1
            if steps > max_steps:
                return SolveStatus.MAX_ITERATIONS, z, active, u_plus[:-1], steps
            direction, r = _step(-A[active], normal)
            drop = np.flatnonzero(r > RATIO_TOL)
            t_drop, k = np.inf, -1
            if drop.size:
                ratios = u_plus[drop] / r[drop]
                i = int(np.argmin(ratios))
                t_drop, k = float(ratios[i]), int(drop[i])
            slack = b[p] - A[p] @ z
            dd = float(direction @ direction)
            t_add = np.inf if np.sqrt(dd) <= DEP_TOL * norms[p] else -slack / dd
            t = min(t_drop, t_add)
            if not np.isfinite(t):
                return SolveStatus.INFEASIBLE, z, active, u, steps
            if np.isfinite(t_add):
                z = z + t * direction
            u_plus[:-1] -= t * r
            u_plus[-1] += t
            if t_add <= t_drop:
                active.append(p)
                u = u_plus
                break
            del active[k]
            u_plus = np.delete(u_plus, k)


def solve_min_norm_qp(
    system: ConstraintSystem, feas_tol: float = FEAS_TOL, max_steps: int | None = None
) -> SolveReport:
    """Unique minimizer of ||theta||^2 over the rows and the slice."""
    origin, N = system.basis()
    A = system.G @ N
    b = system.h - system.G @ origin
    m, n = A.shape
    flat = np.sqrt(np.sum(A * A, axis=1)) <= 1e-12
    if np.any(b[flat] < -feas_tol):
        return SolveReport(SolveStatus.INFEASIBLE)
    limit = max_steps if max_steps is not None else 50 * (m + n) + 100
    status, z, active, u, steps = _dual_active_set(A, b, limit)
    if status is not SolveStatus.OPTIMAL:
        logger.debug("qp stopped after %d steps: %s", steps, status.value)
        return SolveReport(status, iterations=steps)

    theta = origin + N @ z
    residual = system.residual(theta)
    refined = _refine(A[active], b[active])
    if refined is not None:
        theta_r = origin + N @ refined[0]
        residual_r = system.residual(theta_r)
        if residual_r <= max(residual, feas_tol):
            theta, residual = theta_r, residual_r
            u = refined[1]
    mu = np.zeros(m)
    if active:
        mu[active] = u
    status = SolveStatus.OPTIMAL if residual <= feas_tol else SolveStatus.INFEASIBLE
    logger.debug("qp solved: rows=%d active=%d steps=%d residual=%.2e", m, len(active), steps, residual)
    return SolveReport(
        status=status,
        x=theta,
        solution=to_parameter(theta, system) if status is SolveStatus.OPTIMAL else None,
        residual=residual,
        iterations=steps,
        active_rows=system.active_rows(theta),
        multipliers=mu,
        slice_multipliers=_slice_multipliers(system, theta, mu),
        objective=float(theta @ theta),
    )


def _slice_multipliers(system: ConstraintSystem, theta: np.ndarray, mu: np.ndarray) -> np.ndarray:
    """nu solving theta + G^T mu + A_eq^T nu = 0 in the least-squares sense."""
    A_eq, _ = system.equations()
    if A_eq.shape[0] == 0:
        return np.zeros(0)
    # objective gradient is 2 theta; multipliers are reported for the halved objective
    target = -(theta + system.G.T @ mu)
    return np.linalg.lstsq(A_eq.T, target, rcond=None)[0]


def kkt_residual(system: ConstraintSystem, report: SolveReport) -> Tuple[float, float, float]:
    """(stationarity, min multiplier, complementary slackness) of an optimal report."""
    theta = report.x
    mu = report.multipliers
    A_eq, _ = system.equations()
    grad = theta + system.G.T @ mu
    if A_eq.shape[0]:
        grad = grad + A_eq.T @ report.slice_multipliers
    comp = np.abs(mu * system.violations(theta)) if mu.size else np.zeros(0)
    return (
        float(np.linalg.norm(grad)),
        float(mu.min(initial=0.0)),
        float(comp.max(initial=0.0)),
    )
