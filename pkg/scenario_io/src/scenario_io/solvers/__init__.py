"""Small dense deterministic solvers for scenario programs."""
from .qp import solve_min_norm_qp
from .simplex import is_feasible, solve_lp
from .support import count_support_constraints
from .system import ConstraintSystem, SolveReport, SolveStatus

__all__ = [
    "ConstraintSystem",
    "SolveReport",
    "SolveStatus",
    "count_support_constraints",
    "is_feasible",
    "solve_lp",
    "solve_min_norm_qp",
]
