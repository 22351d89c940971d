import numpy as np
import pytest

from scenario_io.core import Context, ContextKind, Dataset, Demonstration, Slice, draw_dataset
from scenario_io.errors import InstanceError, SolverFailure
from scenario_io.estimators import assemble_constraints, default_cost
from scenario_io.instances import make_synthetic, make_tightness
from scenario_io.solvers import (
    ConstraintSystem,
    SolveStatus,
    count_support_constraints,
    is_feasible,
    solve_lp,
    solve_min_norm_qp,
)
from scenario_io.solvers.qp import kkt_residual


def _half_plane() -> ConstraintSystem:
    # theta_1 <= -1 on the sum-to-one slice in two dimensions
    return ConstraintSystem(np.array([[1.0, 0.0]]), np.array([-1.0]), Slice.AFFINE_SUM)


def _tightness_system(signs=(1.0, -1.0)) -> ConstraintSystem:
    inst = make_tightness(1)
    demos = []
    for sign in signs:
        s = Context(ContextKind.SPHERE, [sign])
        demos.append(Demonstration(s, inst.expert_action(s)))
    return assemble_constraints(inst, Dataset(tuple(demos)))


def test_qp_projects_onto_half_plane() -> None:
    report = solve_min_norm_qp(_half_plane())
    assert report.status is SolveStatus.OPTIMAL
    assert np.allclose(report.x, [-1.0, 2.0], atol=1e-9)
    assert report.solution.coords == pytest.approx((-1.0, 2.0))
    assert report.active_rows == (0,)


def test_qp_kkt_conditions_hold() -> None:
    inst = make_synthetic(4, seed=1)
    system = assemble_constraints(inst, draw_dataset(inst, 25, seed=2))
    report = solve_min_norm_qp(system)
    assert report.ok
    stationarity, min_mu, complementarity = kkt_residual(system, report)
    assert stationarity <= 1e-6
    assert min_mu >= 0.0
    assert complementarity <= 1e-6
    assert report.residual <= 1e-7


def test_qp_without_rows_returns_slice_origin() -> None:
    report = solve_min_norm_qp(ConstraintSystem.empty(4, Slice.AFFINE_SUM))
    assert report.ok
    assert np.allclose(report.x, 0.25)


def test_qp_detects_infeasible_system() -> None:
    system = ConstraintSystem(np.array([[1.0], [-1.0]]), np.array([-1.0, -1.0]))
    assert solve_min_norm_qp(system).status is SolveStatus.INFEASIBLE


def test_lp_tightness_vertex() -> None:
    system = _tightness_system()
    report = solve_lp(default_cost(make_tightness(1)), system)
    assert report.status is SolveStatus.OPTIMAL
    assert np.allclose(report.x, [1.0, -1.0])
    assert report.objective == pytest.approx(-1.0)
    assert report.multipliers.min() >= 0.0


def test_lp_with_one_sided_data_is_bounded_by_the_wide_row() -> None:
    report = solve_lp(np.array([0.0, 1.0]), _tightness_system(signs=(1.0,)))
    assert report.ok
    assert np.allclose(report.x, [1.0, -3.0])


def test_lp_reports_unbounded_and_infeasible() -> None:
    open_ray = ConstraintSystem(np.array([[0.0, 1.0]]), np.array([1.0]), Slice.FIRST_FIXED)
    assert solve_lp(np.array([0.0, 1.0]), open_ray).status is SolveStatus.UNBOUNDED
    empty = ConstraintSystem(np.array([[0.0, 1.0], [0.0, -1.0]]), np.array([-1.0, -1.0]), Slice.FIRST_FIXED)
    assert solve_lp(np.array([0.0, 1.0]), empty).status is SolveStatus.INFEASIBLE


def test_lp_rejects_cost_constant_on_slice() -> None:
    with pytest.raises(InstanceError):
        solve_lp(np.array([1.0, 0.0]), _tightness_system())


def test_lp_matches_qp_feasibility_on_synthetic_rows() -> None:
    inst = make_synthetic(3, seed=4)
    system = assemble_constraints(inst, draw_dataset(inst, 60, seed=5))
    report = solve_lp(np.array([1.0, 0.0, 0.0]), system)
    assert report.ok
    assert report.residual <= 1e-7


def test_is_feasible() -> None:
    assert is_feasible(np.array([[1.0], [-1.0]]), np.array([1.0, 1.0]))
    assert not is_feasible(np.array([[1.0], [-1.0]]), np.array([-1.0, -1.0]))
    assert is_feasible(np.zeros((0, 2)), np.zeros(0))


def test_support_constraints_counts_binding_groups() -> None:
    G = np.array([[1.0, 0.0], [1.0, 0.0]])
    h = np.array([-1.0, 5.0])
    system = ConstraintSystem(G, h, Slice.AFFINE_SUM, origin_t=np.array([0, 1]), origin_action=np.array([0, 0]))
    assert count_support_constraints(system) == 1


def test_support_constraints_bounded_by_free_dimension() -> None:
    inst = make_synthetic(3, seed=7)
    system = assemble_constraints(inst, draw_dataset(inst, 30, seed=8))
    assert count_support_constraints(system, solver="qp") <= inst.dim - 1
    assert count_support_constraints(_tightness_system(), solver="lp", c=np.array([0.0, 1.0])) == 1


def test_support_constraints_needs_optimal_base() -> None:
    system = ConstraintSystem(np.array([[1.0], [-1.0]]), np.array([-1.0, -1.0]))
    with pytest.raises(SolverFailure):
        count_support_constraints(system)


def random_feasible_system(rng: np.random.Generator) -> ConstraintSystem:
    n = int(rng.integers(1, 11))
    m = int(rng.integers(1, 501))
    G = rng.standard_normal((m, n))
    anchor = 3.0 * rng.standard_normal(n)
    return ConstraintSystem(G, G @ anchor + rng.uniform(0.0, 1.0, m))


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_qp_kkt_on_random_feasible_systems(seed: int) -> None:
    rng = np.random.default_rng(seed)
    for _ in range(10):
        system = random_feasible_system(rng)
        report = solve_min_norm_qp(system)
        assert report.ok
        stationarity, min_mu, complementarity = kkt_residual(system, report)
        assert stationarity <= 1e-5
        assert min_mu >= -1e-5
        assert complementarity <= 1e-5


def test_qp_drops_a_row_that_stops_binding() -> None:
    # z_1 >= 1 is added first; 0.1 (z_1 + z_2) >= 0.4 then pushes it out of the active set
    system = ConstraintSystem(np.array([[-1.0, 0.0], [-0.1, -0.1]]), np.array([-1.0, -0.4]))
    report = solve_min_norm_qp(system)
    assert report.ok
    assert np.allclose(report.x, [2.0, 2.0], atol=1e-10)
    assert report.active_rows == (1,)
    assert np.allclose(report.multipliers, [0.0, 20.0])


def test_qp_respects_step_limit() -> None:
    system = ConstraintSystem(-np.eye(2), -np.ones(2))
    assert solve_min_norm_qp(system, max_steps=1).status is SolveStatus.MAX_ITERATIONS
    assert np.allclose(solve_min_norm_qp(system).x, [1.0, 1.0])
