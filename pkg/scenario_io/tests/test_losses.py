import math

import numpy as np
import pytest

from scenario_io.core import (
    Action,
    Context,
    ContextKind,
    Dataset,
    Demonstration,
    Parameter,
    SegmentOracle,
    draw_contexts,
    draw_dataset,
)
from scenario_io.errors import InfeasibleActionError, InstanceError
from scenario_io.instances import make_example_one, make_synthetic, make_tightness
from scenario_io.losses import consistency_residual, incenter_loss, suboptimality_gap

S0 = Context(ContextKind.LABEL, 0)
S1 = Context(ContextKind.LABEL, 1)
FLAT = np.array([1.0, 0.0, 0.0])


def test_suboptimality_gap_of_expert_is_zero() -> None:
    inst = make_example_one()
    for s in (S0, S1):
        gap = suboptimality_gap(inst, inst.theta_star, s, inst.expert_action(s))
        assert gap.value == pytest.approx(0.0, abs=1e-12)


def test_suboptimality_gap_value_and_witness() -> None:
    inst = make_example_one()
    gap = suboptimality_gap(inst, FLAT, S0, Action((-1.0, -1.0)))
    assert gap.value == pytest.approx(2.0)
    assert gap.witness.value[0] == 1.0


def test_suboptimality_gap_rejects_foreign_action() -> None:
    with pytest.raises(InfeasibleActionError):
        suboptimality_gap(make_example_one(), FLAT, S0, Action((0.0, 3.0)))


def test_incenter_loss_flags_flat_parameter() -> None:
    inst = make_example_one()
    loss = incenter_loss(inst, FLAT, S0, Action((1.0, -1.0)))
    assert loss.value == pytest.approx(2.0)
    assert loss.witness == Action((1.0, 1.0))


def test_incenter_loss_is_zero_at_feasible_point() -> None:
    inst = make_example_one()
    theta = Parameter((2.0, -2.0, 6.0))
    assert incenter_loss(inst, theta, S0, Action((1.0, -1.0))).value == 0.0
    loss = incenter_loss(inst, theta, S1, Action((1.0, 1.0)))
    assert loss.value == 0.0
    assert loss.witness == Action((1.0, 1.0))


def test_incenter_loss_dominates_suboptimality_gap() -> None:
    inst = make_example_one()
    theta = np.array([1.0, 0.5, -0.25])
    for s in (S0, S1):
        a = inst.expert_action(s)
        assert incenter_loss(inst, theta, s, a).value >= suboptimality_gap(inst, theta, s, a).value


def test_consistency_residual_reports_worst_demo() -> None:
    inst = make_example_one()
    data = Dataset((Demonstration(S1, Action((1.0, 1.0))), Demonstration(S0, Action((-1.0, -1.0)))))
    worst = consistency_residual(inst, FLAT, data)
    assert worst.value == pytest.approx(2.0)
    assert worst.witness_index == 1


def test_consistency_residual_vanishes_on_ground_truth() -> None:
    inst = make_synthetic(4, seed=0)
    data = draw_dataset(inst, 40, seed=1)
    assert consistency_residual(inst, inst.theta_star, data).value <= 1e-12


def test_consistency_residual_is_positively_homogeneous() -> None:
    inst = make_synthetic(3, seed=5)
    data = draw_dataset(inst, 10, seed=6)
    theta = np.array([0.2, -0.4, 1.2])
    base = consistency_residual(inst, theta, data).value
    assert consistency_residual(inst, 2.5 * theta, data).value == pytest.approx(2.5 * base)
    assert math.isfinite(base)


def test_consistency_residual_needs_data() -> None:
    with pytest.raises(InstanceError):
        consistency_residual(make_example_one(), FLAT, Dataset(()))


@pytest.mark.parametrize("a", [-1.0, -0.3, 0.0, 0.5, 1.0])
def test_segment_oracle_gap_matches_piecewise_closed_form(a: float) -> None:
    inst = make_tightness(2)
    rng = np.random.default_rng(0)
    for s in draw_contexts(inst, 20, seed=1):
        theta = np.concatenate([[1.0], rng.normal(size=2) * 3.0])
        p, n = SegmentOracle.slopes(theta, s)
        closed = max(0.0, p, -n) - (a * p if a >= 0.0 else a * n)
        assert suboptimality_gap(inst, theta, s, Action((a,))).value == pytest.approx(closed, abs=1e-12)
