import numpy as np
import pydantic
import pytest

from scenario_io.bounds import audit_feature_bound, expert_uniqueness_rate
from scenario_io.core import Slice, draw_contexts, greedy_action_set
from scenario_io.errors import InstanceError
from scenario_io.instances import InstanceSpec, make_example_one, make_synthetic, make_tightness, parse_kv


def test_synthetic_instance_shape_and_normalization() -> None:
    inst = make_synthetic(5, K=15, seed=3)
    assert inst.dim == 5
    assert inst.slice is Slice.AFFINE_SUM
    assert sum(inst.theta_star.coords) == pytest.approx(1.0)
    assert all(c >= 0.0 for c in inst.theta_star.coords)
    assert np.allclose(np.linalg.norm(inst.action_space.values, axis=1), 1.0)
    assert inst.feature_bound == 15.0


def test_synthetic_instance_is_seeded() -> None:
    a, b = make_synthetic(3, seed=11), make_synthetic(3, seed=11)
    assert a.theta_star == b.theta_star
    assert np.array_equal(a.action_space.values, b.action_space.values)
    assert make_synthetic(3, seed=12).theta_star != a.theta_star


@pytest.mark.parametrize("d, K", [(0, 15), (3, 1)])
def test_synthetic_rejects_bad_sizes(d: int, K: int) -> None:
    with pytest.raises(InstanceError):
        make_synthetic(d, K)


def test_tightness_instance() -> None:
    inst = make_tightness(3)
    assert inst.dim == 4
    assert inst.theta_star.coords == (1.0, 0.0, 0.0, 0.0)
    for s in draw_contexts(inst, 50, seed=0):
        assert np.linalg.norm(s.array) == pytest.approx(1.0)
        assert inst.expert_action(s).value == (0.0,)


@pytest.mark.parametrize("inst", [make_synthetic(3, seed=0), make_tightness(2), make_example_one(21)])
def test_feature_bound_holds_on_samples(inst) -> None:
    assert audit_feature_bound(inst, 500, seed=1) <= inst.feature_bound + 1e-12


def test_synthetic_expert_is_unique_on_samples() -> None:
    assert expert_uniqueness_rate(make_synthetic(4, seed=2), 2000, seed=3) == 1.0


def test_instance_spec_builds_and_serializes() -> None:
    spec = InstanceSpec(kind="synthetic-linear", d=4, K=8, seed=2)
    inst = spec.build()
    assert inst.dim == 4 and len(inst.action_space) == 8
    again = InstanceSpec.from_kv(spec.to_kv())
    assert again == spec
    assert InstanceSpec(kind="example-one", grid_points=11).build().action_space.grid_points == 11


def test_instance_spec_validation() -> None:
    with pytest.raises(pydantic.ValidationError):
        InstanceSpec(kind="synthetic-linear", K=1)
    with pytest.raises(pydantic.ValidationError):
        InstanceSpec(kind="cube")


def test_parse_kv_skips_comments_and_rejects_garbage() -> None:
    text = "# header\nd = 5\n\nK=10  # trailing\n"
    assert parse_kv(text) == {"d": "5", "K": "10"}
    with pytest.raises(InstanceError):
        parse_kv("d 5")


def test_instance_spec_carries_the_tie_tolerance() -> None:
    spec = InstanceSpec(kind="synthetic-linear", d=3, K=6, seed=1, tie_tol_rel=1e6)
    inst = spec.build()
    assert inst.tie_tol_rel == 1e6
    s = draw_contexts(inst, 1, seed=0)[0]
    assert len(greedy_action_set(inst, inst.theta_star, s).actions) == 6
    assert greedy_action_set(spec.copy(update={"tie_tol_rel": 1e-9}).build(), inst.theta_star, s).is_singleton
    assert InstanceSpec.from_kv(spec.to_kv()).tie_tol_rel == 1e6
    with pytest.raises(pydantic.ValidationError):
        InstanceSpec(kind="tightness", tie_tol_rel=-1.0)
