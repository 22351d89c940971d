import math

import numpy as np
import pytest

from scenario_io.bounds import (
    NOT_INFORMATIVE,
    action_level_bound,
    binomial_tail,
    epsilon_explicit,
    estimate_covariance_diversity,
    expected_regret_upper_bound,
    high_probability_regret_bound,
    instantaneous_regret_bound,
    regret_lower_bound,
    sample_complexity_N,
    scenario_epsilon,
)
from scenario_io.core import Parameter, Slice
from scenario_io.errors import InstanceError, LowDataRegimeError
from scenario_io.instances import make_synthetic


def test_binomial_tail_known_values() -> None:
    assert binomial_tail(10, 1, 0.1) == pytest.approx(0.9**10, rel=1e-12)
    assert binomial_tail(20, 2, 0.2) == pytest.approx(0.8**20 + 20 * 0.2 * 0.8**19, rel=1e-12)
    assert binomial_tail(5, 5, 0.3) == pytest.approx(1.0 - 0.3**5)
    assert binomial_tail(4, 1, 0.0) == 1.0
    assert binomial_tail(4, 1, 1.0) == 0.0


def test_binomial_tail_is_stable_for_large_T() -> None:
    value = binomial_tail(10**6, 50, 1e-4)
    assert 0.0 <= value <= 1.0
    assert binomial_tail(10**6, 50, 0.5) == 0.0


@pytest.mark.parametrize("T, d, eps", [(0, 1, 0.1), (3, 0, 0.1), (3, 1, 1.5)])
def test_binomial_tail_validates(T: int, d: int, eps: float) -> None:
    with pytest.raises(InstanceError):
        binomial_tail(T, d, eps)


def test_sample_complexity_matches_closed_form_for_d1() -> None:
    assert sample_complexity_N(1, 0.1, 0.1) == 22
    n = sample_complexity_N(3, 0.05, 0.01)
    assert binomial_tail(n, 3, 0.05) <= 0.01 < binomial_tail(n - 1, 3, 0.05)


def test_sample_complexity_slack_offset_needs_more_data() -> None:
    assert sample_complexity_N(1, 0.1, 0.1, dim_offset=1) > sample_complexity_N(1, 0.1, 0.1)


def test_sample_complexity_not_informative_for_tiny_eps() -> None:
    assert sample_complexity_N(1, 1e-12, 0.1) is NOT_INFORMATIVE


def test_scenario_epsilon_inverts_the_tail() -> None:
    eps = scenario_epsilon(22, 1, 0.1)
    assert eps == pytest.approx(1.0 - 0.1 ** (1.0 / 22.0), rel=1e-8)
    assert scenario_epsilon(3, 5, 0.1) is NOT_INFORMATIVE


def test_explicit_epsilon() -> None:
    assert epsilon_explicit(300, 5, 0.1) == pytest.approx(0.048684, abs=1e-6)
    assert scenario_epsilon(300, 5, 0.1) <= epsilon_explicit(300, 5, 0.1)
    with pytest.raises(LowDataRegimeError):
        epsilon_explicit(10, 5, 0.1)


def test_action_level_bound() -> None:
    assert action_level_bound(0.01, 2.0, 0.5) == pytest.approx(0.08)
    assert action_level_bound(0.5, 2.0, 0.1) == 1.0
    assert action_level_bound(0.0, 1.0, 1.0, slack=1.0, theta_norm=2.0) == pytest.approx(0.25)
    with pytest.raises(InstanceError):
        action_level_bound(0.1, 1.0, 0.0)


def test_regret_lower_bound() -> None:
    assert regret_lower_bound(99, 2) == pytest.approx(7.0131, abs=1e-4)
    assert regret_lower_bound(3, 2) == pytest.approx(0.5754, abs=1e-4)
    with pytest.raises(InstanceError):
        regret_lower_bound(2, 2)


def test_regret_upper_bounds() -> None:
    assert instantaneous_regret_bound(1, 2, 1.0, 1.0) == 1.0
    assert instantaneous_regret_bound(4, 2, 1.0, 1.0) == 0.5
    assert expected_regret_upper_bound(1, 2, 1.0, 1.0) == 1.0
    expected = 2.0 * 3.0 * (2 + 2 * (1 / 3 + 1 / 4 + 1 / 5))
    assert expected_regret_upper_bound(5, 2, 2.0, 3.0) == pytest.approx(expected)
    assert expected_regret_upper_bound(1000, 2, 1.0, 1.0) >= regret_lower_bound(1000, 2)
    small = high_probability_regret_bound(100, 2, 0.05, 1.0, 1.0)
    large = high_probability_regret_bound(1000, 2, 0.05, 1.0, 1.0)
    assert 0.0 < small < large
    with pytest.raises(InstanceError):
        high_probability_regret_bound(10, 2, 1.5, 1.0, 1.0)


def test_covariance_diversity() -> None:
    inst = make_synthetic(3, seed=0)
    assert math.isinf(estimate_covariance_diversity(inst, inst.theta_star, 300, seed=1))
    off = Parameter.from_vector(np.array([0.8, 0.1, 0.1]), Slice.AFFINE_SUM)
    lam = estimate_covariance_diversity(inst, off, 2000, seed=1, chunk=256)
    assert lam >= -1e-12
    assert estimate_covariance_diversity(inst, off, 2000, seed=1, chunk=256) == lam
    with pytest.raises(InstanceError):
        estimate_covariance_diversity(inst, off, 10, seed=1)
