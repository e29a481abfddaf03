import math

import numpy as np
import pytest

from conftest import make_diamond
from qosd.errors import InvalidInstance
from qosd.estimator import ExactEstimator
from qosd.graph import CostFamily
from qosd.reward import (
    RewardParams,
    budget_penalty,
    reward,
    reward_gradient_fixed_paths,
    reward_terms,
    round_into_box,
    smooth_feasibility,
    soft_transform,
    surrogate_reward,
)
from qosd.stressing import PathSet


def test_softplus_values():
    assert soft_transform([0.0])[0] == pytest.approx(math.log(2))
    assert soft_transform([800.0])[0] == pytest.approx(800.0)
    tiny = soft_transform([-40.0])[0]
    assert 0 <= tiny and tiny == pytest.approx(math.exp(-40), rel=1e-6)


def test_rounding_half_up_and_clamp(diamond):
    assert round_into_box(diamond, [0.5, 1.49, -3.0, 99.0]) == (1, 1, 0, 4)
    with pytest.raises(InvalidInstance):
        round_into_box(diamond, [0.0, np.nan, 0.0, 0.0])


def test_sigmoid_at_threshold():
    inst = make_diamond(2.0)
    assert smooth_feasibility(inst, ExactEstimator(), [0.0] * 4, 5.0) == pytest.approx(0.5)


def test_sigmoid_one_above():
    inst = make_diamond(2.0)
    score = smooth_feasibility(inst, ExactEstimator(), [1.0, 0.0, 1.0, 0.0], 5.0)
    assert score == pytest.approx(1 / (1 + math.exp(-5)))
    assert score == pytest.approx(0.99331, abs=1e-5)


def test_penalty_at_zero():
    assert budget_penalty(np.zeros(7), 0.05) == pytest.approx(0.05 * math.log(1 + 7 * math.log(2)))


def test_saturated_reward_without_penalty():
    inst = make_diamond(2.0)
    value = reward(inst, ExactEstimator(), [4.0] * 4, RewardParams(zeta=5.0, kappa=0.0))
    assert value == pytest.approx(1.0, abs=1e-8)


def test_reward_strictly_below_pair_count():
    inst = make_diamond(4.0)
    terms = reward_terms(inst, ExactEstimator(), [3.0, 0.0, 3.0, 0.0])
    assert terms["penalty"] > 0 and terms["reward"] < 1


def test_params_validated():
    with pytest.raises(InvalidInstance):
        RewardParams(zeta=0.0)
    with pytest.raises(InvalidInstance):
        RewardParams(kappa=-1.0)


def _fd(fn, x, h=1e-5):
    g = np.zeros_like(x)
    for i in range(len(x)):
        up, dn = x.copy(), x.copy()
        up[i] += h
        dn[i] -= h
        g[i] = (fn(up) - fn(dn)) / (2 * h)
    return g


@pytest.mark.parametrize("kind", ["linear", "quadratic", "log"])
def test_gradient_matches_finite_differences(kind):
    inst = make_diamond(4.0, cost=CostFamily(kind, 1.0))
    ps = PathSet.build(inst, inst.zero(), ExactEstimator())
    params = RewardParams(zeta=1.0, kappa=0.05)
    x = np.array([0.7, 0.2, 1.3, 0.4])
    analytic = reward_gradient_fixed_paths(inst, ps, x, params)
    numeric = _fd(lambda z: surrogate_reward(inst, ps, z, params), x)
    assert np.allclose(analytic, numeric, rtol=1e-6, atol=1e-9)


def test_gradient_zero_off_path():
    inst = make_diamond(4.0)
    # only the path through edges 0, 1 is in the working set
    ps = PathSet.build(inst, inst.zero(), ExactEstimator())
    grad = reward_gradient_fixed_paths(inst, ps, np.ones(4), RewardParams(kappa=0.0))
    assert grad[2] == 0.0 and grad[3] == 0.0 and grad[0] > 0


def test_gradient_vanishes_when_saturated():
    inst = make_diamond(2.0)
    ps = PathSet.build(inst, inst.zero(), ExactEstimator())
    grad = reward_gradient_fixed_paths(inst, ps, np.full(4, 50.0), RewardParams(zeta=5.0, kappa=0.0))
    assert np.all(np.abs(grad) < 1e-12)


def test_log_surrogate_domain():
    inst = make_diamond(4.0, cost=CostFamily("log"))
    ps = PathSet.build(inst, inst.zero(), ExactEstimator())
    with pytest.raises(InvalidInstance):
        surrogate_reward(inst, ps, np.array([-1.0, 0, 0, 0]))
