import numpy as np
import pytest
from hypothesis import given, strategies as st

from pacifier.errors import GenerationFailed, InvalidInput
from pacifier.graph import is_connected
from pacifier.synthgen import (
    GenConfig,
    generate_instance,
    generate_instances,
    sample_continuous_opinions,
    sample_costs,
)


def test_equal_camps_binary():
    inst = generate_instance(GenConfig(n_min=40, n_max=40), np.random.default_rng(0))
    assert inst.n == 40
    assert np.sum(inst.s0 == 1) == 20 and np.sum(inst.s0 == -1) == 20
    assert np.array_equal(inst.camps, inst.s0.astype(int))


def test_zero_cross_ratio_never_connects():
    cfg = GenConfig(cross_ratio_min=0.0, cross_ratio_max=0.0, max_retries=5)
    with pytest.raises(GenerationFailed):
        generate_instance(cfg, np.random.default_rng(0))


@pytest.mark.parametrize(
    "kw", [dict(n_min=3), dict(n_min=10, n_max=9), dict(ba_m_min=0), dict(cross_ratio_max=1.5),
           dict(opinion_mode="odd"), dict(cost_mode="odd"), dict(cost_low=0.0)]
)
def test_config_validation(kw):
    with pytest.raises(InvalidInput):
        GenConfig(**kw)


def test_sample_costs():
    rng = np.random.default_rng(0)
    assert list(sample_costs(3, "unit", rng)) == [1, 1, 1]
    assert sample_costs(0, "unit", rng).shape == (0,)
    c = sample_costs(1000, "random", rng)
    assert abs(c.mean() - 1.0) < 0.05
    assert c.min() >= 0.5 and c.max() <= 1.5


def test_continuous_opinion_signs():
    rng = np.random.default_rng(0)
    s = sample_continuous_opinions([True, False], rng)
    assert s[0] > 0 and s[1] < 0
    assert np.all(sample_continuous_opinions(np.ones(50, bool), rng) > 0)
    big = sample_continuous_opinions(rng.random(10_000) < 0.5, rng)
    assert abs(np.abs(big).mean() - 0.5) < 0.02
    assert np.all(np.abs(big) <= 1) and np.all(big != 0)


@given(st.integers(0, 2**32 - 1))
def test_instances_are_connected_and_camp_aligned(seed):
    inst = generate_instance(GenConfig(opinion_mode="continuous", cost_mode="random"),
                             np.random.default_rng(seed))
    assert is_connected(inst.graph)
    assert np.all(np.sign(inst.s0) == inst.camps)
    assert abs(int(np.sum(inst.camps == 1)) - int(np.sum(inst.camps == -1))) <= 1
    assert np.all(inst.costs > 0)


def test_seed_gives_bit_identical_instances():
    a = generate_instances(GenConfig(seed=5, cost_mode="random"), 3)
    b = generate_instances(GenConfig(seed=5, cost_mode="random"), 3)
    for x, y in zip(a, b):
        assert np.array_equal(x.graph.src, y.graph.src) and np.array_equal(x.graph.dst, y.graph.dst)
        assert np.array_equal(x.s0, y.s0) and np.array_equal(x.costs, y.costs)
        assert x.name == y.name


def test_budget_fraction_and_count():
    rng = np.random.default_rng(1)
    inst = generate_instance(GenConfig(n_min=40, n_max=40), rng, budget=0.25)
    assert inst.budget == 10
    assert generate_instance(GenConfig(), rng, budget=3).budget == 3
