import warnings

import numpy as np
import pytest
from hypothesis import given, strategies as st

from pacifier.dynamics import (
    BiasConfig,
    OpinionState,
    count_settles,
    settle,
    solve_bias_assimilation,
    solve_fj_direct,
    solve_fj_iterative,
    solve_me_constrained,
)
from pacifier.errors import InvalidInput, NonConverged, NonConvergedWarning
from pacifier.graph import build_graph, laplacian

from helpers import random_connected_graph


def test_direct_p2(p2):
    np.testing.assert_allclose(solve_fj_direct(p2, [1, -1]), [1 / 3, -1 / 3], atol=1e-12)


def test_direct_k3(k3):
    np.testing.assert_allclose(solve_fj_direct(k3, [1, 1, -1]), [0.5, 0.5, 0.0], atol=1e-12)


def test_direct_zero_opinions(k3):
    assert np.all(solve_fj_direct(k3, np.zeros(3)) == 0)


def test_direct_dimension_mismatch(k3):
    with pytest.raises(InvalidInput):
        solve_fj_direct(k3, [1, 0])


def test_direct_honours_self_weights():
    # (L + W) z = W s with W = diag(2, 1): [[3, -1], [-1, 2]] z = (2, -1)
    g = build_graph(2, [(0, 1)], self_weights=[2.0, 1.0])
    np.testing.assert_allclose(solve_fj_direct(g, [1, -1]), [0.6, -0.2], atol=1e-12)


def test_sparse_path_matches_dense():
    g = random_connected_graph(np.random.default_rng(3), 300)
    s = np.random.default_rng(4).uniform(-1, 1, 300)
    np.testing.assert_allclose(solve_fj_direct(g, s, dense_limit=10), solve_fj_direct(g, s), atol=1e-9)


def test_iterative_p2(p2):
    np.testing.assert_allclose(solve_fj_iterative(p2, [1, -1], tol=1e-10), [1 / 3, -1 / 3], atol=1e-9)


def test_iterative_isolated_node():
    g = build_graph(1, [])
    assert solve_fj_iterative(g, [0.7], max_iters=1)[0] == 0.7


def test_iterative_k3(k3):
    np.testing.assert_allclose(solve_fj_iterative(k3, [1, 1, -1]), [0.5, 0.5, 0.0], atol=1e-9)


def test_iterative_nonconvergence_carries_last_iterate(k3):
    with pytest.raises(NonConverged) as info:
        solve_fj_iterative(k3, [1, 1, -1], tol=1e-12, max_iters=2)
    assert info.value.last.shape == (3,)
    assert info.value.iterations == 2


def test_me_p2_pinned(p2):
    np.testing.assert_allclose(solve_me_constrained(p2, [1, -1], [0]), [0.0, -0.5], atol=1e-12)


def test_me_no_pins_equals_direct(k3):
    s = [1, 1, -1]
    np.testing.assert_allclose(solve_me_constrained(k3, s, []), solve_fj_direct(k3, s), atol=1e-14)


def test_me_all_pinned(k3):
    assert np.all(solve_me_constrained(k3, [1, 1, -1], [0, 1, 2]) == 0)


@given(st.integers(3, 40), st.integers(0, 2**32 - 1))
def test_me_free_nodes_satisfy_averaging_rule(n, seed):
    rng = np.random.default_rng(seed)
    g = random_connected_graph(rng, n)
    s = rng.uniform(-1, 1, n)
    pinned = rng.random(n) < 0.3
    z = solve_me_constrained(g, s, pinned)
    assert np.all(z[pinned] == 0)
    resid = (laplacian(g) + np.eye(n)) @ z - s
    assert np.abs(resid[~pinned]).max(initial=0) < 1e-8


@given(st.integers(2, 40), st.integers(0, 2**32 - 1))
def test_direct_within_convex_hull(n, seed):
    rng = np.random.default_rng(seed)
    g = random_connected_graph(rng, n)
    s = rng.uniform(-1, 1, n)
    z = solve_fj_direct(g, s)
    assert z.min() >= s.min() - 1e-12 and z.max() <= s.max() + 1e-12
    resid = (laplacian(g) + np.eye(n)) @ z - s
    assert np.abs(resid).max() < 1e-10


@given(st.integers(2, 30), st.integers(0, 2**32 - 1))
def test_superposition(n, seed):
    rng = np.random.default_rng(seed)
    g = random_connected_graph(rng, n)
    s = rng.uniform(-1, 1, n)
    picked = rng.choice(n, size=int(rng.integers(1, n + 1)), replace=False)
    q = np.linalg.inv(laplacian(g) + np.eye(n))
    s2 = s.copy()
    s2[picked] = 0
    expected = solve_fj_direct(g, s) - q[:, picked] @ s[picked]
    np.testing.assert_allclose(solve_fj_direct(g, s2), expected, atol=1e-8)


def test_bias_isolated_node_fixed():
    g = build_graph(1, [])
    for b in (0.0, 1.0, 3.0):
        assert solve_bias_assimilation(g, [0.4], BiasConfig(b=b))[0] == pytest.approx(0.4, abs=1e-15)


def test_bias_consensus_fixed_point(p2):
    for b in (0.0, 0.5, 2.0):
        np.testing.assert_allclose(solve_bias_assimilation(p2, [1, 1], BiasConfig(b=b)), [1, 1])


def _bias_brute_force(adj, s, b, iters):
    # independent element-by-element loop of the same synchronous update
    n = len(s)
    x = [(v + 1) / 2 for v in s]
    for _ in range(iters):
        nxt = []
        for i in range(n):
            mass = sum(adj[i][j] * x[j] for j in range(n))
            deg = sum(adj[i])
            num = x[i] + x[i] ** b * mass
            den = 1 + x[i] ** b * mass + (1 - x[i]) ** b * (deg - mass)
            nxt.append(num / den)
        x = nxt
    return np.array([2 * v - 1 for v in x])


def test_bias_b0_k3_matches_long_run(k3):
    adj = [[0, 1, 1], [1, 0, 1], [1, 1, 0]]
    oracle = _bias_brute_force(adj, [1, 1, -1], 0.0, 100_000)
    z = solve_bias_assimilation(k3, [1, 1, -1], BiasConfig(b=0.0))
    np.testing.assert_allclose(z, oracle, atol=1e-8)


@given(st.integers(2, 25), st.floats(0.0, 3.0), st.integers(0, 2**32 - 1))
def test_bias_iterates_stay_in_range(n, b, seed):
    rng = np.random.default_rng(seed)
    g = random_connected_graph(rng, n)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", NonConvergedWarning)
        z = solve_bias_assimilation(g, rng.uniform(-1, 1, n), BiasConfig(b=b, max_iters=2000))
    assert np.all(np.abs(z) <= 1.0)


def test_bias_nonconvergence_warns(k3):
    with pytest.warns(NonConvergedWarning):
        solve_bias_assimilation(k3, [0.9, 0.2, -0.5], BiasConfig(b=1.0, max_iters=2))


def test_bias_amplifies_echo_chambers():
    # two triangles joined by one bridge, extreme camps
    edges = [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5), (2, 3)]
    g = build_graph(6, edges)
    s = [1, 1, 1, -1, -1, -1]
    linear = np.abs(solve_fj_direct(g, s)).mean()
    biased = np.abs(solve_bias_assimilation(g, s, BiasConfig(b=1.5))).mean()
    assert biased >= linear


def test_settle_mi_after_zeroing(p2):
    st_ = OpinionState([0.0, -1.0])
    np.testing.assert_allclose(settle(st_, p2, "mi"), [-1 / 3, -2 / 3], atol=1e-12)
    assert not st_.dirty


def test_settle_me(p2):
    st_ = OpinionState([1.0, -1.0], fixed_zero=np.array([True, False]))
    np.testing.assert_allclose(settle(st_, p2, "me"), [0.0, -0.5], atol=1e-12)


def test_settle_removal(k3):
    st_ = OpinionState([1.0, 1.0, -1.0], removed=np.array([False, False, True]))
    np.testing.assert_allclose(settle(st_, k3, "removal"), [1.0, 1.0, 0.0], atol=1e-12)


def test_state_rejects_pinned_and_removed():
    with pytest.raises(InvalidInput):
        OpinionState([0.0], fixed_zero=np.array([True]), removed=np.array([True]))


def test_settle_counter(p2):
    with count_settles() as outer:
        settle(OpinionState([1.0, -1.0]), p2, "mi")
        with count_settles() as inner:
            settle(OpinionState([1.0, -1.0]), p2, "mi")
    assert outer.calls == 2 and inner.calls == 1
