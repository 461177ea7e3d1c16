import numpy as np
import pytest
from hypothesis import given, strategies as st

from pacifier.errors import IngestError, InvalidAction, InvalidGraph
from pacifier.graph import (
    build_graph,
    is_connected,
    laplacian,
    read_edge_list,
    remove_node,
    write_edge_list,
)

from helpers import random_connected_graph


def test_build_p2_degrees(p2):
    assert p2.n == 2
    assert list(p2.degrees) == [1, 1]
    assert list(p2.self_weights) == [1.0, 1.0]


def test_build_k3_degrees(k3):
    assert list(k3.degrees) == [2, 2, 2]


def test_self_loop_rejected():
    with pytest.raises(InvalidGraph):
        build_graph(2, [(0, 0, 1)])


@pytest.mark.parametrize("edges", [[(0, 2)], [(-1, 0)], [(0, 1), (1, 0)], [(0, 1, -0.5)]])
def test_invalid_edges_rejected(edges):
    with pytest.raises(InvalidGraph):
        build_graph(2, edges)


def test_nonpositive_self_weight_rejected():
    with pytest.raises(InvalidGraph):
        build_graph(2, [(0, 1)], self_weights=[1.0, 0.0])


def test_neighbors_symmetric_and_sorted(k3):
    assert list(k3.neighbors(0)) == [1, 2]
    assert list(k3.neighbors(2)) == [0, 1]


def test_laplacian_p2(p2):
    np.testing.assert_array_equal(laplacian(p2), [[1, -1], [-1, 1]])


def test_laplacian_k3(k3):
    expected = 3 * np.eye(3) - np.ones((3, 3))
    np.testing.assert_array_equal(laplacian(k3), expected)


def test_laplacian_empty_graph():
    g = build_graph(3, [])
    np.testing.assert_array_equal(laplacian(g), np.zeros((3, 3)))


def test_laplacian_weighted():
    g = build_graph(3, [(0, 1, 2.0), (1, 2, 0.5)])
    lap = laplacian(g)
    assert lap[1, 1] == 2.5
    assert lap[0, 1] == -2.0


def test_connectivity(p2, k3):
    assert is_connected(p2)
    assert is_connected(k3)
    assert not is_connected(build_graph(3, [(0, 1)]))


def test_remove_node_k3_gives_p2(k3):
    g = remove_node(k3, 2)
    assert list(g.degrees) == [1, 1, 0]
    assert list(g.edges()) == [(0, 1, 1.0)]
    assert not g.active[2]


def test_remove_node_p2(p2):
    g = remove_node(p2, 0)
    assert list(g.degrees) == [0, 0]
    assert g.n_active == 1


def test_remove_star_center(star4):
    g = remove_node(star4, 0)
    assert list(g.degrees) == [0, 0, 0, 0]


def test_remove_twice_rejected(k3):
    g = remove_node(k3, 1)
    with pytest.raises(InvalidAction):
        remove_node(g, 1)
    with pytest.raises(InvalidAction):
        remove_node(k3, 7)


def test_original_graph_untouched_by_removal(k3):
    remove_node(k3, 0)
    assert list(k3.degrees) == [2, 2, 2]


@given(st.integers(2, 40), st.integers(0, 2**32 - 1))
def test_laplacian_rows_sum_to_zero(n, seed):
    g = random_connected_graph(np.random.default_rng(seed), n)
    assert np.abs(laplacian(g).sum(axis=1)).max() < 1e-12


@given(st.integers(2, 50), st.integers(0, 2**32 - 1))
def test_removal_matches_rebuild(n, seed):
    rng = np.random.default_rng(seed)
    g = random_connected_graph(rng, n)
    v = int(rng.integers(n))
    rebuilt = build_graph(n, [(a, b, w) for a, b, w in g.edges() if v not in (a, b)])
    np.testing.assert_array_equal(laplacian(remove_node(g, v)), laplacian(rebuilt))


def test_edge_list_remaps_sparse_ids(tmp_path):
    path = tmp_path / "g.txt"
    path.write_text("# comment\n10 30\n30 20 2.5  # weighted\n\n")
    n, edges, id_map = read_edge_list(path)
    assert n == 3
    assert id_map == {"10": 0, "20": 1, "30": 2}
    assert edges == [(0, 2, 1.0), (2, 1, 2.5)]


def test_edge_list_reports_line_numbers(tmp_path):
    path = tmp_path / "g.txt"
    path.write_text("0 1\n1\n")
    with pytest.raises(IngestError, match=":2:"):
        read_edge_list(path)
    path.write_text("0 1\n\n3 3\n")
    with pytest.raises(IngestError, match=":3: self-loop"):
        read_edge_list(path)


def test_edge_list_round_trip(tmp_path):
    g = build_graph(4, [(0, 1, 0.1), (1, 2, 1.0), (2, 3, 1 / 3)])
    write_edge_list(g, tmp_path / "g.txt")
    n, edges, _ = read_edge_list(tmp_path / "g.txt")
    assert list(build_graph(n, edges).edges()) == list(g.edges())
