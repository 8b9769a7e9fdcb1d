import numpy as np
import pytest

from netspill import Graph, ParseError, generate_small_world, load_graph, remove_ties, save_graph
from netspill.errors import ParameterError
from netspill.netgraph import bfs_distances, second_degree_set


def test_ring_lattice_without_rewiring():
    g = generate_small_world(10, 4, 0.0, seed=1)
    assert g.n_edges == 20
    assert np.all(g.degrees == 4)


@pytest.mark.parametrize("p", [0.1, 0.5, 1.0])
def test_rewiring_preserves_edge_count(p):
    g = generate_small_world(10, 4, p, seed=3)
    assert g.n_edges == 20
    assert g.degrees.sum() == 40


def test_rewiring_produces_degree_dispersion():
    # the toy network has degrees 3..6; rewired graphs of that size should vary too
    spreads = [np.ptp(generate_small_world(10, 4, 0.3, seed=s).degrees) for s in range(20)]
    assert max(spreads) >= 2


def test_generator_rejects_bad_degree():
    with pytest.raises(ParameterError):
        generate_small_world(10, 3, 0.1)
    with pytest.raises(ParameterError):
        generate_small_world(4, 4, 0.1)


def test_generator_is_seeded():
    a = generate_small_world(50, 4, 0.2, seed=7)
    b = generate_small_world(50, 4, 0.2, seed=7)
    assert a == b


def test_toy_degrees(toy_graph):
    assert toy_graph.degrees.tolist() == [3, 4, 6, 5, 5, 3, 3, 4, 4, 3]
    assert toy_graph.degrees.mean() == 4.0


def test_second_degree_path():
    g = Graph.from_edges(3, [(0, 1), (1, 2)])
    assert second_degree_set(g, 0) == {2}


def test_second_degree_complete_graph():
    g = Graph.from_edges(4, [(i, j) for i in range(4) for j in range(i + 1, 4)])
    assert second_degree_set(g, 0) == set()


def test_second_degree_toy(toy_graph):
    # unit 6 (1-based): peers 3,4,5; two hops away 1,2,7,8,9
    assert set(toy_graph.neighbors(5).tolist()) == {2, 3, 4}
    assert second_degree_set(toy_graph, 5) == {0, 1, 6, 7, 8}


def test_second_degree_matches_bfs(toy_graph):
    for i in range(toy_graph.n):
        d = bfs_distances(toy_graph, i)
        assert second_degree_set(toy_graph, i) == set(np.nonzero(d == 2)[0].tolist())


def test_remove_ties_counts():
    g = generate_small_world(10, 4, 0.0, seed=0)
    assert remove_ties(g, 0.0, seed=1) == g
    assert remove_ties(g, 1.0, seed=1).n_edges == 0
    assert remove_ties(g, 0.25, seed=1).n_edges == 15


def test_remove_ties_nested():
    g = generate_small_world(60, 4, 0.1, seed=0)
    small = remove_ties(g, 0.25, seed=9).edge_set()
    large = remove_ties(g, 0.5, seed=9).edge_set()
    assert large <= small <= g.edge_set()


@pytest.mark.parametrize("dense", [False, True])
def test_round_trip(tmp_path, dense):
    g = generate_small_world(30, 4, 0.2, seed=5)
    p = tmp_path / "g.csv"
    save_graph(g, p, dense=dense)
    assert load_graph(p).edge_set() == g.edge_set()


def test_round_trip_keeps_isolated_units(tmp_path):
    g = Graph.from_edges(5, [(0, 1)])
    save_graph(g, tmp_path / "g.csv")
    assert load_graph(tmp_path / "g.csv").n == 5


def test_dense_diagonal_rejected(tmp_path):
    p = tmp_path / "g.csv"
    p.write_text("1,1\n1,0\n")
    with pytest.raises(ParseError, match="line 1"):
        load_graph(p)


def test_dense_asymmetric_rejected(tmp_path):
    p = tmp_path / "g.csv"
    p.write_text("0,1\n0,0\n")
    with pytest.raises(ParseError):
        load_graph(p)


def test_edge_id_out_of_range(tmp_path):
    p = tmp_path / "g.csv"
    p.write_text("# n=3\nu,v\n0,1\n1,3\n")
    with pytest.raises(ParseError, match="line 4"):
        load_graph(p)


@pytest.mark.parametrize("row", ["1,1", "2,1", "0,1"])
def test_edge_list_bad_rows(tmp_path, row):
    p = tmp_path / "g.csv"
    p.write_text(f"u,v\n0,1\n{row}\n")
    with pytest.raises(ParseError):
        load_graph(p)


def test_whitespace_dense(toy_file, toy_graph):
    assert load_graph(toy_file) == toy_graph
