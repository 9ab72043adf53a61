import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import enumerate_path_costs, floyd_warshall
from wassflow.errors import ConfigError, DisconnectedGraph, EmptySupport, UnreachablePair
from wassflow.graph import (Graph, adjacency_with_self_loops, build_capacity_matrix, new_support,
                            shortest_path_costs)


@st.composite
def strongly_connected_graphs(draw, max_n=7):
    """A directed cycle through all nodes plus random extra arcs."""
    n = draw(st.integers(2, max_n))
    perm = draw(st.permutations(range(n)))
    arcs = {(perm[i], perm[(i + 1) % n]) for i in range(n)}
    extra = draw(st.sets(st.tuples(st.integers(0, n - 1), st.integers(0, n - 1)), max_size=2 * n))
    arcs |= {a for a in extra if a[0] != a[1]}
    weights = st.one_of(st.just(0.0), st.floats(0.1, 10.0))
    edges = [(s, t, draw(weights)) for s, t in sorted(arcs)]
    return Graph(n, tuple(edges))


@settings(max_examples=60, deadline=None)
@given(strongly_connected_graphs())
def test_shortest_paths_match_two_oracles(g):
    got = shortest_path_costs(g)
    np.testing.assert_allclose(got, floyd_warshall(g.n, g.edges), atol=1e-12)
    np.testing.assert_allclose(got, enumerate_path_costs(g.n, g.edges), atol=1e-12)
    assert np.all(np.diag(got) == 0)


def test_zero_weight_edges_are_edges():
    g = Graph(3, ((0, 1, 0.0), (1, 2, 0.0), (2, 0, 1.0)))
    c = shortest_path_costs(g)
    assert c[0, 2] == 0.0
    assert c[2, 1] == 1.0


def test_path_costs_are_hop_counts():
    g = Graph.from_dict({"n": 5, "undirected": True, "edges": [[i, i + 1, 1.0, None] for i in range(4)]})
    c = shortest_path_costs(g)
    idx = np.arange(5)
    np.testing.assert_array_equal(c, np.abs(idx[:, None] - idx[None, :]))


def test_unreachable_pair():
    g = Graph(3, ((0, 1, 1.0), (1, 2, 1.0)))
    with pytest.raises(UnreachablePair) as info:
        shortest_path_costs(g)
    assert info.value.source == 1 and info.value.target == 0


def test_disconnected_rejected():
    with pytest.raises(DisconnectedGraph):
        Graph.from_dict({"n": 4, "edges": [[0, 1, 1, None], [2, 3, 1, None]]})


@pytest.mark.parametrize("edges,msg", [
    ([[0, 3, 1.0, None]], "outside"),
    ([[0, 0, 1.0, None]], "self-loop"),
    ([[0, 1, -1.0, None]], "weight"),
    ([[0, 1, 1.0, -2.0]], "capacity"),
    ([[0, 1, 1.0, None], [0, 1, 2.0, None]], "duplicate"),
])
def test_invalid_graphs(edges, msg):
    with pytest.raises(ConfigError, match=msg):
        Graph.from_dict({"n": 2, "edges": edges})


def test_save_load_roundtrip(tmp_path):
    g = Graph.from_dict({"n": 3, "undirected": True, "edges": [[0, 1, 1.5, 0.5], [1, 2, 2.0, None]],
                         "storage": [None, 0.3, None]})
    path = tmp_path / "g.json"
    g.save(path)
    assert json.loads(path.read_text())["storage"] == [None, 0.3, None]
    h = Graph.load(path)
    assert h.edges == g.edges
    np.testing.assert_array_equal(h.storage, g.storage)


def test_mutations_return_new_graphs():
    g = Graph(3, ((0, 1, 1.0), (1, 0, 1.0), (1, 2, 1.0), (2, 1, 1.0)))
    h = g.without_edge(0, 1)
    assert g.has_edge(0, 1) and not h.has_edge(0, 1)
    assert g.with_capacity(1, 2, 0.25).edge_index()[(1, 2)].capacity == 0.25
    assert g.with_storage(2, 0.5).storage[2] == 0.5 and np.isinf(g.storage[2])
    with pytest.raises(ConfigError):
        g.without_edge(0, 2)
    with pytest.raises(ConfigError):
        g.with_edge(0, 1, 1.0)


def test_support_is_one_hop_reach_along_out_edges():
    g = Graph(4, ((0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0), (3, 0, 1.0)))
    adj = adjacency_with_self_loops(g)
    np.testing.assert_array_equal(new_support([1, 0, 0, 0], adj), [0, 1])
    np.testing.assert_array_equal(new_support([0, 0, 0.5, 0.5], adj), [0, 2, 3])
    np.testing.assert_array_equal(new_support([0, 0, 1e-13, 1 - 1e-13], adj), [0, 3])
    with pytest.raises(EmptySupport):
        new_support(np.zeros(4), adj)


@settings(max_examples=40, deadline=None)
@given(strongly_connected_graphs(), st.data())
def test_support_contains_mass_and_grows_with_mass(g, data):
    adj = adjacency_with_self_loops(g)
    mask = np.array(data.draw(st.lists(st.booleans(), min_size=g.n, max_size=g.n)))
    mask[0] = True
    rho = mask / mask.sum()
    sup = set(new_support(rho, adj).tolist())
    assert set(np.flatnonzero(rho).tolist()) <= sup
    expected = {j for i in np.flatnonzero(rho) for j in range(g.n) if adj[i, j]}
    assert sup == expected
    more = mask.copy()
    more[data.draw(st.integers(0, g.n - 1))] = True
    assert sup <= set(new_support(more / more.sum(), adj).tolist())


def test_capacity_matrix_orientation():
    # directed edge 0 -> 1 with capacity 0.4; 1 -> 0 unbounded; no edge 0 -> 2
    g = Graph(3, ((0, 1, 1.0, 0.4), (1, 0, 1.0), (1, 2, 1.0), (2, 1, 1.0)))
    adj = adjacency_with_self_loops(g)
    cap = build_capacity_matrix(g, adj, np.arange(3))
    assert cap[0, 1] == 0.4
    assert np.isinf(cap[1, 0])
    assert cap[0, 2] == 0.0
    assert np.all(np.isinf(np.diag(cap)))
    sub = build_capacity_matrix(g, adj, np.array([1, 2]))
    np.testing.assert_array_equal(sub, cap[:, [1, 2]])
