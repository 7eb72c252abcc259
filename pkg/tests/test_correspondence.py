import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from topgraph.correspondence import (
    EdgeFunction,
    VertexFunction,
    cc_norm,
    compact_action,
    inner_product,
    left_action,
    random_edge_function,
    random_vertex_function,
    rank_one_decomposition,
    right_action,
)
from topgraph.errors import GraphMismatchError, PreconditionError
from topgraph.graph_model import compactified_shift_graph


def test_left_action_examples(orbit_graph, loop_graph):
    g = orbit_graph
    out = left_action(VertexFunction.indicator(g, "w"), EdgeFunction.constant(g, 1))
    assert out == EdgeFunction.indicator(g, "f", "g")
    assert left_action(VertexFunction.constant(g, 0), EdgeFunction.constant(g, 1)).is_zero()
    h = loop_graph
    assert left_action(VertexFunction.of(h, {"v": 2 + 1j}), EdgeFunction.of(h, {"e": 3}))("e") == 6 + 3j


def test_right_action_examples(orbit_graph, loop_graph):
    g = orbit_graph
    xi = EdgeFunction.of(g, [1, 2j, -1])
    assert right_action(EdgeFunction.constant(g, 1), VertexFunction.indicator(g, "w")).is_zero()
    assert right_action(xi, VertexFunction.constant(g, 1)) == xi
    h = loop_graph
    assert right_action(EdgeFunction.of(h, {"e": 1j}), VertexFunction.of(h, {"v": 1j}))("e") == -1


def test_inner_product_examples(orbit_graph, loop_graph):
    g = orbit_graph
    one = EdgeFunction.constant(g, 1)
    ip = inner_product(one, one)
    assert ip("v") == 3 and ip("w") == 0
    h = loop_graph
    xi = EdgeFunction.of(h, {"e": 2j})
    assert inner_product(xi, xi)("v") == 4
    assert inner_product(EdgeFunction.indicator(g, "e"), EdgeFunction.indicator(g, "f")).is_zero()


def test_cc_norm_examples(orbit_graph, loop_graph):
    assert cc_norm(EdgeFunction.constant(orbit_graph, 1)) == pytest.approx(np.sqrt(3), abs=1e-15)
    assert cc_norm(EdgeFunction.constant(orbit_graph, 0)) == 0
    assert cc_norm(EdgeFunction.of(loop_graph, {"e": -5})) == 5


def test_rank_one_examples(orbit_graph, loop_graph):
    g = orbit_graph
    pairs = rank_one_decomposition(VertexFunction.indicator(g, "v"))
    assert len(pairs) == 1
    assert pairs[0].xi == EdgeFunction.indicator(g, "e") and pairs[0].eta == EdgeFunction.indicator(g, "e")
    assert rank_one_decomposition(VertexFunction.constant(g, 0)) == []
    (pair,) = rank_one_decomposition(VertexFunction.of(loop_graph, {"v": 7}))
    assert pair.xi("e") == 7 and pair.eta("e") == 1


def test_rank_one_precondition():
    g = compactified_shift_graph(2)  # vertex "2" receives no edge
    with pytest.raises(PreconditionError, match="receives no edge"):
        rank_one_decomposition(VertexFunction.indicator(g, "2"))


def test_mismatched_graphs(orbit_graph, loop_graph):
    with pytest.raises(GraphMismatchError):
        left_action(VertexFunction.constant(loop_graph, 1), EdgeFunction.constant(orbit_graph, 1))


@st.composite
def graph_and_seed(draw):
    from topgraph.batteries import random_no_sink_graph

    seed = draw(st.integers(0, 10_000))
    rng = np.random.default_rng(seed)
    return random_no_sink_graph(rng, max_vertices=6, max_edges=40), rng


@settings(max_examples=50, deadline=None)
@given(graph_and_seed())
def test_inner_product_axioms(data):
    g, rng = data
    xi, eta = random_edge_function(g, rng), random_edge_function(g, rng)
    a = random_vertex_function(g, rng)
    ipxx = inner_product(xi, xi).values
    assert np.all(ipxx.real >= 0) and np.all(ipxx.imag == 0)
    assert (not np.any(ipxx)) == xi.is_zero()
    assert np.array_equal(inner_product(xi, eta).values, np.conj(inner_product(eta, xi).values))
    lhs = inner_product(xi, right_action(eta, a)).values
    rhs = inner_product(xi, eta).values * a.values
    assert np.allclose(lhs, rhs, rtol=0, atol=1e-12)


@settings(max_examples=50, deadline=None)
@given(graph_and_seed())
def test_decomposition_identity_on_indicators(data):
    """sum_i theta(xi_i, eta_i) zeta = a . zeta for every indicator zeta."""
    g, rng = data
    a = random_vertex_function(g, rng)
    receives = np.zeros(len(g.vertex_list), dtype=bool)
    receives[g.rng_idx] = True
    a = VertexFunction(g, np.where(receives, a.values, 0))
    pairs = rank_one_decomposition(a)
    for e in g.edges:
        zeta = EdgeFunction.indicator(g, e)
        assert compact_action(pairs, zeta) == left_action(a, zeta)
