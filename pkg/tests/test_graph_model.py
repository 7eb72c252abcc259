import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from topgraph.errors import MetricError, SchemaError, UnknownVertexError
from topgraph.graph_model import (
    CircleRotation,
    CompactifiedIntegerShift,
    ExplicitMap,
    TopGraph,
    arctan_metric,
    check_metric,
    compactified_shift_graph,
    discrete_metric,
    discretize,
    enumerate_paths,
    graph_to_dict,
    load_graph,
    validate,
)


def test_loop_graph_sizes(loop_graph):
    assert len(loop_graph.vertex_list) == 1 and len(loop_graph.edges) == 1


def test_orbit_example_sizes(orbit_graph):
    assert orbit_graph.vertex_list == ("v", "w")
    assert orbit_graph.edges == ("e", "f", "g")


def test_unknown_vertex_rejected():
    with pytest.raises(UnknownVertexError, match="unknown vertex"):
        load_graph({"vertices": ["v"], "edges": [{"id": "e", "src": "u", "rng": "v"}]})


@pytest.mark.parametrize(
    "doc",
    [
        {"vertices": ["v"], "edges": [], "colour": "red"},
        {"vertices": [{"id": "v", "weight": 1}], "edges": []},
        {"vertices": ["v"], "edges": [{"id": "e", "src": "v", "rng": "v", "label": 1}]},
        {"vertices": ["v"], "edges": [], "metric": {"type": "arctan-z", "scale": 2}},
    ],
)
def test_unknown_keys_rejected(doc):
    with pytest.raises(SchemaError, match="unknown keys"):
        load_graph(doc)


def test_duplicate_ids_rejected():
    with pytest.raises(SchemaError):
        load_graph({"vertices": ["v", "v"], "edges": []})
    with pytest.raises(SchemaError):
        load_graph({"vertices": ["v"], "edges": [{"id": "e", "src": "v", "rng": "v"}] * 2})


def test_metric_violation_names_triple():
    doc = {
        "vertices": ["a", "b", "c"],
        "metric": {"type": "explicit", "entries": [["a", "b", 1], ["b", "c", 1], ["a", "c", 5]]},
        "edges": [],
    }
    with pytest.raises(MetricError) as exc:
        load_graph(doc)
    assert set(exc.value.witness) == {"a", "b", "c"}


def test_metric_zero_distance_rejected():
    doc = {"vertices": ["a", "b"], "metric": {"entries": [["a", "b", 0]]}, "edges": []}
    with pytest.raises(MetricError):
        load_graph(doc)


def test_euclidean_from_coords_and_yaml():
    g = load_graph("vertices:\n  - {id: a, coords: [0, 0]}\n  - {id: b, coords: [3, 4]}\nedges: []\n")
    assert g.d("a", "b") == 5.0


def test_document_order_preserved():
    g = load_graph({"vertices": ["z", "a", "m"], "edges": [{"id": "y", "src": "a", "rng": "z"}, {"id": "b", "src": "z", "rng": "m"}]})
    assert g.vertex_list == ("z", "a", "m") and g.edges == ("y", "b")


def test_round_trip(orbit_graph):
    assert load_graph(graph_to_dict(orbit_graph)) == orbit_graph


def test_validate_loop(loop_graph):
    rep = validate(loop_graph)
    assert rep.sinks == () and rep.sources == () and rep.s_injective and rep.regular_vertices == ("v",)


def test_validate_orbit_example(orbit_graph):
    rep = validate(orbit_graph)
    assert rep.sinks == ("w",)
    assert not rep.s_injective
    e, f = rep.s_witness
    assert e != f and orbit_graph.src[e] == orbit_graph.src[f]


def test_validate_compactified_shift():
    rep = validate(compactified_shift_graph(5))
    assert rep.sinks == () and rep.s_injective
    # the truncation leaves the top vertex without an incoming edge
    assert rep.sources == ("5",)


def test_enumerate_paths_examples(loop_graph, orbit_graph):
    assert [p.edges for p in enumerate_paths(loop_graph, 3)] == [("e", "e", "e")]
    assert sorted(p.edges for p in enumerate_paths(orbit_graph, 2)) == [("e", "e"), ("f", "e"), ("g", "e")]
    zero = enumerate_paths(orbit_graph, 0)
    assert [p.source for p in zero] == ["v", "w"] and all(len(p) == 0 for p in zero)


def test_enumerate_paths_composable(orbit_graph):
    for n in range(1, 5):
        for p in enumerate_paths(orbit_graph, n):
            assert all(orbit_graph.src[a] == orbit_graph.rng[b] for a, b in zip(p.edges, p.edges[1:]))
            assert p.source == orbit_graph.src[p.edges[-1]] and p.range == orbit_graph.rng[p.edges[0]]


@st.composite
def small_graphs(draw, max_v=5, max_e=12):
    n = draw(st.integers(1, max_v))
    m = draw(st.integers(0, max_e))
    verts = [f"v{i}" for i in range(n)]
    pairs = draw(st.lists(st.tuples(st.integers(0, n - 1), st.integers(0, n - 1)), min_size=m, max_size=m))
    edges = tuple(f"e{k}" for k in range(m))
    return TopGraph(
        discrete_metric(verts),
        edges,
        {e: verts[p[0]] for e, p in zip(edges, pairs)},
        {e: verts[p[1]] for e, p in zip(edges, pairs)},
    )


@settings(max_examples=60, deadline=None)
@given(small_graphs(), st.integers(0, 3), st.integers(0, 3))
def test_path_concatenation(g, m, n):
    """Paths of length m+n are exactly the composable pairs (m-path, n-path)."""
    if m == 0 or n == 0:
        return
    long = {p.edges for p in enumerate_paths(g, m + n)}
    glued = {
        a.edges + b.edges for a in enumerate_paths(g, m) for b in enumerate_paths(g, n) if a.source == b.range
    }
    assert long == glued


@settings(max_examples=60, deadline=None)
@given(small_graphs())
def test_sinks_independent_scan(g):
    rep = validate(g)
    emitting = {g.src[e] for e in g.edges}
    assert set(rep.sinks) == {v for v in g.vertex_list if v not in emitting}
    assert set(rep.regular_vertices) == {g.rng[e] for e in g.edges}
    assert not set(rep.sinks) & emitting


def test_circle_rotation_discretization():
    g = discretize(CircleRotation(2 * math.pi * (math.sqrt(5) - 1) / 2), 8)
    assert len(g.vertex_list) == 8 and len(g.edges) == 8
    assert len(set(g.src.values())) == 8  # src is a bijection
    assert g.d("x0", "x4") == pytest.approx(math.pi)


def test_compactified_shift_n2():
    g = discretize(CompactifiedIntegerShift(2))
    assert set(g.vertex_list) == {"-2", "-1", "0", "1", "2", "-inf", "+inf"}
    assert len(g.edges) == 7
    assert g.d("-inf", "+inf") == pytest.approx(math.pi)
    assert g.d("0", "1") == pytest.approx(math.atan(1))


def test_compactified_shift_n0():
    g = compactified_shift_graph(0)
    assert len(g.vertex_list) == 3 and len(g.edges) == 3
    assert {g.src[e] for e in g.edges} == {"0", "-inf", "+inf"}


def test_explicit_map_builder():
    space = discrete_metric(["a", "b"])
    g = discretize(ExplicitMap(space, {"a": "b", "b": "b"}))
    assert g.src == {"a": "b", "b": "b"} and g.rng == {"a": "a", "b": "b"}


def test_resolution_guard():
    with pytest.raises(ValueError):
        discretize(CircleRotation(1.0), 2)


def test_metric_axioms_of_builders():
    for space in (arctan_metric(["-inf", "-3", "0", "7", "+inf"]), discretize(CircleRotation(0.3), 50).vertices):
        check_metric(space.points, space.dist)


def test_sampled_metric_check_large():
    rng = np.random.default_rng(1)
    pts = rng.random((80, 2))
    d = np.linalg.norm(pts[:, None] - pts[None], axis=-1)
    check_metric([str(i) for i in range(80)], d)
    d[3, 5] = d[5, 3] = 10.0
    with pytest.raises(MetricError, match="triangle"):
        check_metric([str(i) for i in range(80)], d)
