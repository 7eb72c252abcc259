import math

import numpy as np
import pytest

from topgraph.batteries import random_no_sink_graph, random_permutation_graph, random_plane_metric
from topgraph.dynamics import exact_eps, graph_shift_system, is_pseudoperiodic
from topgraph.finiteness import (
    CONSISTENT,
    INCONCLUSIVE,
    INFINITE,
    brute_force_pseudoloop,
    decide,
    pseudoloop_at,
)
from topgraph.graph_model import (
    TopGraph,
    circle_rotation_graph,
    compactified_shift_graph,
    graph_to_dict,
    load_graph,
)


def test_loop_graph_pseudoloop(loop_graph):
    for eps in (1e-9, 0.5, 3):
        assert pseudoloop_at(loop_graph, "v", eps).edges == ("e",)


def test_compactified_shift_no_pseudoloop_at_zero():
    g = compactified_shift_graph(50)
    assert pseudoloop_at(g, "0", 0.05) is None


def test_circle_rotation_pseudoloops():
    g = circle_rotation_graph(2 * math.pi * (math.sqrt(5) - 1) / 2, 200)
    eps = 2 * (2 * math.pi / 200)
    for v in g.vertex_list[::17]:
        w = pseudoloop_at(g, v, eps)
        assert w is not None and w.is_valid(g)


def test_eps_positive(loop_graph):
    with pytest.raises(ValueError):
        pseudoloop_at(loop_graph, "v", 0)


def test_decide_loop_exact(loop_graph):
    assert decide(loop_graph, exact=True).verdict == CONSISTENT


def test_decide_compactified_shift():
    v = decide(compactified_shift_graph(50), [0.05])
    assert v.verdict == INFINITE and "0" in v.failing[0.05]
    assert v.obstruction.kind == "source"


def test_decide_branching(data_dir):
    g = load_graph((data_dir / "loop_and_exit.graph").read_text())
    v = decide(g, [0.5])
    assert v.verdict == INFINITE and not v.validation.s_injective
    assert set(v.validation.s_witness) == {"lv", "vw"}
    ob = v.obstruction
    assert ob.kind == "branching" and ob.vertex == "v" and len(ob.detail["children"]) == 2


def test_decide_with_sinks_is_inconclusive(orbit_graph):
    v = decide(orbit_graph, [0.5])
    assert v.verdict == INCONCLUSIVE and "sinks" in v.reasons[0]


def test_noncompact_flag_is_inconclusive(loop_graph):
    doc = graph_to_dict(loop_graph) | {"compact": False}
    assert decide(load_graph(doc), exact=True).verdict == INCONCLUSIVE


def test_decide_needs_eps(loop_graph):
    with pytest.raises(ValueError):
        decide(loop_graph, [])


def test_witnesses_valid_and_monotone():
    rng = np.random.default_rng(0)
    for _ in range(30):
        g = random_no_sink_graph(rng, 6, 12, metric=random_plane_metric)
        prev = None
        for eps in (0.05, 0.1, 0.3, 0.6, 1.5):
            found = {v: pseudoloop_at(g, v, eps) for v in g.vertex_list}
            for v, w in found.items():
                if w is not None:
                    assert w.is_valid(g) and w.base == v and w.source(g) == v
            if prev is not None:
                assert all(found[v] is not None for v, w in prev.items() if w is not None)
            prev = found


def _on_exact_cycle(g, v, max_len):
    """Whether some closed edge walk of length <= max_len starts at v."""
    frontier = {v}
    for _ in range(max_len):
        frontier = {g.rng[e] for u in frontier for e in g.out_edges(u)}
        if v in frontier:
            return True
    return False


def test_exact_mode_is_exact_cycles():
    rng = np.random.default_rng(1)
    for _ in range(30):
        g = random_no_sink_graph(rng, 6, 12, metric=random_plane_metric)
        eps = exact_eps(g.vertices)
        for v in g.vertex_list:
            assert (pseudoloop_at(g, v, eps) is not None) == _on_exact_cycle(g, v, len(g.edges))


def test_bfs_matches_brute_force_small():
    rng = np.random.default_rng(2)
    for _ in range(20):
        g = random_no_sink_graph(rng, 5, 10, metric=random_plane_metric)
        for eps in (0.1, 0.5, 1.0):
            for v in g.vertex_list:
                w = pseudoloop_at(g, v, eps)
                bfs = None if w is None or len(w.edges) > 6 else len(w.edges)
                assert bfs == brute_force_pseudoloop(g, v, eps, 6)


def test_agrees_with_dynamics_on_permutation_graphs():
    rng = np.random.default_rng(3)
    for _ in range(30):
        g = random_permutation_graph(rng)
        g = TopGraph(random_plane_metric(g.vertex_list, rng), g.edges, g.src, g.rng)
        sys = graph_shift_system(g)
        for eps in (0.1, 0.4, 1.0):
            for v in g.vertex_list:
                assert (pseudoloop_at(g, v, eps) is None) == (is_pseudoperiodic(sys, eps, v) is None)


def test_verdict_serialises(loop_graph):
    d = decide(loop_graph, [0.25], exact=True).to_dict()
    assert d["eps"] == [0.25] and d["exact_eps"] == 1.0
    assert d["pseudoloops"] == {"0.25": {"v": ["e"]}, "exact": {"v": ["e"]}}
