import itertools

import numpy as np
import pytest

from topgraph.batteries import random_permutation_graph, random_surjective_system
from topgraph.dynamics import (
    FiniteDynSystem,
    delta_schedule,
    exact_eps,
    graph_shift_system,
    inverse_limit,
    is_pseudoperiodic,
    load_system,
    pseudoperiodic_points,
    relation_graph,
    rho_range,
    sigma_is_bijection,
    verify_lift,
    verify_rho_identity,
)
from topgraph.errors import MetricError, PreconditionError, SchemaError
from topgraph.graph_model import MetricSpace, compactified_shift_graph, discrete_metric, euclidean_metric
from topgraph.orbit_rep import enumerate_lassos, lasso


def identity(n=4):
    pts = [f"p{i}" for i in range(n)]
    return FiniteDynSystem(discrete_metric(pts), {p: p for p in pts})


def rotation3():
    return FiniteDynSystem(discrete_metric(["a", "b", "c"]), {"a": "b", "b": "c", "c": "a"})


def walk():
    pts = [str(i) for i in range(1, 6)]
    return FiniteDynSystem(euclidean_metric(pts, [[i] for i in range(1, 6)]), {str(i): str(min(i + 1, 5)) for i in range(1, 6)})


def test_relation_graph_examples():
    for eps in (1e-6, 0.5, 10):
        assert all(x in ys for x, ys in relation_graph(identity(), eps).items())
    assert relation_graph(rotation3(), 0.5) == {"a": ("b",), "b": ("c",), "c": ("a",)}
    assert relation_graph(walk(), 0.5) == {"1": ("2",), "2": ("3",), "3": ("4",), "4": ("5",), "5": ("5",)}


def test_pseudoperiodic_examples():
    assert is_pseudoperiodic(identity(), 0.1, "p2").points == ("p2",)
    w = is_pseudoperiodic(rotation3(), 0.5, "b")
    assert len(w.points) == 3 and w.is_valid(rotation3())
    assert is_pseudoperiodic(walk(), 0.5, "1") is None
    assert is_pseudoperiodic(walk(), 0.5, "5").points == ("5",)


def test_eps_must_be_positive():
    with pytest.raises(ValueError):
        relation_graph(identity(), 0)


def test_inverse_limit_examples():
    assert inverse_limit(identity(), 3).sequences == tuple((p, p, p) for p in identity().points)
    lim = inverse_limit(rotation3(), 2)
    assert len(lim.sequences) == 3 and all(s[0] == rotation3().f(s[1]) for s in lim.sequences)
    pts = [str(i) for i in range(4)]
    doubling = FiniteDynSystem(discrete_metric(pts), {str(i): str(2 * i % 4) for i in range(4)})
    with pytest.raises(PreconditionError, match="not surjective"):
        inverse_limit(doubling, 2)


def test_inverse_limit_of_bijection():
    rng = np.random.default_rng(0)
    for _ in range(20):
        sys = random_surjective_system(rng)
        lim = inverse_limit(sys, 5)
        assert len(lim.sequences) == len(sys.points)
        for s in lim.sequences:
            assert all(s[n] == sys.f(s[n + 1]) for n in range(4))
        hat = lim.as_system()
        assert hat.surjective
        a, b = lim.sequences[0], lim.sequences[-1]
        assert hat.space.d(lim.label(a), lim.label(b)) == pytest.approx(lim.metric(a, b), abs=1e-15)


def test_verify_lift_examples():
    rep = verify_lift(identity(), 0.2, 4)
    assert rep.base_all_pseudoperiodic and rep.lifted_all_pseudoperiodic and rep.ok
    rep = verify_lift(rotation3(), 0.4, 3)
    assert rep.base_all_pseudoperiodic and rep.lifted_all_pseudoperiodic and rep.ok
    with pytest.raises(PreconditionError):
        verify_lift(FiniteDynSystem(walk().space.normalized(), walk().mapping), 0.1, 3)


def test_verify_lift_requires_normalized_metric():
    sys = FiniteDynSystem(MetricSpace(("a", "b"), np.array([[0, 3.0], [3.0, 0]])), {"a": "b", "b": "a"})
    with pytest.raises(MetricError):
        verify_lift(sys, 0.1, 2)
    assert verify_lift(sys.normalized(), 0.1, 2).ok


def test_delta_schedule_property():
    rng = np.random.default_rng(1)
    for _ in range(20):
        sys = random_surjective_system(rng)
        D, idx = sys.space.dist, sys.map_idx
        deltas = delta_schedule(sys, 0.3, 6)
        assert deltas[0] == 0.3 and all(b <= a for a, b in zip(deltas, deltas[1:]))
        for a, b in zip(deltas, deltas[1:]):
            close = D < b
            assert np.all(D[np.ix_(idx, idx)][close] < a)


def _brute_pseudoperiodic(sys, eps, x, max_len):
    pts = sys.points
    for n in range(1, max_len + 1):
        for rest in itertools.product(pts, repeat=n - 1):
            cyc = (x,) + rest
            if all(sys.space.d(sys.f(cyc[i]), cyc[(i + 1) % n]) < eps for i in range(n)):
                return n
    return None


def test_bfs_matches_brute_force():
    rng = np.random.default_rng(2)
    for _ in range(25):
        n = int(rng.integers(1, 7))
        pts = [f"p{i}" for i in range(n)]
        space = euclidean_metric(pts, rng.random((n, 2)).tolist())
        sys = FiniteDynSystem(space, {p: pts[int(rng.integers(0, n))] for p in pts})
        for eps in (0.1, 0.3, 0.6):
            mask = pseudoperiodic_points(sys, eps)
            for i, x in enumerate(pts):
                w = is_pseudoperiodic(sys, eps, x)
                bfs = None if w is None else len(w.points)
                assert bfs == _brute_pseudoperiodic(sys, eps, x, 6)
                assert (w is not None) == bool(mask[i])
                if w is not None:
                    assert w.is_valid(sys)


def test_monotone_in_eps():
    rng = np.random.default_rng(3)
    for _ in range(20):
        sys = random_surjective_system(rng)
        masks = [pseudoperiodic_points(sys, e) for e in (0.05, 0.1, 0.2, 0.4)]
        for a, b in zip(masks, masks[1:]):
            assert np.all(b[a])


def test_exact_eps_means_equality():
    sys = walk()
    eps = exact_eps(sys.space)
    R = relation_graph(sys, eps)
    assert all(ys == (sys.f(x),) for x, ys in R.items())


def test_graph_shift_system_examples(loop_graph, orbit_graph):
    sys = graph_shift_system(loop_graph)
    assert sys.mapping == {"v": "v"}
    shift = graph_shift_system(compactified_shift_graph(3))
    assert shift.mapping["0"] == "-1" and shift.mapping["-3"] == "-inf" and shift.mapping["+inf"] == "+inf"
    assert not shift.surjective
    with pytest.raises(PreconditionError, match="not injective"):
        graph_shift_system(orbit_graph)


def test_rho_identity_examples(loop_graph, orbit_graph):
    assert verify_rho_identity(loop_graph, lasso(loop_graph, (), ("e",)), 5)
    assert verify_rho_identity(orbit_graph, lasso(orbit_graph, ("f",), ("e",)), 2)


def test_rho_and_sigma_on_permutation_graphs():
    rng = np.random.default_rng(4)
    for _ in range(20):
        g = random_permutation_graph(rng)
        paths = enumerate_lassos(g, 6)
        assert sigma_is_bijection(g, paths)
        for alpha in paths:
            assert all(verify_rho_identity(g, alpha, n) for n in range(1, rho_range(alpha) + 1))


def test_sigma_not_bijection_when_s_not_injective(two_loops):
    assert not sigma_is_bijection(two_loops, enumerate_lassos(two_loops, 3))


def test_load_system_and_errors(data_dir):
    sys = load_system((data_dir / "rotation3.system").read_text())
    assert sys.mapping == {"a": "b", "b": "c", "c": "a"} and sys.surjective
    with pytest.raises(SchemaError, match="not total"):
        load_system({"points": ["a", "b"], "map": {"a": "b"}})
    with pytest.raises(SchemaError, match="unknown keys"):
        load_system({"points": ["a"], "map": {"a": "a"}, "extra": 1})
