"""Seeded randomized test batteries shared by the CLI and the test-suite.

Each battery returns a plain dict with sorted keys and only JSON types, so
running it twice with the same seed gives byte-identical serialized output.
"""

from __future__ import annotations

import math

import numpy as np

from .correspondence import EdgeFunction, VertexFunction
from .dynamics import (
    FiniteDynSystem,
    rho_range,
    sigma_is_bijection,
    verify_lift,
    verify_rho_identity,
)
from .finiteness import brute_force_pseudoloop, pseudoloop_at
from .graph_model import MetricSpace, TopGraph, discrete_metric, euclidean_metric
from .orbit_rep import (
    build_orbit_tree,
    enumerate_lassos,
    random_lasso,
    unit_circle_sample,
    verify_relations,
)
from .tree_shifts import (
    WeightedShift,
    analyze,
    dense_matrix,
    dense_report,
    random_tree,
    random_weights,
    shift_apply,
)

BATTERIES = ("shift-oracle", "bounded-below", "orbit-relations", "pseudoloop-bruteforce", "lift", "rho")

DEFAULT_COUNTS = {
    "shift-oracle": 200,
    "bounded-below": 200,
    "orbit-relations": 50,
    "pseudoloop-bruteforce": 200,
    "lift": 100,
    "rho": 50,
}

NORM_TOL = 1e-9
RELATION_TOL = 1e-12
BELOW_TOL = 1e-12


# -- random inputs -----------------------------------------------------------


def random_no_sink_graph(rng: np.random.Generator, max_vertices: int = 8, max_edges: int = 16, metric=None) -> TopGraph:
    """Random graph in which every vertex emits at least one edge."""
    n = int(rng.integers(1, max_vertices + 1))
    m = int(rng.integers(n, max(n, max_edges) + 1))
    verts = [f"v{i}" for i in range(n)]
    srcs = list(range(n)) + [int(x) for x in rng.integers(0, n, m - n)]
    rngs = [int(x) for x in rng.integers(0, n, m)]
    edges = [f"e{k}" for k in range(m)]
    space = metric(verts, rng) if metric is not None else discrete_metric(verts)
    return TopGraph(
        space,
        tuple(edges),
        {e: verts[srcs[k]] for k, e in enumerate(edges)},
        {e: verts[rngs[k]] for k, e in enumerate(edges)},
    )


def random_plane_metric(verts, rng: np.random.Generator) -> MetricSpace:
    return euclidean_metric(verts, rng.random((len(verts), 2)).tolist())


def random_permutation_graph(rng: np.random.Generator, max_vertices: int = 8) -> TopGraph:
    """Graph with ``s`` injective, ``r`` surjective and no sinks.

    On a finite vertex set these force one edge out of and one edge into each
    vertex, so ``r o s^-1`` is a permutation.
    """
    n = int(rng.integers(1, max_vertices + 1))
    verts = [f"v{i}" for i in range(n)]
    perm = rng.permutation(n)
    edges = tuple(f"e{i}" for i in range(n))
    return TopGraph(
        discrete_metric(verts),
        edges,
        {f"e{i}": verts[i] for i in range(n)},
        {f"e{i}": verts[int(perm[i])] for i in range(n)},
    )


def random_surjective_system(rng: np.random.Generator, max_points: int = 20) -> FiniteDynSystem:
    """Random permutation of a random planar point cloud, normalized to diameter 1."""
    n = int(rng.integers(1, max_points + 1))
    pts = [f"p{i}" for i in range(n)]
    space = euclidean_metric(pts, rng.random((n, 2)).tolist()).normalized()
    perm = rng.permutation(n)
    return FiniteDynSystem(space, {pts[i]: pts[int(perm[i])] for i in range(n)})


def _integer_values(rng: np.random.Generator, size: int, lo: int = -3, hi: int = 3) -> np.ndarray:
    return rng.integers(lo, hi + 1, size).astype(complex)


# -- batteries ---------------------------------------------------------------


def shift_oracle(seed: int, count: int = 200, max_vertices: int = 40) -> dict:
    rng = np.random.default_rng(seed)
    worst_norm = 0.0
    mismatches = []
    for case in range(count):
        tree = random_tree(rng, int(rng.integers(1, max_vertices + 1)))
        S = WeightedShift.of(tree, random_weights(rng, tree))
        rep = analyze(S)
        dense = dense_report(dense_matrix(S))
        worst_norm = max(worst_norm, abs(rep.norm - dense["norm"]))
        for key in ("ker_dim", "coker_dim", "injective", "surjective"):
            if getattr(rep, key) != dense[key]:
                mismatches.append({"case": case, "field": key, "formula": getattr(rep, key), "dense": dense[key]})
    return {
        "battery": "shift-oracle",
        "seed": seed,
        "count": count,
        "max_norm_error": worst_norm,
        "norm_tol": NORM_TOL,
        "mismatches": mismatches,
        "ok": worst_norm <= NORM_TOL and not mismatches,
    }


def bounded_below(seed: int, count: int = 200, max_vertices: int = 40, vectors: int = 100) -> dict:
    """Lower bounds for ``||S f||``.

    Where a global bound ``eps`` is reported it is tested on random unit vectors.
    Every finite tree has a leaf, so it never occurs here; the battery also tests
    the bound ``||S f|| >= m ||f||`` for ``f`` supported on X, where ``m`` is the
    reported range lower bound, which is the estimate behind closed range.
    """
    rng = np.random.default_rng(seed)
    reported = 0
    worst_global = math.inf
    worst_range = math.inf
    failures = []
    for case in range(count):
        tree = random_tree(rng, int(rng.integers(1, max_vertices + 1)))
        S = WeightedShift.of(tree, random_weights(rng, tree))
        rep = analyze(S)
        n = len(tree.vertices)
        on_x = np.isin(np.array(tree.vertices, dtype=object), np.array(rep.X_set, dtype=object))
        for _ in range(vectors):
            f = rng.normal(size=n) + 1j * rng.normal(size=n)
            f /= np.linalg.norm(f)
            if rep.bounded_below is not None:
                gap = float(np.linalg.norm(shift_apply(S, f))) - rep.bounded_below
                worst_global = min(worst_global, gap)
                if gap < -BELOW_TOL:
                    failures.append({"case": case, "kind": "global", "gap": gap})
            if on_x.any():
                g = np.where(on_x, f, 0)
                g /= np.linalg.norm(g)
                gap = float(np.linalg.norm(shift_apply(S, g))) - rep.range_lower_bound
                worst_range = min(worst_range, gap)
                if gap < -BELOW_TOL:
                    failures.append({"case": case, "kind": "range", "gap": gap})
        reported += rep.bounded_below is not None
    return {
        "battery": "bounded-below",
        "seed": seed,
        "count": count,
        "vectors": vectors,
        "bounded_below_reported": int(reported),
        "min_global_gap": None if math.isinf(worst_global) else worst_global,
        "min_range_gap": None if math.isinf(worst_range) else worst_range,
        "tol": BELOW_TOL,
        "failures": failures[:20],
        "ok": not failures,
    }


Z_SAMPLES = (1, -1, 1j, -1j)


def orbit_relations(seed: int, count: int = 50, window: tuple = (-2, 2)) -> dict:
    rng = np.random.default_rng(seed)
    zs = Z_SAMPLES + (unit_circle_sample(7),)
    worst = 0.0
    cases = []
    for case in range(count):
        g = random_no_sink_graph(rng)
        alpha = random_lasso(g, rng)
        t = build_orbit_tree(g, alpha, *window)
        a = _integer_values(rng, len(g.vertex_list))
        receives = np.zeros(len(g.vertex_list), dtype=bool)
        receives[g.rng_idx] = True
        a[~receives] = 0  # covariance only holds for functions on the regular vertices
        a = VertexFunction(g, a)
        xi = EdgeFunction(g, _integer_values(rng, len(g.edges)))
        eta = EdgeFunction(g, _integer_values(rng, len(g.edges)))
        z = zs[case % len(zs)]
        rep = verify_relations(t, a, xi, eta, z)
        res = max(rep.toeplitz_module, rep.toeplitz_inner, rep.covariance, rep.gauge)
        worst = max(worst, res)
        cases.append({"case": case, "lasso": alpha.label(), "nodes": len(t), "interior": rep.interior_nodes, "max_residual": res})
    return {
        "battery": "orbit-relations",
        "seed": seed,
        "count": count,
        "window": list(window),
        "z": [[complex(z).real, complex(z).imag] for z in zs],
        "max_residual": worst,
        "tol": RELATION_TOL,
        "cases": cases,
        "ok": worst <= RELATION_TOL,
    }


EPS_SET = (0.1, 0.5, 1.0)


def pseudoloop_bruteforce(seed: int, count: int = 200, max_edges: int = 12, max_len: int = 6) -> dict:
    """BFS pseudoloops against exhaustive enumeration on random planar metrics."""
    rng = np.random.default_rng(seed)
    checked = 0
    mismatches = []
    for case in range(count):
        g = random_no_sink_graph(rng, max_vertices=6, max_edges=max_edges, metric=random_plane_metric)
        for eps in EPS_SET:
            for v in g.vertex_list:
                w = pseudoloop_at(g, v, eps)
                bfs = None if w is None else len(w.edges)
                if w is not None and not w.is_valid(g):
                    mismatches.append({"case": case, "eps": eps, "vertex": v, "problem": "invalid witness"})
                brute = brute_force_pseudoloop(g, v, eps, max_len)
                expected = bfs if bfs is not None and bfs <= max_len else None
                if brute != expected:
                    mismatches.append({"case": case, "eps": eps, "vertex": v, "bfs": bfs, "brute": brute})
                checked += 1
    return {
        "battery": "pseudoloop-bruteforce",
        "seed": seed,
        "count": count,
        "eps": list(EPS_SET),
        "max_len": max_len,
        "checked": checked,
        "mismatches": mismatches,
        "ok": not mismatches,
    }


LIFT_EPS = (0.1, 0.3)


def lift(seed: int, count: int = 100, depth: int = 6) -> dict:
    rng = np.random.default_rng(seed)
    failures = []
    tally = {"base_true": 0, "lifted_true": 0}
    for case in range(count):
        sys = random_surjective_system(rng)
        for eps in LIFT_EPS:
            rep = verify_lift(sys, eps, depth)
            tally["base_true"] += rep.base_all_pseudoperiodic
            tally["lifted_true"] += rep.lifted_all_pseudoperiodic
            if not rep.ok:
                failures.append({"case": case, "eps": eps} | rep.to_dict())
    return {
        "battery": "lift",
        "seed": seed,
        "count": count,
        "depth": depth,
        "eps": list(LIFT_EPS),
        "tally": tally,
        "failures": failures,
        "ok": not failures,
    }


def rho(seed: int, count: int = 50, max_size: int = 6) -> dict:
    rng = np.random.default_rng(seed)
    failures = []
    lassos_checked = 0
    for case in range(count):
        g = random_permutation_graph(rng)
        paths = enumerate_lassos(g, max_size)
        for alpha in paths:
            for n in range(1, rho_range(alpha) + 1):
                if not verify_rho_identity(g, alpha, n):
                    failures.append({"case": case, "lasso": alpha.label(), "n": n})
        if not sigma_is_bijection(g, paths):
            failures.append({"case": case, "problem": "sigma is not a bijection"})
        lassos_checked += len(paths)
    return {
        "battery": "rho",
        "seed": seed,
        "count": count,
        "max_size": max_size,
        "lassos_checked": lassos_checked,
        "failures": failures,
        "ok": not failures,
    }


RUNNERS = {
    "shift-oracle": shift_oracle,
    "bounded-below": bounded_below,
    "orbit-relations": orbit_relations,
    "pseudoloop-bruteforce": pseudoloop_bruteforce,
    "lift": lift,
    "rho": rho,
}


def run_battery(name: str, seed: int, count: int | None = None) -> dict:
    if name not in RUNNERS:
        raise KeyError(name)
    return RUNNERS[name](seed, DEFAULT_COUNTS[name] if count is None else count)

