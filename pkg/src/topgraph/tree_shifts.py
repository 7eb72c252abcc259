"""Weighted shifts on finite directed trees.

Every quantity here is a per-vertex formula in the child structure of the
tree.  ``dense_matrix`` builds the explicit matrix so the formulas can be
checked against ordinary linear algebra.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Hashable, Mapping

import numpy as np

from .errors import CapacityError
from .graph_model import MetricSpace, TopGraph, discrete_metric

DENSE_CAP = 2000
RANK_TOL = 1e-9


@dataclass(frozen=True)
class TreeViolation:
    kind: str  # "loop" | "rng-not-injective" | "disconnected"
    detail: tuple

    def __str__(self):
        if self.kind == "loop":
            return "has loops: cycle through edges " + " -> ".join(map(str, self.detail))
        if self.kind == "rng-not-injective":
            return f"rng not injective: edges {self.detail[0]!r} and {self.detail[1]!r} share a range"
        return "disconnected: component " + ", ".join(map(str, self.detail))


@dataclass(frozen=True, eq=False)
class DirectedTree:
    graph: TopGraph
    parent: Mapping[Hashable, Hashable | None]
    children: Mapping[Hashable, tuple]

    @property
    def vertices(self) -> tuple:
        return self.graph.vertex_list

    @property
    def roots(self) -> tuple:
        return tuple(v for v in self.vertices if self.parent[v] is None)


def _find_cycle(g: TopGraph) -> list | None:
    """Return the edges of some directed cycle in traversal order, or None."""
    WHITE, GREY, BLACK = 0, 1, 2
    colour = {v: WHITE for v in g.vertex_list}
    for start in g.vertex_list:
        if colour[start] != WHITE:
            continue
        colour[start] = GREY
        # frames: (vertex, out-edge iterator, edge used to enter vertex)
        stack = [(start, iter(g.out_edges(start)), None)]
        while stack:
            v, it, _ = stack[-1]
            e = next(it, None)
            if e is None:
                colour[v] = BLACK
                stack.pop()
                continue
            w = g.rng[e]
            if colour[w] == GREY:
                cycle = [e]
                for u, _, into in reversed(stack):
                    if u == w:
                        break
                    cycle.append(into)
                return cycle[::-1]
            if colour[w] == WHITE:
                colour[w] = GREY
                stack.append((w, iter(g.out_edges(w)), e))
    return None


def _components(g: TopGraph) -> list[list]:
    parent = {v: v for v in g.vertex_list}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for e in g.edges:
        a, b = find(g.src[e]), find(g.rng[e])
        if a != b:
            parent[a] = b
    groups: dict = {}
    for v in g.vertex_list:
        groups.setdefault(find(v), []).append(v)
    return list(groups.values())


def check_tree(g: TopGraph) -> DirectedTree | list[TreeViolation]:
    """Accept ``g`` as a directed tree or list what is wrong with it."""
    violations = []
    cycle = _find_cycle(g)
    if cycle is not None:
        violations.append(TreeViolation("loop", tuple(cycle)))
    seen: dict = {}
    for e in g.edges:
        w = g.rng[e]
        if w in seen:
            violations.append(TreeViolation("rng-not-injective", (seen[w], e)))
            break
        seen[w] = e
    comps = _components(g)
    if len(comps) > 1:
        violations.append(TreeViolation("disconnected", tuple(comps[1])))
    if violations:
        return violations
    parent = {v: None for v in g.vertex_list}
    children: dict = {v: [] for v in g.vertex_list}
    for e in g.edges:
        parent[g.rng[e]] = g.src[e]
        children[g.src[e]].append(g.rng[e])
    return DirectedTree(g, parent, {v: tuple(c) for v, c in children.items()})


def tree_from_parents(parents: Mapping, vertices=None, metric: MetricSpace | None = None) -> DirectedTree:
    """Build a tree from a child -> parent table (``None`` marks the root)."""
    verts = tuple(vertices) if vertices is not None else tuple(parents)
    space = metric if metric is not None else discrete_metric(verts)
    edges, src, rng = [], {}, {}
    for v in verts:
        p = parents.get(v)
        if p is not None:
            e = f"{p}->{v}"
            edges.append(e)
            src[e], rng[e] = p, v
    result = check_tree(TopGraph(space, tuple(edges), src, rng))
    if isinstance(result, list):
        raise ValueError("; ".join(map(str, result)))
    return result


@dataclass(frozen=True, eq=False)
class WeightedShift:
    tree: DirectedTree
    weights: np.ndarray

    @classmethod
    def of(cls, tree: DirectedTree, weights) -> "WeightedShift":
        verts = tree.vertices
        if isinstance(weights, Mapping):
            w = np.array([complex(weights.get(v, 0)) for v in verts])
        else:
            w = np.asarray(weights, dtype=complex).copy()
            if w.shape != (len(verts),):
                raise ValueError(f"expected {len(verts)} weights")
        w.setflags(write=False)
        return cls(tree, w)

    @property
    def vertices(self) -> tuple:
        return self.tree.vertices


@dataclass(frozen=True)
class ShiftAnalysis:
    norm: float
    injective: bool
    bounded_below: float | None
    closed_range: bool
    range_lower_bound: float
    ker_dim: int
    coker_dim: int
    index: int
    surjective: bool
    X_set: tuple

    def to_dict(self) -> dict:
        return {
            "norm": self.norm,
            "injective": self.injective,
            "bounded_below": self.bounded_below,
            "closed_range": self.closed_range,
            "range_lower_bound": None if math.isinf(self.range_lower_bound) else self.range_lower_bound,
            "ker_dim": self.ker_dim,
            "coker_dim": self.coker_dim,
            "index": self.index,
            "surjective": self.surjective,
            "X_set": list(self.X_set),
        }


def _parent_index(S: WeightedShift) -> np.ndarray:
    idx = S.tree.graph.vertices.index
    return np.array(
        [-1 if S.tree.parent[v] is None else idx(S.tree.parent[v]) for v in S.vertices], dtype=int
    )


def shift_apply(S: WeightedShift, f) -> np.ndarray:
    """``(S f)(v) = lambda_v f(parent(v))``, zero at the root."""
    f = np.asarray(f, dtype=complex)
    if f.shape != (len(S.vertices),):
        raise ValueError(f"vector has shape {f.shape}, tree has {len(S.vertices)} vertices")
    par = _parent_index(S)
    out = np.zeros_like(f)
    has = par >= 0
    out[has] = S.weights[has] * f[par[has]]
    return out


def shift_adjoint_apply(S: WeightedShift, f) -> np.ndarray:
    f = np.asarray(f, dtype=complex)
    if f.shape != (len(S.vertices),):
        raise ValueError(f"vector has shape {f.shape}, tree has {len(S.vertices)} vertices")
    par = _parent_index(S)
    out = np.zeros_like(f)
    has = par >= 0
    np.add.at(out, par[has], np.conj(S.weights[has]) * f[has])
    return out


def column_norms_sq(S: WeightedShift) -> np.ndarray:
    """``||S delta_v||^2 = sum over children w of |lambda_w|^2`` for each vertex."""
    par = _parent_index(S)
    out = np.zeros(len(S.vertices))
    has = par >= 0
    np.add.at(out, par[has], np.abs(S.weights[has]) ** 2)
    return out


def shift_norm(S: WeightedShift) -> float:
    c = column_norms_sq(S)
    return float(math.sqrt(c.max())) if c.size else 0.0


def analyze(S: WeightedShift) -> ShiftAnalysis:
    verts = S.vertices
    tree = S.tree
    g = tree.graph
    idx = g.vertices.index
    cn = column_norms_sq(S)
    nonzero_child = np.zeros(len(verts), dtype=bool)
    for v in verts:
        nonzero_child[idx(v)] = any(S.weights[idx(w)] != 0 for w in tree.children[v])
    X = tuple(v for v, x in zip(verts, nonzero_child) if x)
    ker_dim = len(verts) - len(X)
    n_children = {v: len(tree.children[v]) for v in verts}
    unranged = sum(1 for v in verts if tree.parent[v] is None)
    coker_dim = (
        sum(n_children[v] - 1 for v in verts if nonzero_child[idx(v)])
        + sum(n_children[v] for v in verts if not nonzero_child[idx(v)])
        + unranged
    )
    norms = np.sqrt(cn)
    eps = float(norms.min()) if norms.size else math.inf
    bounded_below = eps if eps > 0 else None
    in_X = norms[nonzero_child]
    range_lb = float(in_X.min()) if in_X.size else math.inf
    return ShiftAnalysis(
        norm=shift_norm(S),
        injective=ker_dim == 0,
        bounded_below=bounded_below,
        closed_range=range_lb > 0,
        range_lower_bound=range_lb,
        ker_dim=ker_dim,
        coker_dim=coker_dim,
        index=ker_dim - coker_dim,
        surjective=coker_dim == 0,
        X_set=X,
    )


def surjective_by_structure(S: WeightedShift) -> bool | None:
    """Surjectivity read off the tree shape; only meaningful when bounded below.

    Returns None when the shift is not bounded below.
    """
    if analyze(S).bounded_below is None:
        return None
    tree = S.tree
    r_onto = all(tree.parent[v] is not None for v in tree.vertices)
    s_injective = all(len(c) <= 1 for c in tree.children.values())
    return r_onto and s_injective


def dense_matrix(S: WeightedShift) -> np.ndarray:
    """``M[w, u] = lambda_w`` when ``parent(w) == u``; rows and columns in vertex order."""
    n = len(S.vertices)
    if n > DENSE_CAP:
        raise CapacityError(f"{n} vertices exceeds the dense cap of {DENSE_CAP}")
    M = np.zeros((n, n), dtype=complex)
    par = _parent_index(S)
    for w in range(n):
        if par[w] >= 0:
            M[w, par[w]] = S.weights[w]
    return M


# -- dense oracles ------------------------------------------------------------


def dense_rank(M: np.ndarray, tol: float = RANK_TOL) -> int:
    if M.size == 0:
        return 0
    return int((np.linalg.svd(M, compute_uv=False) > tol).sum())


def dense_report(M: np.ndarray, tol: float = RANK_TOL) -> dict:
    n = M.shape[0]
    rank = dense_rank(M, tol)
    return {
        "norm": float(np.linalg.norm(M, 2)) if n else 0.0,
        "ker_dim": n - rank,
        "coker_dim": n - rank,
        "injective": rank == n,
        "surjective": rank == n,
    }


def random_tree(rng: np.random.Generator, n: int) -> DirectedTree:
    """Random recursive tree on ``n`` vertices, labels shuffled."""
    labels = [f"t{k}" for k in rng.permutation(n)]
    parents = {labels[0]: None}
    for k in range(1, n):
        parents[labels[k]] = labels[int(rng.integers(0, k))]
    order = [labels[k] for k in rng.permutation(n)]
    return tree_from_parents(parents, order)


WEIGHT_CHOICES = (0, 1, -1, 1j, -1j, 0.5)


def random_weights(rng: np.random.Generator, tree: DirectedTree, choices=WEIGHT_CHOICES) -> np.ndarray:
    vals = np.asarray(choices, dtype=complex)
    return vals[rng.integers(0, len(vals), len(tree.vertices))]
