"""Orbit trees of eventually periodic infinite paths and their representations.

An infinite path ``alpha = alpha(1) alpha(2) ...`` satisfies
``s(alpha(n)) == r(alpha(n + 1))``; ``alpha(1)`` is the range-most edge.  On a
finite graph we only handle lasso paths ``prefix . cycle^inf``, kept in a
canonical form (primitive cycle, shortest prefix) so equality is decidable.

The orbit tree collects, level by level, the paths ``beta sigma^k(alpha)`` with
``|beta| - k`` equal to the level.  Nodes are ``(path, level)`` pairs, the
parent of a node is its backward shift one level down, and a node's children
are the one-edge extensions on the range side.  Generators act as

* ``pi(a)``: diagonal, ``a(r(node))``;
* ``tau(xi)``: ``delta_gamma -> sum_{s(e) = r(gamma)} xi(e) delta_{e gamma}``.
"""

from __future__ import annotations

import cmath
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.sparse as sp

from .correspondence import (
    EdgeFunction,
    VertexFunction,
    inner_product,
    left_action,
    rank_one_decomposition,
)
from .errors import CapacityError, GraphMismatchError, PreconditionError
from .graph_model import Path, TopGraph

NODE_CAP = 200_000
RELATION_TOL = 1e-12
UNIT_TOL = 1e-12


# ---------------------------------------------------------------------------
# lasso paths
# ---------------------------------------------------------------------------


def _primitive(cycle: tuple) -> tuple:
    q = len(cycle)
    for p in range(1, q + 1):
        if q % p == 0 and cycle[:p] * (q // p) == cycle:
            return cycle[:p]
    return cycle


def _canonical(prefix: tuple, cycle: tuple) -> tuple[tuple, tuple]:
    cycle = _primitive(cycle)
    while prefix and prefix[-1] == cycle[-1]:
        prefix = prefix[:-1]
        cycle = (cycle[-1],) + cycle[:-1]
    return prefix, cycle


@dataclass(frozen=True)
class InfinitePath:
    """``prefix . cycle^inf`` in canonical form; build with :func:`lasso`."""

    prefix: tuple
    cycle: tuple

    def __post_init__(self):
        if not self.cycle:
            raise ValueError("cycle must be non-empty")
        p, c = _canonical(tuple(self.prefix), tuple(self.cycle))
        object.__setattr__(self, "prefix", p)
        object.__setattr__(self, "cycle", c)

    def edge(self, n: int):
        """``alpha(n)`` for ``n >= 1``."""
        if n < 1:
            raise ValueError("infinite paths are indexed from 1")
        p = len(self.prefix)
        if n <= p:
            return self.prefix[n - 1]
        return self.cycle[(n - p - 1) % len(self.cycle)]

    def first(self):
        return self.edge(1)

    def range(self, g: TopGraph):
        return g.rng[self.first()]

    @property
    def size(self) -> int:
        return len(self.prefix) + len(self.cycle)

    def label(self) -> str:
        head = ".".join(map(str, self.prefix))
        tail = "(" + ".".join(map(str, self.cycle)) + ")^inf"
        return f"{head}.{tail}" if head else tail


def lasso(g: TopGraph, prefix: Sequence, cycle: Sequence) -> InfinitePath:
    """Validate composability and return the canonical lasso ``prefix . cycle^inf``."""
    prefix, cycle = tuple(prefix), tuple(cycle)
    for e in prefix + cycle:
        if e not in g.src:
            raise ValueError(f"unknown edge {e!r}")
    if not cycle:
        raise ValueError("cycle must be non-empty")
    seq = prefix + cycle + cycle[:1]
    for a, b in zip(seq, seq[1:]):
        if g.src[a] != g.rng[b]:
            raise ValueError(f"edges {a!r}, {b!r} are not composable (s({a}) != r({b}))")
    return InfinitePath(prefix, cycle)


def sigma(alpha: InfinitePath) -> InfinitePath:
    """Backward shift: drop ``alpha(1)``."""
    if alpha.prefix:
        return InfinitePath(alpha.prefix[1:], alpha.cycle)
    return InfinitePath((), alpha.cycle[1:] + alpha.cycle[:1])


def sigma_power(alpha: InfinitePath, k: int) -> InfinitePath:
    p, q = len(alpha.prefix), len(alpha.cycle)
    if k <= p:
        return InfinitePath(alpha.prefix[k:], alpha.cycle)
    j = (k - p) % q
    return InfinitePath((), alpha.cycle[j:] + alpha.cycle[:j])


def prepend(g: TopGraph, beta: Path | Sequence, alpha: InfinitePath) -> InfinitePath:
    """``beta alpha``; requires ``s(beta) == r(alpha)``."""
    edges = tuple(beta.edges if isinstance(beta, Path) else beta)
    if not edges:
        return alpha
    for a, b in zip(edges, edges[1:]):
        if g.src[a] != g.rng[b]:
            raise ValueError(f"edges {a!r}, {b!r} are not composable")
    if g.src[edges[-1]] != alpha.range(g):
        raise ValueError(
            f"cannot prepend: s(beta) = {g.src[edges[-1]]!r} but r(alpha) = {alpha.range(g)!r}"
        )
    return InfinitePath(edges + alpha.prefix, alpha.cycle)


def _prepend_edge(e, alpha: InfinitePath) -> InfinitePath:
    # composability is guaranteed by the caller (e taken from s^-1(r(alpha)))
    return InfinitePath((e,) + alpha.prefix, alpha.cycle)


def enumerate_lassos(g: TopGraph, max_size: int) -> list[InfinitePath]:
    """All canonical lassos with ``len(prefix) + len(cycle) <= max_size``."""
    out: dict = {}
    # closed walks in written order: c1 c2 ... cq with s(c_i) = r(c_{i+1}) and s(c_q) = r(c_1)
    walks = [(e,) for e in g.edges]
    cycles = []
    for q in range(1, max_size + 1):
        for w in walks:
            if g.src[w[-1]] == g.rng[w[0]] and _primitive(w) == w:
                cycles.append(w)
        if q < max_size:
            walks = [w + (f,) for w in walks for f in g.in_edges(g.src[w[-1]])]
    for c in cycles:
        prefixes = [()]
        frontier = [()]
        for _ in range(max_size - len(c)):
            nxt = []
            for p in frontier:
                target = g.rng[p[0]] if p else g.rng[c[0]]
                for f in g.out_edges(target):
                    nxt.append((f,) + p)
            frontier = nxt
            prefixes.extend(nxt)
        for p in prefixes:
            alpha = InfinitePath(p, c)
            if alpha.prefix == p and alpha.cycle == c:
                out.setdefault(alpha, None)
    return list(out)


def random_lasso(g: TopGraph, rng: np.random.Generator, max_prefix: int = 3) -> InfinitePath:
    """Random lasso on a graph without sinks (forward random walks)."""
    start = g.vertex_list[int(rng.integers(0, len(g.vertex_list)))]
    walk, seen, v = [], {}, start
    while v not in seen:
        seen[v] = len(walk)
        outs = g.out_edges(v)
        if not outs:
            raise PreconditionError(f"random walk hit the sink {v!r}")
        e = outs[int(rng.integers(0, len(outs)))]
        walk.append(e)
        v = g.rng[e]
    loop = walk[seen[v]:]  # traversal order, starting and ending at v
    cycle = tuple(reversed(loop))
    tail, u = [], v
    for _ in range(int(rng.integers(0, max_prefix + 1))):
        outs = g.out_edges(u)
        e = outs[int(rng.integers(0, len(outs)))]
        tail.append(e)
        u = g.rng[e]
    # tail is traversal order from v; written order is reversed, and s(tail[0]) = v = r(cycle[0])
    return lasso(g, tuple(reversed(tail)), cycle)


# ---------------------------------------------------------------------------
# orbit trees
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class OrbitNode:
    path: InfinitePath
    level: int

    def label(self) -> str:
        return f"({self.path.label()}, {self.level})"


def _longest_forward(g: TopGraph, v, memo: dict, on_stack: set) -> float:
    """Length of the longest forward path from ``v``; inf if a cycle is reachable."""
    if v in memo:
        return memo[v]
    if v in on_stack:
        return float("inf")
    on_stack.add(v)
    best = 0.0
    for e in g.out_edges(v):
        best = max(best, 1 + _longest_forward(g, g.rng[e], memo, on_stack))
        if best == float("inf"):
            break
    on_stack.discard(v)
    memo[v] = best
    return best


def exit_depth(g: TopGraph, alpha: InfinitePath) -> float:
    """Longest path that leaves the cycle of ``alpha`` through a non-cycle edge.

    Finite exactly when every level set of the orbit tree is finite.
    """
    p, q = len(alpha.prefix), len(alpha.cycle)
    memo: dict = {}
    depth = 0.0
    for k in range(p + 1, p + q + 1):
        ek = alpha.edge(k)
        for e in g.out_edges(g.src[ek]):
            if e != ek:
                depth = max(depth, 1 + _longest_forward(g, g.rng[e], memo, set()))
    return depth


def default_k_bound(g: TopGraph, alpha: InfinitePath, n_min: int) -> tuple[int, bool]:
    """Return ``(K, exact)``; with ``exact`` the window levels equal the full level sets."""
    depth = exit_depth(g, alpha)
    if depth == float("inf"):
        return max(0, -n_min), False
    return int(max(len(alpha.prefix), depth - n_min, -n_min, 0)), True


@dataclass(frozen=True, eq=False)
class OrbitTree:
    graph: TopGraph
    base: InfinitePath
    n_min: int
    n_max: int
    k_bound: int
    exact: bool
    nodes: tuple
    parent: np.ndarray = field(repr=False)
    levels: np.ndarray = field(repr=False)
    interior: np.ndarray = field(repr=False)
    range_idx: np.ndarray = field(repr=False)
    first_edge_idx: np.ndarray = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "_index", {n: i for i, n in enumerate(self.nodes)})

    def __len__(self):
        return len(self.nodes)

    def index(self, node: OrbitNode) -> int:
        return self._index[node]

    def level_nodes(self, n: int) -> list[OrbitNode]:
        return [node for node in self.nodes if node.level == n]

    def children(self, i: int) -> np.ndarray:
        return np.flatnonzero(self.parent == i)

    @property
    def interior_idx(self) -> np.ndarray:
        return np.flatnonzero(self.interior)


def build_orbit_tree(
    g: TopGraph,
    alpha: InfinitePath,
    n_min: int,
    n_max: int,
    *,
    k_bound: int | None = None,
    node_cap: int = NODE_CAP,
) -> OrbitTree:
    """Truncated orbit tree of ``alpha`` on the level window ``[n_min, n_max]``.

    The tree is the set of descendants of ``(sigma^K(alpha), -K)`` that land in
    the window.  By default ``K`` is chosen so the window levels are the complete
    level sets whenever those are finite; when they are infinite the tree is the
    subtree hanging off ``(sigma^{-n_min}(alpha), n_min)``.  Parents of every
    non-bottom node and children of every non-top node are present, so the
    generator relations are exact on the interior levels.
    """
    if n_min >= n_max:
        raise ValueError("need n_min < n_max")
    exact = False
    if k_bound is None:
        k_bound, exact = default_k_bound(g, alpha, n_min)
    elif k_bound < max(0, -n_min):
        raise ValueError(f"k_bound must be at least {max(0, -n_min)}")
    root = sigma_power(alpha, k_bound)
    level = -k_bound
    current = [root]
    cur_parent = [-1]
    nodes: list[OrbitNode] = []
    parent: list[int] = []
    total = 1
    while True:
        if level >= n_min:
            offset = len(nodes)
            nodes.extend(OrbitNode(p, level) for p in current)
            parent.extend(cur_parent if level > n_min else [-1] * len(current))
        else:
            offset = None
        if level == n_max:
            break
        nxt: dict = {}
        nxt_parent = []
        for j, gamma in enumerate(current):
            for e in g.out_edges(gamma.range(g)):
                child = _prepend_edge(e, gamma)
                if child not in nxt:
                    nxt[child] = len(nxt)
                    nxt_parent.append(offset + j if offset is not None else -1)
        total += len(nxt)
        if total > node_cap:
            raise CapacityError(f"orbit tree exceeds {node_cap} nodes; shrink the window")
        current = list(nxt)
        cur_parent = nxt_parent
        level += 1
        if not current:
            break
    levels = np.array([n.level for n in nodes], dtype=int)
    vidx = g.vertices.index
    range_idx = np.array([vidx(n.path.range(g)) for n in nodes], dtype=int)
    first_edge_idx = np.array([g.edge_index(n.path.first()) for n in nodes], dtype=int)
    interior = (levels > n_min) & (levels < n_max)
    return OrbitTree(
        graph=g,
        base=alpha,
        n_min=n_min,
        n_max=n_max,
        k_bound=k_bound,
        exact=exact,
        nodes=tuple(nodes),
        parent=np.array(parent, dtype=int),
        levels=levels,
        interior=interior,
        range_idx=range_idx,
        first_edge_idx=first_edge_idx,
    )


# ---------------------------------------------------------------------------
# operators
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class LevelOperator:
    """Sparse matrix on the nodes of an orbit tree shifting levels by ``degree``."""

    tree: OrbitTree
    matrix: sp.csr_matrix
    degree: int

    def __matmul__(self, other: "LevelOperator") -> "LevelOperator":
        return LevelOperator(self.tree, (self.matrix @ other.matrix).tocsr(), self.degree + other.degree)

    def __add__(self, other: "LevelOperator") -> "LevelOperator":
        return LevelOperator(self.tree, (self.matrix + other.matrix).tocsr(), self.degree)

    def __sub__(self, other: "LevelOperator") -> "LevelOperator":
        return LevelOperator(self.tree, (self.matrix - other.matrix).tocsr(), self.degree)

    def scale(self, c) -> "LevelOperator":
        return LevelOperator(self.tree, (complex(c) * self.matrix).tocsr(), self.degree)

    @property
    def H(self) -> "LevelOperator":
        return LevelOperator(self.tree, self.matrix.conj().T.tocsr(), -self.degree)

    def toarray(self) -> np.ndarray:
        return self.matrix.toarray()

    def apply(self, vec) -> np.ndarray:
        return self.matrix @ np.asarray(vec, dtype=complex)

    def grading_defect(self) -> int:
        """Number of stored nonzeros violating ``level(row) == level(col) + degree``."""
        coo = self.matrix.tocoo()
        lv = self.tree.levels
        mask = coo.data != 0
        return int(np.count_nonzero(lv[coo.row[mask]] != lv[coo.col[mask]] + self.degree))


def _check_graph(t: OrbitTree, f):
    if f.graph is not t.graph and f.graph != t.graph:
        raise GraphMismatchError("function and orbit tree use different graphs")


def rep_pi(t: OrbitTree, a: VertexFunction) -> LevelOperator:
    _check_graph(t, a)
    return LevelOperator(t, sp.diags(a.values[t.range_idx], format="csr", dtype=complex), 0)


def rep_tau(t: OrbitTree, xi: EdgeFunction) -> LevelOperator:
    _check_graph(t, xi)
    rows = np.flatnonzero(t.parent >= 0)
    cols = t.parent[rows]
    data = xi.values[t.first_edge_idx[rows]]
    n = len(t)
    m = sp.csr_matrix((data, (rows, cols)), shape=(n, n), dtype=complex)
    return LevelOperator(t, m, 1)


def gauge_unitary(t: OrbitTree, z: complex) -> LevelOperator:
    z = complex(z)
    if abs(abs(z) - 1) > UNIT_TOL:
        raise ValueError(f"|z| = {abs(z)} is not 1")
    powers = {n: z**n for n in set(t.levels.tolist())}
    diag = np.array([powers[n] for n in t.levels], dtype=complex)
    return LevelOperator(t, sp.diags(diag, format="csr", dtype=complex), 0)


def interior_residual(t: OrbitTree, A: LevelOperator, B: LevelOperator) -> float:
    idx = t.interior_idx
    if idx.size == 0:
        return 0.0
    diff = (A.matrix - B.matrix)[idx][:, idx]
    return float(np.abs(diff.data).max()) if diff.nnz else 0.0


@dataclass(frozen=True)
class RelationReport:
    toeplitz_module: float
    toeplitz_inner: float
    covariance: float | None
    gauge: float
    z: complex
    interior_nodes: int
    tol: float = RELATION_TOL

    @property
    def ok(self) -> bool:
        vals = [self.toeplitz_module, self.toeplitz_inner, self.gauge]
        if self.covariance is not None:
            vals.append(self.covariance)
        return all(v <= self.tol for v in vals)

    def to_dict(self) -> dict:
        return {
            "toeplitz_module": self.toeplitz_module,
            "toeplitz_inner": self.toeplitz_inner,
            "covariance": self.covariance,
            "gauge": self.gauge,
            "z": [self.z.real, self.z.imag],
            "interior_nodes": self.interior_nodes,
            "ok": self.ok,
        }


def verify_relations(
    t: OrbitTree,
    a: VertexFunction,
    xi: EdgeFunction,
    eta: EdgeFunction,
    z: complex,
    *,
    covariance: bool = True,
    tau: Callable[[OrbitTree, EdgeFunction], LevelOperator] = rep_tau,
) -> RelationReport:
    """Residuals of the Toeplitz, covariance and gauge relations on the interior.

    ``tau`` can be swapped for a deliberately broken builder to self-test the
    detector.
    """
    pi_a = rep_pi(t, a)
    tau_xi = tau(t, xi)
    tau_eta = tau(t, eta)
    r_module = interior_residual(t, tau(t, left_action(a, xi)), pi_a @ tau_xi)
    r_inner = interior_residual(t, tau_xi.H @ tau_eta, rep_pi(t, inner_product(xi, eta)))
    r_cov = None
    if covariance:
        pairs = rank_one_decomposition(a)
        n = len(t)
        acc = LevelOperator(t, sp.csr_matrix((n, n), dtype=complex), 0)
        for pair in pairs:
            acc = acc + tau(t, pair.xi) @ tau(t, pair.eta).H
        r_cov = interior_residual(t, acc, pi_a)
    U = gauge_unitary(t, z)
    r_gauge = interior_residual(t, U @ tau_xi @ U.H, tau_xi.scale(z))
    return RelationReport(
        toeplitz_module=r_module,
        toeplitz_inner=r_inner,
        covariance=r_cov,
        gauge=r_gauge,
        z=complex(z),
        interior_nodes=int(t.interior.sum()),
    )


def corrupted_tau(entry: int = 0, delta: complex = 1.0):
    """A ``rep_tau`` variant with one stored entry perturbed by ``delta``."""

    def build(t: OrbitTree, xi: EdgeFunction) -> LevelOperator:
        op = rep_tau(t, xi)
        rows = np.flatnonzero(t.parent >= 0)
        inner = rows[t.interior[rows] & t.interior[t.parent[rows]]]
        if inner.size == 0:
            return op
        i = inner[entry % inner.size]
        m = op.matrix.tolil()
        m[i, t.parent[i]] += delta
        return LevelOperator(t, m.tocsr(), 1)

    return build


@dataclass(frozen=True, eq=False)
class UnitShift:
    T: LevelOperator
    S: LevelOperator
    out_degree: np.ndarray
    leaves: np.ndarray

    def check(self) -> dict:
        """Left-inverse and norm checks on the interior."""
        t = self.T.tree
        cols = np.flatnonzero(t.interior & ~self.leaves)
        ST = (self.S.matrix @ self.T.matrix).tocsc()
        block = ST[cols][:, cols].toarray() if cols.size else np.zeros((0, 0))
        left_inverse_defect = float(np.abs(block - np.eye(cols.size)).max()) if cols.size else 0.0
        col_norms = np.sqrt(np.asarray(abs(self.T.matrix).power(2).sum(axis=0)).ravel())
        below = t.levels < t.n_max
        nonleaf = below & ~self.leaves
        min_col = float(col_norms[nonleaf].min()) if nonleaf.any() else float("inf")
        s_norm = _op_norm(self.S.matrix)
        return {
            "left_inverse_defect": left_inverse_defect,
            "checked_columns": int(cols.size),
            "min_column_norm": min_col,
            "S_norm": s_norm,
        }


def _op_norm(m: sp.spmatrix) -> float:
    n = m.shape[0]
    if n == 0 or m.nnz == 0:
        return 0.0
    if n <= 2000:
        return float(np.linalg.norm(m.toarray(), 2))
    # S S* is diagonal up to truncation; fall back to the row-sum bound
    return float(np.sqrt(abs(m @ m.conj().T).sum(axis=1).max()))


def unit_shift(t: OrbitTree, *, allow_sinks: bool = False) -> UnitShift:
    """``T = tau(1)`` and its left inverse ``S = D^+ T*`` with ``D = |s^-1(r(node))|``.

    Columns of ``T`` have disjoint supports, so ``T* T = D`` on nodes whose
    children lie in the window.  A node whose range is a sink has a zero column
    and no left inverse; such nodes raise unless ``allow_sinks`` is set.
    """
    g = t.graph
    deg = np.array([len(g.out_edges(g.vertex_list[i])) for i in t.range_idx], dtype=int)
    leaves = deg == 0
    if leaves.any() and not allow_sinks:
        i = int(np.flatnonzero(leaves)[0])
        raise PreconditionError(f"node {t.nodes[i].label()} ends at a sink; T has a zero column")
    T = rep_tau(t, EdgeFunction.constant(g, 1))
    dinv = np.where(deg > 0, 1.0 / np.maximum(deg, 1), 0.0)
    S = LevelOperator(t, (sp.diags(dinv, format="csr") @ T.matrix.conj().T).tocsr(), -1)
    return UnitShift(T, S, deg, leaves)


def unit_circle_sample(k: int) -> complex:
    return cmath.exp(2j * cmath.pi / k)
