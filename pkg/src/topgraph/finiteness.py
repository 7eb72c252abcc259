"""Decide the pseudoloop condition for compact graphs without sinks.

The verdict is "infinite" when ``s`` fails to be injective or some vertex has no
eps-pseudoloop at a requested eps, and "consistent-with-finite" when every check
passes.  Graphs with sinks, or flagged as truncations of non-compact graphs, get
"inconclusive".  A failed verdict carries orbit-tree evidence: either a node with
two children (the unit shift is not injective on the tree's edges) or a vertex
receiving no edge.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

from .errors import PreconditionError
from .graph_model import TopGraph, ValidationReport, validate
from .orbit_rep import InfinitePath, build_orbit_tree, lasso

CONSISTENT = "consistent-with-finite"
INFINITE = "infinite"
INCONCLUSIVE = "inconclusive"

EXACT_KEY = "exact"


@dataclass(frozen=True)
class EpsPseudopath:
    """Edges written ``e_n ... e_1`` (``edges[-1]`` is traversed first).

    Consecutive edges satisfy ``d(r(e_i), s(e_{i+1})) < eps``.
    """

    edges: tuple
    eps: float

    def source(self, g: TopGraph):
        return g.src[self.edges[-1]]

    def range(self, g: TopGraph):
        return g.rng[self.edges[0]]

    def is_valid(self, g: TopGraph) -> bool:
        traversal = self.edges[::-1]
        return len(traversal) > 0 and all(
            g.d(g.rng[a], g.src[b]) < self.eps for a, b in zip(traversal, traversal[1:])
        )


@dataclass(frozen=True)
class EpsPseudoloop(EpsPseudopath):
    base: object = None

    def is_valid(self, g: TopGraph) -> bool:
        return (
            super().is_valid(g)
            and self.source(g) == self.base
            and g.d(self.range(g), self.base) < self.eps
        )


def _edge_relation(g: TopGraph, eps: float):
    D = g.vertices.dist
    close = D[g.rng_idx][:, g.src_idx] < eps  # close[i, j]: d(r(e_i), s(e_j)) < eps
    return close


def pseudoloop_at(g: TopGraph, v, eps: float, *, _close=None) -> EpsPseudoloop | None:
    """Shortest eps-pseudoloop based at ``v`` (breadth-first over edges)."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    close = _edge_relation(g, eps) if _close is None else _close
    vi = g.vertices.index(v)
    back = g.vertices.dist[g.rng_idx, vi] < eps
    prev: dict = {}
    queue = deque()
    for e in g.out_edges(v):
        i = g.edge_index(e)
        prev[i] = None
        queue.append(i)
    while queue:
        i = queue.popleft()
        if back[i]:
            chain = [i]
            while prev[chain[-1]] is not None:
                chain.append(prev[chain[-1]])
            # chain runs last-traversed first, which is the written order
            return EpsPseudoloop(tuple(g.edges[k] for k in chain), eps, base=v)
        for j in close[i].nonzero()[0]:
            j = int(j)
            if j not in prev:
                prev[j] = i
                queue.append(j)
    return None


def brute_force_pseudoloop(g: TopGraph, v, eps: float, max_len: int) -> int | None:
    """Length of the shortest eps-pseudoloop at ``v`` with at most ``max_len`` edges.

    Depth-first enumeration of eps-pseudopaths starting at ``v``; paths are only
    cut once they are as long as the best loop found so far.  It shares no code
    with :func:`pseudoloop_at` and serves as its oracle.
    """
    n = len(g.edges)
    succ = [
        [j for j in range(n) if g.d(g.rng[g.edges[i]], g.src[g.edges[j]]) < eps] for i in range(n)
    ]
    returns = [g.d(g.rng[e], v) < eps for e in g.edges]
    best = max_len + 1

    def extend(i, length):
        nonlocal best
        if returns[i]:
            best = min(best, length)
            return
        if length + 1 >= best:
            return
        for j in succ[i]:
            extend(j, length + 1)

    for e in g.out_edges(v):
        extend(g.edge_index(e), 1)
    return best if best <= max_len else None


@dataclass(frozen=True)
class Obstruction:
    kind: str  # "branching" | "source"
    vertex: object
    detail: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "vertex": self.vertex} | self.detail


@dataclass(frozen=True)
class FinitenessVerdict:
    verdict: str
    eps_values: tuple
    pseudoloops: dict  # key (float eps or "exact") -> {vertex: EpsPseudoloop | None}
    validation: ValidationReport
    failing: dict  # key -> tuple of vertices without pseudoloop
    reasons: tuple
    obstruction: Obstruction | None = None
    exact_eps: float | None = None

    def to_dict(self) -> dict:
        loops = {}
        for key, table in self.pseudoloops.items():
            loops[_key(key)] = {
                str(v): (list(w.edges) if w is not None else None) for v, w in table.items()
            }
        return {
            "verdict": self.verdict,
            "eps": list(self.eps_values),
            "exact_eps": self.exact_eps,
            "s_injective": self.validation.s_injective,
            "s_witness": list(self.validation.s_witness) if self.validation.s_witness else None,
            "sinks": list(self.validation.sinks),
            "sources": list(self.validation.sources),
            "failing": {_key(k): list(v) for k, v in self.failing.items()},
            "reasons": list(self.reasons),
            "obstruction": self.obstruction.to_dict() if self.obstruction else None,
            "pseudoloops": loops,
        }


def _key(k) -> str:
    return k if isinstance(k, str) else repr(float(k))


def _lasso_into(g: TopGraph, v) -> InfinitePath | None:
    """Some lasso path with range ``v`` (backward search to a cycle), or None."""
    # walk backwards: an infinite path ending at v needs edges e_1 (r = v), e_2 (r = s(e_1)), ...
    best = None
    prev = {v: None}
    order = deque([v])
    while order:
        u = order.popleft()
        for e in g.in_edges(u):
            w = g.src[e]
            if w not in prev:
                prev[w] = (e, u)
                order.append(w)
    # find a vertex in the backward-reachable set lying on a cycle inside that set
    reach = set(prev)
    for u in prev:
        cyc = _cycle_through(g, u, reach)
        if cyc is not None:
            # prefix: edges from u forward to v, in written order
            path = []
            x = u
            while prev[x] is not None:
                e, nxt = prev[x]
                path.append(e)
                x = nxt
            best = lasso(g, tuple(reversed(path)), cyc)
            break
    return best


def _cycle_through(g: TopGraph, u, allowed: set) -> tuple | None:
    """Written-order cycle ``c_1 .. c_q`` with ``r(c_1) == u``, or None."""
    prev = {}
    queue = deque()
    for e in g.in_edges(u):
        if g.src[e] in allowed:
            if g.src[e] == u:
                return (e,)
            if g.src[e] not in prev:
                prev[g.src[e]] = e
                queue.append(g.src[e])
    while queue:
        x = queue.popleft()
        for e in g.in_edges(x):
            y = g.src[e]
            if y not in allowed:
                continue
            if y == u:
                chain = [e]
                z = x
                while z != u:
                    f = prev[z]
                    chain.append(f)
                    z = g.rng[f]
                return tuple(reversed(chain))
            if y not in prev:
                prev[y] = e
                queue.append(y)
    return None


def obstruction_for(g: TopGraph, rep: ValidationReport) -> Obstruction | None:
    """Orbit-tree evidence that the unit shift is not surjective on some orbit tree."""
    if rep.s_witness is not None:
        e, f = rep.s_witness
        v = g.src[e]
        alpha = _lasso_into(g, v)
        detail = {"edges": [e, f]}
        if alpha is not None:
            t = build_orbit_tree(g, alpha, -1, 1, k_bound=1)
            node = next(n for n in t.level_nodes(0) if n.path == alpha)
            kids = [t.nodes[j] for j in t.children(t.index(node))]
            detail |= {
                "node": node.label(),
                "children": [k.label() for k in kids],
                "note": "two children share one parent, so sigma is not injective on the tree",
            }
        return Obstruction("branching", v, detail)
    if rep.sources:
        v = rep.sources[0]
        return Obstruction(
            "source",
            v,
            {"note": "vertex receives no edge, so its orbit tree has a source and the unit shift is not onto"},
        )
    return None


def decide(
    g: TopGraph,
    eps_list=(),
    exact: bool = False,
) -> FinitenessVerdict:
    eps_values = tuple(float(e) for e in eps_list)
    if not eps_values and not exact:
        raise ValueError("give at least one eps or request exact mode")
    if any(e <= 0 for e in eps_values):
        raise ValueError("eps values must be positive")
    rep = validate(g)
    keys: list = list(eps_values)
    thresholds = dict(zip(eps_values, eps_values))
    exact_eps = None
    if exact:
        m = g.vertices.min_positive_distance()
        exact_eps = 1.0 if m is None else m
        keys.append(EXACT_KEY)
        thresholds[EXACT_KEY] = exact_eps
    loops: dict = {}
    failing: dict = {}
    for key in keys:
        eps = thresholds[key]
        close = _edge_relation(g, eps)
        table = {v: pseudoloop_at(g, v, eps, _close=close) for v in g.vertex_list}
        loops[key] = table
        failing[key] = tuple(v for v, w in table.items() if w is None)
    reasons = []
    if not rep.s_injective:
        reasons.append(f"s is not injective: edges {rep.s_witness[0]!r}, {rep.s_witness[1]!r} share a source")
    for key in keys:
        if failing[key]:
            reasons.append(f"no pseudoloop at eps={_key(key)} for {len(failing[key])} vertices")
    condition_holds = not reasons
    if rep.sinks:
        verdict = INCONCLUSIVE
        reasons.insert(0, f"graph has sinks {list(rep.sinks)}; the criterion needs no sinks")
    elif not g.compact:
        verdict = INCONCLUSIVE
        reasons.insert(0, "graph is flagged as a truncation of a non-compact graph")
    else:
        verdict = CONSISTENT if condition_holds else INFINITE
    obstruction = obstruction_for(g, rep) if not condition_holds else None
    return FinitenessVerdict(
        verdict=verdict,
        eps_values=eps_values,
        pseudoloops=loops,
        validation=rep,
        failing=failing,
        reasons=tuple(reasons),
        obstruction=obstruction,
        exact_eps=exact_eps,
    )


def require_no_sinks(g: TopGraph):
    rep = validate(g)
    if rep.sinks:
        raise PreconditionError(f"graph has sinks {list(rep.sinks)}")
