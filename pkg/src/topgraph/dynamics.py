"""Pseudo-orbits of self-maps of finite metric spaces, and truncated inverse limits."""

from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass, field
from typing import Hashable, Mapping

import numpy as np

from .errors import MetricError, PreconditionError, SchemaError, UnknownVertexError
from .graph_model import MetricSpace, TopGraph, _read_points, build_metric, parse_document, validate
from .orbit_rep import InfinitePath, sigma, sigma_power

NORMALIZE_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class FiniteDynSystem:
    space: MetricSpace
    mapping: Mapping[Hashable, Hashable]
    surjective: bool = field(init=False)

    def __post_init__(self):
        for x in self.space.points:
            if x not in self.mapping:
                raise SchemaError(f"map is not total: no image for {x!r}")
            if self.mapping[x] not in self.space:
                raise UnknownVertexError(f"{x!r} maps to unknown point {self.mapping[x]!r}")
        m = {x: self.mapping[x] for x in self.space.points}
        object.__setattr__(self, "mapping", m)
        object.__setattr__(self, "surjective", set(m.values()) == set(self.space.points))
        idx = self.space.index
        object.__setattr__(self, "map_idx", np.array([idx(m[x]) for x in self.space.points], dtype=int))

    @property
    def points(self) -> tuple:
        return self.space.points

    def f(self, x):
        return self.mapping[x]

    def normalized(self) -> "FiniteDynSystem":
        return FiniteDynSystem(self.space.normalized(), self.mapping)


@dataclass(frozen=True)
class PseudoOrbitWitness:
    """Points ``x_1 .. x_n`` with ``d(f(x_i), x_{i+1}) < eps`` cyclically."""

    points: tuple
    eps: float

    def is_valid(self, sys: FiniteDynSystem) -> bool:
        n = len(self.points)
        return n > 0 and all(
            sys.space.d(sys.f(self.points[i]), self.points[(i + 1) % n]) < self.eps for i in range(n)
        )


def relation_matrix(sys: FiniteDynSystem, eps: float) -> np.ndarray:
    """Boolean ``R[x, y] = d(f(x), y) < eps``."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    return sys.space.dist[sys.map_idx] < eps


def relation_graph(sys: FiniteDynSystem, eps: float) -> dict:
    R = relation_matrix(sys, eps)
    pts = sys.points
    return {x: tuple(pts[j] for j in np.flatnonzero(R[i])) for i, x in enumerate(pts)}


def _shortest_return(adj: list[np.ndarray], start: int) -> list[int] | None:
    """Shortest cycle through ``start`` in an index adjacency list, as node indices."""
    prev = {}
    queue = deque()
    for j in adj[start]:
        j = int(j)
        if j == start:
            return [start]
        if j not in prev:
            prev[j] = start
            queue.append(j)
    while queue:
        u = queue.popleft()
        for j in adj[u]:
            j = int(j)
            if j == start:
                path = [u]
                while path[-1] != start:
                    path.append(prev[path[-1]])
                return path[::-1]
            if j not in prev:
                prev[j] = u
                queue.append(j)
    return None


def is_pseudoperiodic(sys: FiniteDynSystem, eps: float, x) -> PseudoOrbitWitness | None:
    R = relation_matrix(sys, eps)
    adj = [np.flatnonzero(row) for row in R]
    cycle = _shortest_return(adj, sys.space.index(x))
    if cycle is None:
        return None
    return PseudoOrbitWitness(tuple(sys.points[i] for i in cycle), eps)


def pseudoperiodic_points(sys: FiniteDynSystem, eps: float) -> np.ndarray:
    """Mask of points lying on a cycle of the eps-relation (strongly connected)."""
    from scipy.sparse import csr_matrix
    from scipy.sparse.csgraph import connected_components

    R = relation_matrix(sys, eps)
    n = len(sys.points)
    _, labels = connected_components(csr_matrix(R), directed=True, connection="strong")
    sizes = np.bincount(labels, minlength=n)
    return (sizes[labels] > 1) | np.diag(R)


def exact_eps(space: MetricSpace) -> float:
    """A threshold below every positive distance, so ``d < eps`` means equality."""
    m = space.min_positive_distance()
    return 1.0 if m is None else m


# ---------------------------------------------------------------------------
# inverse limits
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class InverseLimitSystem:
    """Depth-N truncation of the inverse limit of ``(X, f)``.

    Points are compatible sequences ``(x_1, ..., x_N)`` with ``x_n = f(x_{n+1})``;
    the map acts coordinatewise and the metric is ``sum 2^-n d(x_n, y_n)``.
    """

    base: FiniteDynSystem
    depth: int
    sequences: tuple

    def as_system(self) -> FiniteDynSystem:
        X = self.base.space
        seqs = self.sequences
        idx = [np.array([X.index(x) for x in s]) for s in seqs]
        w = 2.0 ** -np.arange(1, self.depth + 1)
        n = len(seqs)
        D = np.zeros((n, n))
        for i, j in itertools.combinations(range(n), 2):
            D[i, j] = D[j, i] = float(w @ X.dist[idx[i], idx[j]])
        labels = tuple(self.label(s) for s in seqs)
        lookup = {s: lab for s, lab in zip(seqs, labels)}
        f = self.base.f
        mapping = {lab: lookup[tuple(f(x) for x in s)] for s, lab in zip(seqs, labels)}
        return FiniteDynSystem(MetricSpace(labels, D), mapping)

    @staticmethod
    def label(seq: tuple) -> str:
        return "(" + ",".join(map(str, seq)) + ")"

    def metric(self, a: tuple, b: tuple) -> float:
        X = self.base.space
        return sum(2.0 ** -(n + 1) * X.d(x, y) for n, (x, y) in enumerate(zip(a, b)))


def inverse_limit(sys: FiniteDynSystem, N: int) -> InverseLimitSystem:
    if N < 1:
        raise ValueError("depth must be positive")
    if not sys.surjective:
        missing = [x for x in sys.points if x not in set(sys.mapping.values())]
        raise PreconditionError(f"map is not surjective (no preimage for {missing[0]!r})")
    seqs = []
    for last in sys.points:
        seq = [last]
        for _ in range(N - 1):
            seq.append(sys.f(seq[-1]))
        seqs.append(tuple(reversed(seq)))
    return InverseLimitSystem(sys, N, tuple(seqs))


def delta_schedule(sys: FiniteDynSystem, eps: float, length: int) -> list[float]:
    """``delta_1 = eps`` and ``d(x, y) < delta_{n+1}`` implies ``d(f x, f y) < delta_n``."""
    D = sys.space.dist
    FD = D[np.ix_(sys.map_idx, sys.map_idx)]
    deltas = [eps]
    for _ in range(length - 1):
        bad = D[FD >= deltas[-1]]
        modulus = float(bad.min()) if bad.size else np.inf
        deltas.append(min(deltas[-1], modulus))
    return deltas


@dataclass(frozen=True)
class LiftReport:
    eps: float
    depth: int
    base_all_pseudoperiodic: bool
    lifted_all_pseudoperiodic: bool
    base_at_double_eps: bool
    delta_N: float
    base_at_delta_N: bool
    lifted_at_upward_eps: bool
    downward_ok: bool
    upward_ok: bool

    @property
    def ok(self) -> bool:
        return self.downward_ok and self.upward_ok

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__} | {"ok": self.ok}


def verify_lift(sys: FiniteDynSystem, eps: float, N: int) -> LiftReport:
    """Check both directions of the pseudoperiodicity lift with the proof's slack.

    Downward: if every point of the truncated limit is pseudoperiodic at eps, every
    point of X must be at 2 eps.  Upward: if every point of X is pseudoperiodic
    at delta_N, every point of the truncated limit must be at 2 eps + 2^-N.
    """
    if sys.space.diameter > 1 + NORMALIZE_TOL:
        raise MetricError(f"metric has diameter {sys.space.diameter} > 1; normalise first")
    lim = inverse_limit(sys, N).as_system()
    base_all = bool(pseudoperiodic_points(sys, eps).all())
    lifted_all = bool(pseudoperiodic_points(lim, eps).all())
    base_2 = bool(pseudoperiodic_points(sys, 2 * eps).all())
    deltas = delta_schedule(sys, eps, N)
    delta_N = deltas[-1]
    base_dN = bool(pseudoperiodic_points(sys, delta_N).all())
    up_eps = 2 * eps + 2.0**-N
    lifted_up = bool(pseudoperiodic_points(lim, up_eps).all())
    return LiftReport(
        eps=eps,
        depth=N,
        base_all_pseudoperiodic=base_all,
        lifted_all_pseudoperiodic=lifted_all,
        base_at_double_eps=base_2,
        delta_N=delta_N,
        base_at_delta_N=base_dN,
        lifted_at_upward_eps=lifted_up,
        downward_ok=(not lifted_all) or base_2,
        upward_ok=(not base_dN) or lifted_up,
    )


# ---------------------------------------------------------------------------
# graphs as dynamical systems
# ---------------------------------------------------------------------------


def graph_shift_system(g: TopGraph) -> FiniteDynSystem:
    """The system ``v -> r(s^-1(v))`` on the vertex space."""
    rep = validate(g)
    if not rep.s_injective:
        e, f = rep.s_witness
        raise PreconditionError(f"s is not injective ({e!r} and {f!r} share a source); map is multivalued")
    if rep.sinks:
        raise PreconditionError(f"sink {rep.sinks[0]!r}: map is not defined there")
    mapping = {v: g.rng[g.out_edges(v)[0]] for v in g.vertex_list}
    return FiniteDynSystem(g.vertices, mapping)


def verify_rho_identity(g: TopGraph, alpha: InfinitePath, n: int) -> bool:
    """``r(alpha(n)) == r(sigma^{n-1}(alpha))``, with sigma applied one step at a time."""
    if n < 1:
        raise ValueError("n must be positive")
    beta = alpha
    for _ in range(n - 1):
        beta = sigma(beta)
    return g.rng[alpha.edge(n)] == beta.range(g) == sigma_power(alpha, n - 1).range(g)


def rho_range(alpha: InfinitePath) -> int:
    return len(alpha.prefix) + 2 * len(alpha.cycle)


def sigma_is_bijection(g: TopGraph, paths) -> bool:
    """Whether sigma permutes the given finite set of lassos."""
    pool = set(paths)
    images = {sigma(a) for a in pool}
    return images == pool and len(images) == len(pool)


# ---------------------------------------------------------------------------
# ingestion
# ---------------------------------------------------------------------------

_SYS_KEYS = {"points", "metric", "map", "name"}


def load_system(description: str | Mapping) -> FiniteDynSystem:
    """Parse a system document: ``points`` (like graph vertices), ``metric``, ``map``."""
    doc = parse_document(description) if isinstance(description, str) else description
    if not isinstance(doc, Mapping):
        raise SchemaError("system document must be a mapping")
    unknown = set(doc) - _SYS_KEYS
    if unknown:
        raise SchemaError(f"system: unknown keys {sorted(unknown)}")
    ids, coords = _read_points(doc.get("points"))
    space = build_metric(ids, coords, doc.get("metric"))
    raw = doc.get("map")
    if isinstance(raw, list):
        raw = {str(k): v for k, v in raw}
    if not isinstance(raw, Mapping):
        raise SchemaError("`map` must be a mapping point -> image")
    return FiniteDynSystem(space, {str(k): str(v) for k, v in raw.items()})
