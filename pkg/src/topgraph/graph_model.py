"""Finite topological graphs with a metric on the vertex space.

A graph ``E = (E0, E1, r, s)`` is stored with vertices and edges in input
order; all iteration in the package follows that order so that reports are
reproducible.  Paths are written range-most edge first, ``e_n ... e_1``, so
that ``s(e_k) == r(e_{k+1})`` reads left to right as ``edges[i]`` followed by
``edges[i + 1]`` having ``src(edges[i]) == rng(edges[i + 1])``.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from typing import Any, Hashable, Mapping, Sequence

import numpy as np
import yaml

from .errors import MetricError, SchemaError, UnknownVertexError

METRIC_TOL = 1e-12
EXHAUSTIVE_TRIPLE_LIMIT = 60
SAMPLED_TRIPLES = 20000


# ---------------------------------------------------------------------------
# metric spaces
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class MetricSpace:
    """A finite metric space given by an ordered point list and a distance table."""

    points: tuple
    dist: np.ndarray = field(repr=False)

    def __post_init__(self):
        d = np.asarray(self.dist, dtype=float)
        if d.shape != (len(self.points), len(self.points)):
            raise MetricError(
                f"distance table has shape {d.shape}, expected "
                f"{(len(self.points), len(self.points))}"
            )
        if len(set(self.points)) != len(self.points):
            raise SchemaError("duplicate point identifiers")
        d.setflags(write=False)
        object.__setattr__(self, "dist", d)
        object.__setattr__(self, "_index", {p: i for i, p in enumerate(self.points)})

    def __len__(self):
        return len(self.points)

    def __iter__(self):
        return iter(self.points)

    def __contains__(self, p):
        return p in self._index

    def __eq__(self, other):
        if not isinstance(other, MetricSpace):
            return NotImplemented
        return self.points == other.points and np.array_equal(self.dist, other.dist)

    def __hash__(self):
        return hash(self.points)

    def index(self, p) -> int:
        try:
            return self._index[p]
        except KeyError:
            raise UnknownVertexError(f"unknown vertex {p!r}") from None

    def d(self, x, y) -> float:
        return float(self.dist[self._index[x], self._index[y]])

    @property
    def diameter(self) -> float:
        return float(self.dist.max()) if len(self.points) else 0.0

    def min_positive_distance(self) -> float | None:
        positive = self.dist[self.dist > 0]
        return float(positive.min()) if positive.size else None

    def normalized(self) -> "MetricSpace":
        """Rescale so the diameter is at most 1 (identity if it already is)."""
        diam = self.diameter
        if diam <= 1.0:
            return self
        return MetricSpace(self.points, self.dist / diam)


def check_metric(points: Sequence, dist: np.ndarray, *, tol: float = METRIC_TOL, seed: int = 0):
    """Raise :class:`MetricError` naming the offending pair or triple.

    Triples are checked exhaustively up to ``EXHAUSTIVE_TRIPLE_LIMIT`` points and
    sampled beyond that.
    """
    d = np.asarray(dist, dtype=float)
    n = len(points)
    scale = max(1.0, float(np.abs(d).max()) if n else 1.0)
    eps = tol * scale
    if not np.all(np.isfinite(d)):
        raise MetricError("distance table contains non-finite entries")
    for i in range(n):
        if d[i, i] != 0:
            raise MetricError(f"d({points[i]!r}, {points[i]!r}) = {d[i, i]} != 0", (points[i],))
    for i, j in itertools.combinations(range(n), 2):
        if abs(d[i, j] - d[j, i]) > eps:
            raise MetricError(
                f"asymmetric: d({points[i]!r}, {points[j]!r}) != d({points[j]!r}, {points[i]!r})",
                (points[i], points[j]),
            )
        if d[i, j] <= 0:
            raise MetricError(
                f"d({points[i]!r}, {points[j]!r}) = {d[i, j]} must be positive for distinct points",
                (points[i], points[j]),
            )
    if n <= EXHAUSTIVE_TRIPLE_LIMIT:
        # d[x, z] <= d[x, y] + d[y, z] for all (x, y, z), vectorised over z
        for x in range(n):
            slack = d[x][:, None] + d - d[x][None, :]
            bad = np.argwhere(slack < -eps)
            if bad.size:
                y, z = bad[0]
                raise MetricError(
                    f"triangle inequality fails for ({points[x]!r}, {points[y]!r}, {points[z]!r})",
                    (points[x], points[y], points[z]),
                )
    else:
        rng = np.random.default_rng(seed)
        xs, ys, zs = rng.integers(0, n, size=(3, SAMPLED_TRIPLES))
        slack = d[xs, ys] + d[ys, zs] - d[xs, zs]
        bad = np.flatnonzero(slack < -eps)
        if bad.size:
            k = bad[0]
            raise MetricError(
                f"triangle inequality fails for ({points[xs[k]]!r}, {points[ys[k]]!r}, {points[zs[k]]!r})",
                (points[xs[k]], points[ys[k]], points[zs[k]]),
            )


def discrete_metric(points: Sequence) -> MetricSpace:
    n = len(points)
    return MetricSpace(tuple(points), np.ones((n, n)) - np.eye(n))


def euclidean_metric(points: Sequence, coords: Sequence[Sequence[float]]) -> MetricSpace:
    c = np.asarray(coords, dtype=float)
    if c.ndim != 2 or c.shape[0] != len(points):
        raise SchemaError("euclidean metric needs one coordinate list of equal length per vertex")
    diff = c[:, None, :] - c[None, :, :]
    return MetricSpace(tuple(points), np.sqrt((diff**2).sum(axis=-1)))


def parse_extended_int(label) -> float:
    """Parse ``'3'``, ``'-inf'``, ``'+inf'`` (or ints) as an element of Z u {+-inf}."""
    if isinstance(label, (int, np.integer)) and not isinstance(label, bool):
        return int(label)
    text = str(label).strip().lower()
    if text in ("inf", "+inf", "infinity", "+infinity"):
        return math.inf
    if text in ("-inf", "-infinity"):
        return -math.inf
    try:
        return int(text)
    except ValueError:
        raise SchemaError(f"arctan-z metric: vertex id {label!r} is not an integer or +-inf") from None


def _arctan(x: float) -> float:
    if x == math.inf:
        return math.pi / 2
    if x == -math.inf:
        return -math.pi / 2
    return math.atan(x)


def arctan_metric(points: Sequence) -> MetricSpace:
    """Metric ``|arctan m - arctan n|`` on a subset of Z u {+-inf}."""
    a = np.array([_arctan(parse_extended_int(p)) for p in points])
    return MetricSpace(tuple(points), np.abs(a[:, None] - a[None, :]))


# ---------------------------------------------------------------------------
# graphs
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class TopGraph:
    vertices: MetricSpace
    edges: tuple
    src: Mapping[Hashable, Hashable]
    rng: Mapping[Hashable, Hashable]
    compact: bool = True

    def __post_init__(self):
        edges = tuple(self.edges)
        if len(set(edges)) != len(edges):
            raise SchemaError("duplicate edge identifiers")
        for e in edges:
            for name, m in (("src", self.src), ("rng", self.rng)):
                if e not in m:
                    raise SchemaError(f"edge {e!r} has no {name}")
                if m[e] not in self.vertices:
                    raise UnknownVertexError(f"edge {e!r}: unknown vertex {m[e]!r} in {name}")
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "src", dict((e, self.src[e]) for e in edges))
        object.__setattr__(self, "rng", dict((e, self.rng[e]) for e in edges))
        vidx = self.vertices.index
        object.__setattr__(self, "_edge_index", {e: i for i, e in enumerate(edges)})
        object.__setattr__(self, "src_idx", np.array([vidx(self.src[e]) for e in edges], dtype=int))
        object.__setattr__(self, "rng_idx", np.array([vidx(self.rng[e]) for e in edges], dtype=int))
        out: dict = {v: [] for v in self.vertices}
        inc: dict = {v: [] for v in self.vertices}
        for e in edges:
            out[self.src[e]].append(e)
            inc[self.rng[e]].append(e)
        object.__setattr__(self, "_out", {v: tuple(es) for v, es in out.items()})
        object.__setattr__(self, "_in", {v: tuple(es) for v, es in inc.items()})

    def __eq__(self, other):
        if not isinstance(other, TopGraph):
            return NotImplemented
        return (
            self.vertices == other.vertices
            and self.edges == other.edges
            and self.src == other.src
            and self.rng == other.rng
            and self.compact == other.compact
        )

    def __hash__(self):
        return hash((self.vertices, self.edges))

    @property
    def vertex_list(self) -> tuple:
        return self.vertices.points

    def edge_index(self, e) -> int:
        return self._edge_index[e]

    def out_edges(self, v) -> tuple:
        """Edges with source ``v`` (the fibre s^-1(v)), in edge order."""
        return self._out[v]

    def in_edges(self, v) -> tuple:
        return self._in[v]

    def d(self, x, y) -> float:
        return self.vertices.d(x, y)

    def __repr__(self):
        return f"TopGraph(|E0|={len(self.vertices)}, |E1|={len(self.edges)})"


@dataclass(frozen=True)
class ValidationReport:
    sinks: tuple
    sources: tuple
    s_injective: bool
    s_witness: tuple | None
    regular_vertices: tuple
    no_sinks: bool
    r_surjective: bool

    def to_dict(self) -> dict:
        return {
            "sinks": list(self.sinks),
            "sources": list(self.sources),
            "s_injective": self.s_injective,
            "s_witness": list(self.s_witness) if self.s_witness else None,
            "regular_vertices": list(self.regular_vertices),
            "no_sinks": self.no_sinks,
            "r_surjective": self.r_surjective,
        }


@dataclass(frozen=True)
class Path:
    """A finite path ``e_n ... e_1``; ``edges[0]`` is the range-most edge.

    Zero-length paths are vertices and carry ``source == range``.
    """

    edges: tuple
    source: Hashable
    range: Hashable

    def __len__(self):
        return len(self.edges)

    def is_loop(self) -> bool:
        return len(self.edges) > 0 and self.source == self.range


def make_path(g: TopGraph, edges: Sequence) -> Path:
    edges = tuple(edges)
    if not edges:
        raise ValueError("use vertex_path for zero-length paths")
    for a, b in zip(edges, edges[1:]):
        if g.src[a] != g.rng[b]:
            raise ValueError(f"edges {a!r}, {b!r} are not composable")
    return Path(edges, g.src[edges[-1]], g.rng[edges[0]])


def vertex_path(v) -> Path:
    return Path((), v, v)


# ---------------------------------------------------------------------------
# ingestion
# ---------------------------------------------------------------------------

_TOP_KEYS = {"vertices", "metric", "edges", "compact", "name"}
_VERTEX_KEYS = {"id", "coords"}
_EDGE_KEYS = {"id", "src", "rng"}
_METRIC_KEYS = {"type", "entries"}


def _check_keys(obj: Mapping, allowed: set, where: str):
    unknown = set(obj) - allowed
    if unknown:
        raise SchemaError(f"{where}: unknown keys {sorted(unknown)}")


def parse_document(text: str) -> Any:
    """Parse a JSON or YAML document."""
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        pass
    try:
        return yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise SchemaError(f"unparseable document: {exc}") from None


def _read_points(items) -> tuple[list, list | None]:
    if not isinstance(items, list) or not items:
        raise SchemaError("`vertices` must be a non-empty list")
    ids, coords = [], []
    for item in items:
        if isinstance(item, Mapping):
            _check_keys(item, _VERTEX_KEYS, "vertex")
            if "id" not in item:
                raise SchemaError("vertex entry without `id`")
            ids.append(_ident(item["id"]))
            coords.append(item.get("coords"))
        else:
            ids.append(_ident(item))
            coords.append(None)
    if len(set(ids)) != len(ids):
        raise SchemaError("duplicate vertex ids")
    have = [c is not None for c in coords]
    return ids, (coords if all(have) else None)


def _ident(x):
    if isinstance(x, bool) or not isinstance(x, (str, int)):
        raise SchemaError(f"identifiers must be strings or integers, got {x!r}")
    return str(x)


def build_metric(ids: list, coords: list | None, metric: Any) -> MetricSpace:
    """Turn a ``metric`` block into a validated :class:`MetricSpace`.

    Without a block, coordinates (if every vertex has them) give the Euclidean
    metric; otherwise the discrete {0, 1} metric is used.
    """
    if metric is None:
        space = euclidean_metric(ids, coords) if coords is not None else discrete_metric(ids)
    else:
        if isinstance(metric, str):
            metric = {"type": metric}
        if not isinstance(metric, Mapping):
            raise SchemaError("`metric` must be a mapping or a type name")
        _check_keys(metric, _METRIC_KEYS, "metric")
        kind = metric.get("type", "explicit" if "entries" in metric else None)
        if kind == "euclidean":
            if coords is None:
                raise SchemaError("euclidean metric requires `coords` on every vertex")
            space = euclidean_metric(ids, coords)
        elif kind == "arctan-z":
            space = arctan_metric(ids)
        elif kind == "discrete":
            space = discrete_metric(ids)
        elif kind == "explicit":
            space = _explicit_metric(ids, metric.get("entries"))
        else:
            raise SchemaError(f"unknown metric type {kind!r}")
    check_metric(space.points, space.dist)
    return space


def _explicit_metric(ids: list, entries) -> MetricSpace:
    if not isinstance(entries, list):
        raise SchemaError("explicit metric needs an `entries` list of [x, y, d]")
    index = {p: i for i, p in enumerate(ids)}
    n = len(ids)
    d = np.full((n, n), np.nan)
    np.fill_diagonal(d, 0.0)
    for entry in entries:
        if not isinstance(entry, (list, tuple)) or len(entry) != 3:
            raise SchemaError(f"metric entry {entry!r} is not [x, y, d]")
        x, y, val = _ident(entry[0]), _ident(entry[1]), entry[2]
        for p in (x, y):
            if p not in index:
                raise UnknownVertexError(f"metric entry: unknown vertex {p!r}")
        i, j = index[x], index[y]
        val = float(val)
        for a, b in ((i, j), (j, i)):
            if not np.isnan(d[a, b]) and d[a, b] != val:
                raise MetricError(f"conflicting distances for ({x!r}, {y!r})", (x, y))
            d[a, b] = val
    missing = np.argwhere(np.isnan(d))
    if missing.size:
        i, j = missing[0]
        raise SchemaError(f"explicit metric: missing distance for ({ids[i]!r}, {ids[j]!r})")
    return MetricSpace(tuple(ids), d)


def graph_from_dict(doc: Mapping) -> TopGraph:
    if not isinstance(doc, Mapping):
        raise SchemaError("graph document must be a mapping")
    _check_keys(doc, _TOP_KEYS, "graph")
    ids, coords = _read_points(doc.get("vertices"))
    space = build_metric(ids, coords, doc.get("metric"))
    raw_edges = doc.get("edges", [])
    if not isinstance(raw_edges, list):
        raise SchemaError("`edges` must be a list")
    edges, src, rng = [], {}, {}
    known = set(ids)
    for item in raw_edges:
        if not isinstance(item, Mapping):
            raise SchemaError(f"edge entry {item!r} is not a mapping")
        _check_keys(item, _EDGE_KEYS, "edge")
        for key in ("id", "src", "rng"):
            if key not in item:
                raise SchemaError(f"edge entry without `{key}`")
        e = _ident(item["id"])
        for key in ("src", "rng"):
            v = _ident(item[key])
            if v not in known:
                raise UnknownVertexError(f"edge {e!r}: unknown vertex {v!r}")
        edges.append(e)
        src[e] = _ident(item["src"])
        rng[e] = _ident(item["rng"])
    compact = doc.get("compact", True)
    if not isinstance(compact, bool):
        raise SchemaError("`compact` must be a boolean")
    return TopGraph(space, tuple(edges), src, rng, compact=compact)


def load_graph(description: str | Mapping) -> TopGraph:
    """Build a graph from a JSON/YAML document (text or already-parsed mapping)."""
    doc = parse_document(description) if isinstance(description, str) else description
    return graph_from_dict(doc)


def graph_to_dict(g: TopGraph) -> dict:
    """Serialise with an explicit distance table (round-trips through load_graph)."""
    pts = g.vertex_list
    entries = [
        [x, y, float(g.vertices.dist[i, j])]
        for (i, x), (j, y) in itertools.combinations(enumerate(pts), 2)
    ]
    return {
        "vertices": [{"id": v} for v in pts],
        "metric": {"type": "explicit", "entries": entries},
        "edges": [{"id": e, "src": g.src[e], "rng": g.rng[e]} for e in g.edges],
        "compact": g.compact,
    }


# ---------------------------------------------------------------------------
# structure
# ---------------------------------------------------------------------------


def validate(g: TopGraph) -> ValidationReport:
    emitting = set()
    receiving = set()
    first_with_source: dict = {}
    witness = None
    for e in g.edges:
        v = g.src[e]
        emitting.add(v)
        receiving.add(g.rng[e])
        if v in first_with_source:
            if witness is None:
                witness = (first_with_source[v], e)
        else:
            first_with_source[v] = e
    verts = g.vertex_list
    sinks = tuple(v for v in verts if v not in emitting)
    sources = tuple(v for v in verts if v not in receiving)
    regular = tuple(v for v in verts if v in receiving)
    return ValidationReport(
        sinks=sinks,
        sources=sources,
        s_injective=witness is None,
        s_witness=witness,
        regular_vertices=regular,
        no_sinks=not sinks,
        r_surjective=not sources,
    )


def enumerate_paths(g: TopGraph, n: int) -> list[Path]:
    """All paths of length ``n``; ``n == 0`` gives one zero-length path per vertex."""
    if n < 0:
        raise ValueError("path length must be non-negative")
    if n == 0:
        return [vertex_path(v) for v in g.vertex_list]
    # grow on the source side: (e_k .. e_1) -> (e_k .. e_1, e_0) with r(e_0) = s(e_1)
    layer = [(e,) for e in g.edges]
    for _ in range(n - 1):
        layer = [p + (f,) for p in layer for f in g.in_edges(g.src[p[-1]])]
    return [Path(p, g.src[p[-1]], g.rng[p[0]]) for p in layer]


# ---------------------------------------------------------------------------
# builders for parametric examples
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CircleRotation:
    angle: float


@dataclass(frozen=True)
class CompactifiedIntegerShift:
    N: int


@dataclass(frozen=True)
class ExplicitMap:
    """E0 = E1 = X, r = id, s = f."""

    space: MetricSpace
    mapping: Mapping


def discretize(spec, resolution: int | None = None) -> TopGraph:
    if resolution is not None and resolution < 3:
        raise ValueError("resolution must be at least 3")
    if isinstance(spec, CircleRotation):
        if resolution is None:
            raise ValueError("circle-rotation needs a resolution")
        return circle_rotation_graph(spec.angle, resolution)
    if isinstance(spec, CompactifiedIntegerShift):
        return compactified_shift_graph(spec.N)
    if isinstance(spec, ExplicitMap):
        return map_graph(spec.space, spec.mapping)
    raise TypeError(f"unsupported parametric descriptor {spec!r}")


def circle_rotation_graph(angle: float, n: int) -> TopGraph:
    """Uniform n-point net on the unit circle with the arc-length metric.

    Edge ``e_k`` has range ``x_k`` and source the sample nearest to ``x_k + angle``.
    """
    if n < 3:
        raise ValueError("resolution must be at least 3")
    mesh = 2 * math.pi / n
    ids = [f"x{k}" for k in range(n)]
    k = np.arange(n)
    steps = np.abs(k[:, None] - k[None, :])
    steps = np.minimum(steps, n - steps)
    space = MetricSpace(tuple(ids), mesh * steps)
    shift = int(round(angle / mesh)) % n
    edges = [f"e{j}" for j in range(n)]
    rng = {f"e{j}": ids[j] for j in range(n)}
    src = {f"e{j}": ids[(j + shift) % n] for j in range(n)}
    return TopGraph(space, tuple(edges), src, rng)


def _ext_label(x: float) -> str:
    if x == math.inf:
        return "+inf"
    if x == -math.inf:
        return "-inf"
    return str(int(x))


def compactified_shift_graph(N: int) -> TopGraph:
    """Truncation of r(n) = n, s(n) = n + 1 on Z u {+-inf} to {-N..N, -inf, +inf}.

    Each kept vertex ``u`` emits the single edge it emits in the full graph
    (edge ``u - 1``, or the loop at +-inf).  Ranges falling outside the window are
    clipped to -inf, so edge ``-N-1`` runs from ``-N`` into ``-inf``; vertex ``N``
    receives nothing.  The metric is the arctan distance.
    """
    if N < 0:
        raise ValueError("N must be non-negative")
    labels = [str(n) for n in range(-N, N + 1)] + ["-inf", "+inf"]
    space = arctan_metric(labels)
    edges, src, rng = [], {}, {}
    for u in range(-N, N + 1):
        e = str(u - 1)
        edges.append(e)
        src[e] = str(u)
        rng[e] = str(u - 1) if u - 1 >= -N else "-inf"
    for inf in ("-inf", "+inf"):
        edges.append(inf)
        src[inf] = inf
        rng[inf] = inf
    return TopGraph(space, tuple(edges), src, rng)


def map_graph(space: MetricSpace, mapping: Mapping) -> TopGraph:
    edges = tuple(space.points)
    for x in edges:
        if x not in mapping:
            raise SchemaError(f"map is not total: no image for {x!r}")
        if mapping[x] not in space:
            raise UnknownVertexError(f"map sends {x!r} to unknown point {mapping[x]!r}")
    return TopGraph(space, edges, {x: mapping[x] for x in edges}, {x: x for x in edges})
