"""Bimodule arithmetic on finitely supported functions over a discrete graph.

Vertex functions act on edge functions on the left through the range map and
on the right through the source map; the inner product sums over source
fibres.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .errors import GraphMismatchError, PreconditionError
from .graph_model import TopGraph


def _as_vector(g_items: tuple, values, what: str) -> np.ndarray:
    if isinstance(values, Mapping):
        vec = np.array([complex(values.get(k, 0)) for k in g_items], dtype=complex)
    elif callable(values):
        vec = np.array([complex(values(k)) for k in g_items], dtype=complex)
    else:
        vec = np.asarray(values, dtype=complex).copy()
        if vec.shape != (len(g_items),):
            raise ValueError(f"{what}: expected {len(g_items)} values, got shape {vec.shape}")
    vec.setflags(write=False)
    return vec


class _GraphFunction:
    graph: TopGraph
    values: np.ndarray

    def _check(self, other):
        if other.graph is not self.graph and other.graph != self.graph:
            raise GraphMismatchError("functions live on different graphs")

    def __eq__(self, other):
        if type(other) is not type(self):
            return NotImplemented
        return (other.graph is self.graph or other.graph == self.graph) and np.array_equal(
            self.values, other.values
        )

    def __hash__(self):
        return hash(self.values.tobytes())

    def allclose(self, other, atol=1e-12) -> bool:
        self._check(other)
        return bool(np.allclose(self.values, other.values, rtol=0, atol=atol))

    def is_zero(self) -> bool:
        return not np.any(self.values)


@dataclass(frozen=True, eq=False)
class VertexFunction(_GraphFunction):
    graph: TopGraph
    values: np.ndarray

    @classmethod
    def of(cls, g: TopGraph, values) -> "VertexFunction":
        return cls(g, _as_vector(g.vertex_list, values, "vertex function"))

    @classmethod
    def indicator(cls, g: TopGraph, *vs) -> "VertexFunction":
        return cls.of(g, {v: 1 for v in vs})

    @classmethod
    def constant(cls, g: TopGraph, c) -> "VertexFunction":
        return cls(g, np.full(len(g.vertex_list), complex(c)))

    def __call__(self, v) -> complex:
        return complex(self.values[self.graph.vertices.index(v)])

    def __mul__(self, other: "VertexFunction") -> "VertexFunction":
        self._check(other)
        return VertexFunction(self.graph, self.values * other.values)

    def support(self) -> tuple:
        return tuple(v for v, x in zip(self.graph.vertex_list, self.values) if x != 0)


@dataclass(frozen=True, eq=False)
class EdgeFunction(_GraphFunction):
    graph: TopGraph
    values: np.ndarray

    @classmethod
    def of(cls, g: TopGraph, values) -> "EdgeFunction":
        return cls(g, _as_vector(g.edges, values, "edge function"))

    @classmethod
    def indicator(cls, g: TopGraph, *es) -> "EdgeFunction":
        return cls.of(g, {e: 1 for e in es})

    @classmethod
    def constant(cls, g: TopGraph, c) -> "EdgeFunction":
        return cls(g, np.full(len(g.edges), complex(c)))

    def __call__(self, e) -> complex:
        return complex(self.values[self.graph.edge_index(e)])

    def __add__(self, other: "EdgeFunction") -> "EdgeFunction":
        self._check(other)
        return EdgeFunction(self.graph, self.values + other.values)

    def scale(self, c) -> "EdgeFunction":
        return EdgeFunction(self.graph, complex(c) * self.values)

    def support(self) -> tuple:
        return tuple(e for e, x in zip(self.graph.edges, self.values) if x != 0)


@dataclass(frozen=True)
class RankOnePair:
    """The rank-one operator ``theta(xi, eta) = xi <eta, .>``."""

    xi: EdgeFunction
    eta: EdgeFunction

    def apply(self, zeta: EdgeFunction) -> EdgeFunction:
        return right_action(self.xi, inner_product(self.eta, zeta))


def _same(a, b):
    if a.graph is not b.graph and a.graph != b.graph:
        raise GraphMismatchError("functions live on different graphs")
    return a.graph


def left_action(a: VertexFunction, xi: EdgeFunction) -> EdgeFunction:
    g = _same(a, xi)
    return EdgeFunction(g, a.values[g.rng_idx] * xi.values)


def right_action(xi: EdgeFunction, a: VertexFunction) -> EdgeFunction:
    g = _same(a, xi)
    return EdgeFunction(g, xi.values * a.values[g.src_idx])


def inner_product(xi: EdgeFunction, eta: EdgeFunction) -> VertexFunction:
    g = _same(xi, eta)
    out = np.zeros(len(g.vertex_list), dtype=complex)
    np.add.at(out, g.src_idx, np.conj(xi.values) * eta.values)
    return VertexFunction(g, out)


def cc_norm(xi: EdgeFunction) -> float:
    ip = inner_product(xi, xi).values.real
    return float(np.sqrt(ip.max())) if ip.size else 0.0


def rank_one_decomposition(a: VertexFunction) -> list[RankOnePair]:
    """Write the left action of ``a`` as a sum of rank-one operators.

    In the discrete case the partition of unity over ``r^-1(supp a)`` is one
    indicator per edge, giving ``xi_e = a(r(e)) 1_e`` and ``eta_e = 1_e``.
    """
    g = a.graph
    regular = np.zeros(len(g.vertex_list), dtype=bool)
    regular[g.rng_idx] = True
    bad = np.flatnonzero((a.values != 0) & ~regular)
    if bad.size:
        v = g.vertex_list[bad[0]]
        raise PreconditionError(f"function is nonzero at {v!r}, which receives no edge")
    pairs = []
    for i, e in enumerate(g.edges):
        w = a.values[g.rng_idx[i]]
        if w == 0:
            continue
        ind = np.zeros(len(g.edges), dtype=complex)
        ind[i] = 1
        pairs.append(RankOnePair(EdgeFunction(g, w * ind), EdgeFunction(g, ind)))
    return pairs


def compact_action(pairs: list[RankOnePair], zeta: EdgeFunction) -> EdgeFunction:
    """Evaluate ``sum_i theta(xi_i, eta_i)(zeta)``."""
    out = EdgeFunction(zeta.graph, np.zeros(len(zeta.graph.edges), dtype=complex))
    for pair in pairs:
        out = out + pair.apply(zeta)
    return out


def random_vertex_function(g: TopGraph, rng: np.random.Generator, values=(0, 1, -1, 2, 1j)) -> VertexFunction:
    vals = np.asarray(values, dtype=complex)
    return VertexFunction(g, vals[rng.integers(0, len(vals), len(g.vertex_list))])


def random_edge_function(g: TopGraph, rng: np.random.Generator, values=(0, 1, -1, 2, 1j)) -> EdgeFunction:
    vals = np.asarray(values, dtype=complex)
    return EdgeFunction(g, vals[rng.integers(0, len(vals), len(g.edges))])

