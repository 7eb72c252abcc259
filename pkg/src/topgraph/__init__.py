"""Finite models of topological graphs: weighted shifts on trees, orbit-tree
representations, pseudoloops and inverse-limit pseudoperiodicity."""

__version__ = "0.1.0"

from .correspondence import (
    EdgeFunction,
    RankOnePair,
    VertexFunction,
    cc_norm,
    compact_action,
    inner_product,
    left_action,
    rank_one_decomposition,
    right_action,
)
from .dynamics import (
    FiniteDynSystem,
    InverseLimitSystem,
    PseudoOrbitWitness,
    graph_shift_system,
    inverse_limit,
    is_pseudoperiodic,
    load_system,
    relation_graph,
    verify_lift,
    verify_rho_identity,
)
from .errors import (
    CapacityError,
    GraphMismatchError,
    MetricError,
    PreconditionError,
    SchemaError,
    TopGraphError,
    UnknownVertexError,
)
from .finiteness import EpsPseudoloop, EpsPseudopath, FinitenessVerdict, decide, pseudoloop_at
from .graph_model import (
    MetricSpace,
    Path,
    TopGraph,
    ValidationReport,
    check_metric,
    circle_rotation_graph,
    compactified_shift_graph,
    discretize,
    enumerate_paths,
    load_graph,
    validate,
)
from .orbit_rep import (
    InfinitePath,
    LevelOperator,
    OrbitNode,
    OrbitTree,
    build_orbit_tree,
    gauge_unitary,
    lasso,
    prepend,
    rep_pi,
    rep_tau,
    sigma,
    unit_shift,
    verify_relations,
)
from .tree_shifts import (
    DirectedTree,
    ShiftAnalysis,
    WeightedShift,
    analyze,
    check_tree,
    dense_matrix,
    shift_adjoint_apply,
    shift_apply,
    shift_norm,
)

__all__ = [
    "EpsPseudoloop",
    "EpsPseudopath",
    "FinitenessVerdict",
    "decide",
    "pseudoloop_at",
    "EdgeFunction",
    "RankOnePair",
    "VertexFunction",
    "cc_norm",
    "compact_action",
    "inner_product",
    "left_action",
    "rank_one_decomposition",
    "right_action",
    "FiniteDynSystem",
    "InverseLimitSystem",
    "PseudoOrbitWitness",
    "graph_shift_system",
    "inverse_limit",
    "is_pseudoperiodic",
    "load_system",
    "relation_graph",
    "verify_lift",
    "verify_rho_identity",
    "CapacityError",
    "GraphMismatchError",
    "MetricError",
    "PreconditionError",
    "SchemaError",
    "TopGraphError",
    "UnknownVertexError",
    "MetricSpace",
    "Path",
    "TopGraph",
    "ValidationReport",
    "check_metric",
    "circle_rotation_graph",
    "compactified_shift_graph",
    "discretize",
    "enumerate_paths",
    "load_graph",
    "validate",
    "InfinitePath",
    "LevelOperator",
    "OrbitNode",
    "OrbitTree",
    "build_orbit_tree",
    "gauge_unitary",
    "lasso",
    "prepend",
    "rep_pi",
    "rep_tau",
    "sigma",
    "unit_shift",
    "verify_relations",
    "DirectedTree",
    "ShiftAnalysis",
    "WeightedShift",
    "analyze",
    "check_tree",
    "dense_matrix",
    "shift_adjoint_apply",
    "shift_apply",
    "shift_norm",
]
