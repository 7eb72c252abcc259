"""Command-line front end.

Exit codes:
  0  success
  1  decide-finiteness returned "infinite" and --fail-on-infinite was given
  2  usage error (unknown command or flag, malformed option value)
  3  input error (unreadable file, schema or metric violation, failed precondition)
  4  internal invariant failure (a verifier or oracle disagreed)
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .batteries import BATTERIES, DEFAULT_COUNTS, run_battery
from .correspondence import EdgeFunction, VertexFunction
from .dynamics import exact_eps, is_pseudoperiodic, load_system, verify_lift
from .errors import PreconditionError, TopGraphError
from .finiteness import INFINITE, decide
from .graph_model import load_graph, parse_document, validate
from .orbit_rep import (
    RELATION_TOL,
    build_orbit_tree,
    lasso,
    unit_circle_sample,
    unit_shift,
    verify_relations,
)
from .tree_shifts import DENSE_CAP, WeightedShift, analyze, check_tree, dense_matrix, dense_report

SCHEMA = "topgraph-report/1"

EXIT_OK = 0
EXIT_INFINITE = 1
EXIT_USAGE = 2
EXIT_INPUT = 3
EXIT_INVARIANT = 4


class InputError(Exception):
    pass


# -- rendering ---------------------------------------------------------------


def to_jsonable(obj):
    """Convert reports to plain JSON types; complex numbers become ``[re, im]``."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return [to_jsonable(obj.real), to_jsonable(obj.imag)]
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    return obj


def render_json(report: dict) -> str:
    return json.dumps(to_jsonable(report), sort_keys=True, indent=2) + "\n"


def _text_lines(obj, indent: int = 0) -> list[str]:
    pad = "  " * indent
    lines = []
    for key in sorted(obj):
        val = obj[key]
        if isinstance(val, dict):
            lines.append(f"{pad}{key}:")
            lines.extend(_text_lines(val, indent + 1))
        elif isinstance(val, list) and val and all(isinstance(v, dict) for v in val):
            lines.append(f"{pad}{key}: {len(val)} entries")
            for v in val:
                lines.append(f"{pad}  - " + ", ".join(f"{k}={v[k]}" for k in sorted(v)))
        else:
            lines.append(f"{pad}{key}: {val}")
    return lines


def render_text(report: dict, headline: str | None = None) -> str:
    body = _text_lines(to_jsonable(report))
    return "\n".join(([headline] if headline else []) + body) + "\n"


def emit(args, report: dict, headline: str | None = None):
    report = {"schema": SCHEMA, "command": args.command} | report
    out = render_json(report) if args.format == "json" else render_text(report, headline)
    sys.stdout.write(out)


# -- argument helpers --------------------------------------------------------


def _read(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror or exc}") from None


def eps_list(text: str) -> list[float]:
    try:
        vals = [float(x) for x in text.replace(" ", "").split(",") if x]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: {text!r}") from None
    if not vals or any(not (v > 0) or math.isinf(v) for v in vals):
        raise argparse.ArgumentTypeError("eps values must be positive and finite")
    return vals


def edge_list(text: str) -> list[str]:
    return [x for x in text.replace(" ", "").split(",") if x]


def positive_int(text: str) -> int:
    try:
        n = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if n < 1:
        raise argparse.ArgumentTypeError("must be at least 1")
    return n


def parse_weights(text: str) -> dict:
    """Weights as a JSON/YAML mapping, or as ``id value`` lines."""
    doc = None
    try:
        doc = parse_document(text)
    except TopGraphError:
        pass
    if not isinstance(doc, dict):
        doc = {}
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 2:
                raise InputError(f"weights line {lineno}: expected `id value`, got {line!r}")
            doc[parts[0]] = parts[1]
    out = {}
    for k, v in doc.items():
        try:
            if isinstance(v, (list, tuple)) and len(v) == 2:
                out[str(k)] = complex(float(v[0]), float(v[1]))
            elif isinstance(v, str):
                out[str(k)] = complex(v.replace(" ", "").replace("i", "j"))
            else:
                out[str(k)] = complex(v)
        except (TypeError, ValueError):
            raise InputError(f"weight for {k!r} is not a number: {v!r}") from None
    return out


# -- commands ----------------------------------------------------------------


def cmd_validate(args) -> int:
    g = load_graph(_read(args.graph))
    rep = validate(g)
    emit(
        args,
        {"graph": args.graph, "vertices": len(g.vertex_list), "edges": len(g.edges), "compact": g.compact}
        | rep.to_dict(),
    )
    return EXIT_OK


def cmd_shift_analyze(args) -> int:
    g = load_graph(_read(args.tree))
    tree = check_tree(g)
    if isinstance(tree, list):
        raise InputError("not a directed tree: " + "; ".join(map(str, tree)))
    weights = parse_weights(_read(args.weights)) if args.weights else {}
    unknown = sorted(set(weights) - set(tree.vertices))
    if unknown:
        raise InputError(f"weights name unknown vertices {unknown}")
    S = WeightedShift.of(tree, weights)
    res = analyze(S)
    report = {"tree": args.tree, "weights": {v: S.weights[i] for i, v in enumerate(tree.vertices)}}
    report |= res.to_dict()
    status = EXIT_OK
    if len(tree.vertices) <= DENSE_CAP:
        dense = dense_report(dense_matrix(S))
        agree = (
            abs(dense["norm"] - res.norm) <= 1e-9
            and dense["ker_dim"] == res.ker_dim
            and dense["coker_dim"] == res.coker_dim
        )
        report["dense_oracle"] = dense | {"agrees": agree}
        if not agree:
            status = EXIT_INVARIANT
    headline = f"ker={res.ker_dim} coker={res.coker_dim} index={res.index}"
    emit(args, report, headline)
    return status


def _orbit_battery(t, g, rng, count):
    """Random integer-valued (a, xi, eta) and sampled z; a vanishes off the regular set."""
    receives = np.zeros(len(g.vertex_list), dtype=bool)
    receives[g.rng_idx] = True
    zs = (1, -1, 1j, -1j, unit_circle_sample(7))
    rows = []
    for k in range(count):
        a = rng.integers(-3, 4, len(g.vertex_list)).astype(complex)
        a[~receives] = 0
        xi = rng.integers(-3, 4, len(g.edges)).astype(complex)
        eta = rng.integers(-3, 4, len(g.edges)).astype(complex)
        z = zs[k % len(zs)]
        rep = verify_relations(t, VertexFunction(g, a), EdgeFunction(g, xi), EdgeFunction(g, eta), z)
        rows.append({"trial": k} | rep.to_dict())
    return rows


def cmd_orbit_rep(args) -> int:
    g = load_graph(_read(args.graph))
    try:
        alpha = lasso(g, args.prefix, args.cycle)
    except (KeyError, ValueError) as exc:
        raise InputError(f"bad lasso: {exc}") from None
    n_min, n_max = args.window
    t = build_orbit_tree(g, alpha, n_min, n_max)
    one_e = EdgeFunction.constant(g, 1)
    receives = np.zeros(len(g.vertex_list), dtype=bool)
    receives[g.rng_idx] = True
    base_a = VertexFunction(g, np.where(receives, 1, 0).astype(complex))
    baseline = verify_relations(t, base_a, one_e, one_e, 1j)
    trials = _orbit_battery(t, g, np.random.default_rng(args.seed), args.battery)
    us = unit_shift(t, allow_sinks=True)
    shift = us.check()
    levels = {str(n): len(t.level_nodes(n)) for n in range(n_min, n_max + 1)}
    worst = max([baseline.to_dict()] + trials, key=lambda r: max(v for k, v in r.items() if k in _RES))
    worst_res = max(v for k, v in worst.items() if k in _RES)
    ok = worst_res <= RELATION_TOL and shift["left_inverse_defect"] == 0
    report = {
        "graph": args.graph,
        "lasso": alpha.label(),
        "window": [n_min, n_max],
        "k_bound": t.k_bound,
        "exact_levels": t.exact,
        "nodes": len(t),
        "nodes_per_level": levels,
        "interior_nodes": int(t.interior.sum()),
        "baseline": baseline.to_dict(),
        "seed": args.seed,
        "battery": args.battery,
        "trials": trials,
        "max_residual": worst_res,
        "tol": RELATION_TOL,
        "unit_shift": shift | {"sink_nodes": int(us.leaves.sum())},
        "ok": ok,
    }
    emit(args, report, f"orbit tree of {alpha.label()}: {len(t)} nodes, max residual {worst_res:.3g}")
    return EXIT_OK if ok else EXIT_INVARIANT


_RES = ("toeplitz_module", "toeplitz_inner", "covariance", "gauge")


def cmd_dynsys_check(args) -> int:
    if not args.eps and not args.exact:
        raise _Usage("give --eps and/or --exact")
    sys_ = load_system(_read(args.system))
    if args.normalize:
        sys_ = sys_.normalized()
    thresholds = [(repr(e), e) for e in (args.eps or [])]
    if args.exact:
        thresholds.append(("exact", exact_eps(sys_.space)))
    per_eps = {}
    for key, eps in thresholds:
        points = {}
        for x in sys_.points:
            w = is_pseudoperiodic(sys_, eps, x)
            if w is not None and not w.is_valid(sys_):
                raise AssertionError(f"invalid witness at {x!r}")
            points[x] = None if w is None else list(w.points)
        per_eps[key] = {
            "eps": eps,
            "all_pseudoperiodic": all(v is not None for v in points.values()),
            "witnesses": points,
        }
    report = {
        "system": args.system,
        "points": len(sys_.points),
        "surjective": sys_.surjective,
        "normalized": bool(args.normalize),
        "results": per_eps,
    }
    status = EXIT_OK
    if args.inverse_limit_depth:
        if sys_.space.diameter > 1 + 1e-12:
            raise PreconditionError(
                f"metric diameter {sys_.space.diameter:.6g} exceeds 1; rerun with --normalize"
            )
        lifts = {}
        for key, eps in thresholds:
            rep = verify_lift(sys_, eps, args.inverse_limit_depth)
            lifts[key] = rep.to_dict()
            if not rep.ok:
                status = EXIT_INVARIANT
        report["inverse_limit"] = {"depth": args.inverse_limit_depth, "lift": lifts}
    summary = ", ".join(f"{k}: {'all' if v['all_pseudoperiodic'] else 'not all'}" for k, v in per_eps.items())
    emit(args, report, f"pseudoperiodic points ({summary})")
    return status


def cmd_decide(args) -> int:
    if not args.eps and not args.exact:
        raise _Usage("give --eps and/or --exact")
    g = load_graph(_read(args.graph))
    verdict = decide(g, args.eps or [], args.exact)
    for table in verdict.pseudoloops.values():
        for w in table.values():
            if w is not None and not w.is_valid(g):
                raise AssertionError("pseudoloop witness failed its recheck")
    emit(args, {"graph": args.graph} | verdict.to_dict(), f"verdict: {verdict.verdict}")
    if verdict.verdict == INFINITE and args.fail_on_infinite:
        return EXIT_INFINITE
    return EXIT_OK


def cmd_battery(args) -> int:
    report = run_battery(args.name, args.seed, args.count)
    emit(args, report, f"battery {args.name}: {'ok' if report['ok'] else 'FAILED'}")
    return EXIT_OK if report["ok"] else EXIT_INVARIANT


# -- parser ------------------------------------------------------------------


class _Usage(Exception):
    pass


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("json", "text"), default="json", help="output format (default json)")

    p = argparse.ArgumentParser(
        prog="topgraph",
        description="Finiteness checks for finite models of topological graphs.",
        epilog="exit codes: 0 ok, 1 infinite (with --fail-on-infinite), 2 usage, 3 input error, 4 invariant failure",
    )
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True, metavar="COMMAND")

    v = sub.add_parser("validate", parents=[common], help="load a graph file and report sinks, sources, injectivity")
    v.add_argument("graph")
    v.set_defaults(func=cmd_validate)

    s = sub.add_parser("shift-analyze", parents=[common], help="analyze a weighted shift on a tree")
    s.add_argument("--tree", required=True)
    s.add_argument("--weights", help="JSON/YAML mapping or `id value` lines; missing vertices get 0")
    s.set_defaults(func=cmd_shift_analyze)

    o = sub.add_parser("orbit-rep", parents=[common], help="check the orbit-tree representation relations")
    o.add_argument("graph")
    o.add_argument("--prefix", type=edge_list, default=[], help="comma-separated edges, range-most first")
    o.add_argument("--cycle", type=edge_list, required=True, help="comma-separated edges, range-most first")
    o.add_argument("--window", type=int, nargs=2, default=[-2, 2], metavar=("N_MIN", "N_MAX"))
    o.add_argument("--battery", type=int, default=10, help="number of random (a, xi, eta, z) trials")
    o.add_argument("--seed", type=int, default=0)
    o.set_defaults(func=cmd_orbit_rep)

    d = sub.add_parser("dynsys-check", parents=[common], help="pseudoperiodic points of a finite system")
    d.add_argument("system")
    d.add_argument("--eps", type=eps_list)
    d.add_argument("--exact", action="store_true", help="also test below the minimum positive distance")
    d.add_argument("--inverse-limit-depth", type=positive_int)
    d.add_argument("--normalize", action="store_true", help="rescale the metric to diameter 1 first")
    d.set_defaults(func=cmd_dynsys_check)

    f = sub.add_parser("decide-finiteness", parents=[common], help="test the pseudoloop condition")
    f.add_argument("--graph", required=True)
    f.add_argument("--eps", type=eps_list)
    f.add_argument("--exact", action="store_true")
    f.add_argument("--fail-on-infinite", action="store_true", help="exit 1 when the verdict is infinite")
    f.set_defaults(func=cmd_decide)

    b = sub.add_parser("battery", parents=[common], help="run a seeded randomized check")
    b.add_argument("name", choices=BATTERIES)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--count", type=positive_int, help="cases (defaults: " + ", ".join(f"{k}={v}" for k, v in DEFAULT_COUNTS.items()) + ")")
    b.set_defaults(func=cmd_battery)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    try:
        return args.func(args)
    except _Usage as exc:
        parser.print_usage(sys.stderr)
        print(f"topgraph: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (InputError, TopGraphError) as exc:
        print(f"topgraph: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except AssertionError as exc:
        print(f"topgraph: invariant failure: {exc}", file=sys.stderr)
        return EXIT_INVARIANT


if __name__ == "__main__":
    sys.exit(main())
