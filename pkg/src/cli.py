# src/cli.py
"""
Command-line front end.

- Ingests a static edge list / MatrixMarket file, or a temporal network
  (one 'time src dst weight' file or a manifest of snapshot files).
- Subcommands: radius | centrality | sweep | walk-count | oracle-check | history.
- t is given absolutely or as a fraction of the measure's own permitted
  range ("0.95r"); results go to stdout as CSV or JSON, logs to stderr.
- Exit codes: 0 success, 2 invalid input or parameters, 3 numerical failure.
"""

import argparse
import logging
import sys
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np
import pandas as pd

from config import LOG_LEVEL, SWEEP_MAX_FRACTION, SOLVE_TOL, TOP_K_DEFAULT
from db import digest_inputs, list_runs, record_run
from errors import IdentityCheckError, NbtError, NumericalError, ValidationError
from labels import TEXTS
from modules.graph_model import IngestOptions, MERGE_RULES, adjacency, line_graph, read_graph
from modules.nbt_edge import (
    SERIES_KINDS,
    CoefficientSeries,
    EdgeCentralityPlan,
    edge_centrality,
    line_walk_radius,
    phi_via_linegraph,
    project_pk,
)
from modules.nbt_node import (
    katz_centrality,
    nbt_katz,
    nbt_subgraph_centrality,
    pk_recurrence,
    reciprocal_part,
)
from modules.oracle import run_static_battery, run_temporal_battery
from modules.ranking import OUTPUT_FORMATS, compare_table, rank_table, sweep_table, write_table
from modules.sparse_core import spectral_radius
from modules.temporal import (
    BacktrackRegime,
    PermittedRange,
    build_global,
    classical_temporal_katz,
    global_edge_index,
    read_temporal_edge_list,
    read_temporal_manifest,
    snapshot_radius,
    temporal_f_centrality,
    temporal_radii,
    temporal_walk_counts,
)

logger = logging.getLogger(__name__)

MEASURES = ("katz", "nbt-katz", "f-centrality", "nbt-subgraph")
EXIT_OK, EXIT_VALIDATION, EXIT_NUMERICAL = 0, 2, 3


@dataclass
class CommandResult:
    table: pd.DataFrame
    values: Dict[str, object] = field(default_factory=dict)
    failure: Optional[NbtError] = None


# -------------------------------------------------------------------
# INPUT
# -------------------------------------------------------------------
def ingest_options(args) -> IngestOptions:
    return IngestOptions(sort_nodes=args.sorted_nodes, merge=args.merge, drop_loops=args.drop_loops)


def input_paths(args) -> List[str]:
    given = [p for p in (args.input, args.temporal_input, args.temporal_manifest) if p]
    if len(given) != 1:
        raise ValidationError("give exactly one of --input, --temporal-input, --temporal-manifest")
    return given


def is_temporal(args) -> bool:
    return bool(args.temporal_input or args.temporal_manifest)


def load_static(args, binarize: bool = True):
    input_paths(args)
    if is_temporal(args):
        raise ValidationError(f"{args.command} with this measure needs a static --input")
    g = read_graph(args.input, ingest_options(args))
    return g.binarized() if binarize and args.binarize else g


def load_temporal(args, binarize: bool = True):
    input_paths(args)
    options = ingest_options(args)
    if args.temporal_manifest:
        tg = read_temporal_manifest(args.temporal_manifest, options)
    else:
        tg = read_temporal_edge_list(args.temporal_input, options)
    return tg.binarized() if binarize and args.binarize else tg


def parse_series(args) -> CoefficientSeries:
    if args.series == "resolvent":
        return CoefficientSeries.resolvent()
    if args.series == "exponential":
        return CoefficientSeries.exponential()
    if not args.coefficients:
        raise ValidationError("--series custom needs --coefficients c0,c1,...")
    try:
        coefficients = [float(c) for c in args.coefficients.split(",")]
    except ValueError as exc:
        raise ValidationError(f"cannot parse --coefficients {args.coefficients!r}") from exc
    return CoefficientSeries.custom(coefficients, tail_bound=args.tail_bound)


def parse_grid(text: str) -> List[float]:
    """Comma-separated fractions, or 'linspace:a:b:n'."""
    try:
        if text.startswith("linspace:"):
            _, a, b, count = text.split(":")
            fractions = np.linspace(float(a), float(b), int(count)).tolist()
        else:
            fractions = [float(f) for f in text.split(",")]
    except ValueError as exc:
        raise ValidationError(f"cannot parse --grid {text!r}") from exc
    for f in fractions:
        if not 0 <= f <= SWEEP_MAX_FRACTION:
            raise ValidationError(f"grid fraction {f:g} outside [0, {SWEEP_MAX_FRACTION}]")
    return fractions


# -------------------------------------------------------------------
# MEASURES
# -------------------------------------------------------------------
ScoreFn = Callable[[float], np.ndarray]


def static_measure(g, d, name: str, series: CoefficientSeries, tol: float,
                   route: str) -> Tuple[PermittedRange, ScoreFn]:
    A = adjacency(g)
    if name == "katz":
        rho_A = spectral_radius(A)
        return PermittedRange(rho_A), lambda t: katz_centrality(A, t, tol, rho=rho_A)

    rho_V = spectral_radius(d.V)
    permitted = PermittedRange(rho_V)
    if name == "f-centrality":
        return (PermittedRange(rho_V, series.radius),
                lambda t: edge_centrality(EdgeCentralityPlan.build(d, series, t), tol))

    if name == "nbt-katz":
        resolvent = CoefficientSeries.resolvent()

        def node_fn(t):
            return nbt_katz(A, t, tol, decomposition=d, node_labels=g.node_labels)

        def edge_fn(t):
            return edge_centrality(EdgeCentralityPlan.build(d, resolvent, t), tol)
    elif name == "nbt-subgraph":
        def node_fn(t):
            return nbt_subgraph_centrality(A, t, decomposition=d)

        def edge_fn(t):
            return np.diag(phi_via_linegraph(d, t, tol)).copy()
    else:
        raise ValidationError(f"unknown measure {name!r}")

    if route == "node":
        return permitted, node_fn
    if route == "edge":
        return permitted, edge_fn

    # Ψ(t) has elementwise poles at t = 1/q_ij, which may lie inside 1/ρ(V)
    S = reciprocal_part(A)
    max_s = float(S.data.max()) if S.nnz else 0.0

    def auto_fn(t):
        if t * t * max_s < 1.0:
            return node_fn(t)
        logger.info("t=%.12g reaches an elementwise pole of the node system; using the edge route", t)
        return edge_fn(t)

    return permitted, auto_fn


def temporal_measure(tg, name: str, series: CoefficientSeries, tol: float,
                     regime: BacktrackRegime) -> Tuple[PermittedRange, ScoreFn]:
    if name == "katz":
        return PermittedRange(snapshot_radius(tg)), lambda t: classical_temporal_katz(tg, t, tol)
    if name == "nbt-subgraph":
        raise ValidationError("nbt-subgraph is a static measure")
    gd = build_global(tg, regime)
    rho_M = spectral_radius(gd.M)
    chosen = series if name == "f-centrality" else CoefficientSeries.resolvent()
    return PermittedRange(rho_M, chosen.radius), lambda t: temporal_f_centrality(gd, chosen, t, tol)


def prepare_measure(args, name: str):
    """(node labels, permitted range, score function) for one measure on the run's input."""
    series = parse_series(args)
    if is_temporal(args):
        tg = load_temporal(args)
        permitted, fn = temporal_measure(tg, name, series, args.tol, BacktrackRegime(args.regime))
        return tg.node_labels, permitted, fn
    g = load_static(args)
    permitted, fn = static_measure(g, line_graph(g), name, series, args.tol, args.route)
    return g.node_labels, permitted, fn


# -------------------------------------------------------------------
# COMMANDS
# -------------------------------------------------------------------
def _report(rows) -> pd.DataFrame:
    return pd.DataFrame(rows, columns=["graph", "quantity", "value"])


def cmd_radius(args) -> CommandResult:
    rows = []
    if is_temporal(args):
        tg = load_temporal(args, binarize=False)
        regime = BacktrackRegime(args.regime)
        variants = [("original", tg)] + ([("binarized", tg.binarized())] if args.binarize else [])
        for name, variant in variants:
            radii = temporal_radii(build_global(variant, regime))
            rho_A = snapshot_radius(variant)
            rows += [
                (name, "rho_M", radii.rho_M),
                (name, "max_rho_C", radii.max_block_rho),
                (name, "max_rho_A_snapshot", rho_A),
                (name, "temporal_katz_upper", PermittedRange(rho_A).upper),
                (name, "temporal_nbt_upper", PermittedRange(radii.rho_M).upper),
            ]
    else:
        g = load_static(args, binarize=False)
        variants = [("original", g)] + ([("binarized", g.binarized())] if args.binarize else [])
        for name, variant in variants:
            d = line_graph(variant)
            rho_A, rho_V = spectral_radius(d.A), spectral_radius(d.V)
            rows += [
                (name, "rho_A", rho_A),
                (name, "rho_V", rho_V),
                (name, "rho_W_sqrt", line_walk_radius(d)),
                (name, "katz_upper", PermittedRange(rho_A).upper),
                (name, "nbt_upper", PermittedRange(rho_V).upper),
            ]
    table = _report(rows)
    values = {f"{g}:{q}": float(v) for g, q, v in rows}
    return CommandResult(table, values)


def cmd_centrality(args) -> CommandResult:
    if args.compare:
        names = args.compare.split(":")
        if len(names) != 2 or names[0] == names[1] or any(n not in MEASURES for n in names):
            raise ValidationError(f"--compare expects two different measures from {MEASURES}, got {args.compare!r}")
        scores = []
        for name in names:
            labels, permitted, fn = prepare_measure(args, name)
            t = permitted.resolve(args.t)
            logger.info("%s at t=%.12g (permitted [0, %.12g))", name, t, permitted.upper)
            scores.append((name, fn(t)))
        top = args.top if args.top is not None else TOP_K_DEFAULT
        table, tau = compare_table(labels, scores[0], scores[1], top=top)
        table["kendall_tau"] = tau
        return CommandResult(table, {"kendall_tau": tau})

    labels, permitted, fn = prepare_measure(args, args.measure)
    t = permitted.resolve(args.t)
    logger.info("%s at t=%.12g (permitted [0, %.12g))", args.measure, t, permitted.upper)
    table = rank_table(labels, fn(t), args.measure, top=args.top)
    values = {"t": t}
    values.update({f"score:{n}": float(s) for n, s in zip(table["node"], table["score"])})
    return CommandResult(table, values)


def cmd_sweep(args) -> CommandResult:
    fractions = parse_grid(args.grid)
    labels, permitted, fn = prepare_measure(args, args.measure)
    if np.isinf(permitted.upper):
        raise ValidationError("the permitted range is unbounded; a fraction grid is undefined")
    grid = [(f, f * permitted.upper) for f in fractions]
    prominent = args.top if args.top is not None else TOP_K_DEFAULT
    table = sweep_table(labels, grid, fn, prominent=prominent)
    return CommandResult(table, {"points": len(fractions), "upper": permitted.upper})


def cmd_walk_count(args) -> CommandResult:
    if args.k < 0:
        raise ValidationError(f"--k must be nonnegative, got {args.k}")
    if is_temporal(args):
        tg = load_temporal(args)
        if args.k < 1:
            raise ValidationError("temporal walk counts need --k >= 1")
        gd = build_global(tg, BacktrackRegime(args.regime))
        counts = temporal_walk_counts(gd, args.k).tocoo()
        names = [f"{tg.node_labels[s]}->{tg.node_labels[d]}@{tg.timestamps[tau]:g}"
                 for tau, s, d in global_edge_index(tg)]
    else:
        g = load_static(args)
        if args.route == "edge" and args.k >= 1:
            counts = project_pk(line_graph(g), args.k - 1).tocoo()
        else:
            counts = pk_recurrence(adjacency(g), args.k)[args.k].tocoo()
        names = list(g.node_labels)
    table = pd.DataFrame({
        "src": [names[i] for i in counts.row],
        "dst": [names[j] for j in counts.col],
        "k": args.k,
        "count": counts.data,
    }, columns=["src", "dst", "k", "count"])
    order = np.lexsort((counts.col, counts.row))
    table = table.iloc[order].reset_index(drop=True)
    return CommandResult(table, {"nonzeros": len(table), "total": float(table["count"].sum())})


def cmd_oracle_check(args) -> CommandResult:
    if is_temporal(args):
        results = run_temporal_battery(load_temporal(args), args.kmax)
    else:
        results = run_static_battery(load_static(args), args.kmax)
    table = pd.DataFrame([vars(r) for r in results], columns=["identity", "deviation", "tol", "passed"])
    failed = [r.identity for r in results if not r.passed]
    values = {r.identity: r.deviation for r in results}
    return CommandResult(table, values, IdentityCheckError(failed) if failed else None)


def cmd_history(args) -> CommandResult:
    runs = list_runs(args.ledger, command=args.only)
    table = pd.DataFrame(runs, columns=["id", "command", "input_digest", "status", "created_at"])
    return CommandResult(table)


COMMANDS = {
    "radius": cmd_radius,
    "centrality": cmd_centrality,
    "sweep": cmd_sweep,
    "walk-count": cmd_walk_count,
    "oracle-check": cmd_oracle_check,
    "history": cmd_history,
}


# -------------------------------------------------------------------
# PARSER
# -------------------------------------------------------------------
def _columns_epilog() -> str:
    lines = ["output columns and report quantities:"]
    lines += [f"  {key:<22} {text}" for key, text in TEXTS.items()]
    return "\n".join(lines)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--input", help="static edge list ('src dst [weight]') or .mtx file")
    common.add_argument("--temporal-input", help="temporal records 'time src dst [weight]'")
    common.add_argument("--temporal-manifest", help="manifest of snapshot edge lists")
    common.add_argument("--sorted-nodes", action="store_true", help="order nodes by label")
    common.add_argument("--merge", choices=MERGE_RULES, default="reject")
    common.add_argument("--drop-loops", action="store_true")
    common.add_argument("--binarize", action="store_true", help="set every weight to 1")
    common.add_argument("--measure", choices=MEASURES, default="nbt-katz")
    common.add_argument("--series", choices=SERIES_KINDS, default="resolvent")
    common.add_argument("--coefficients", help="custom series c0,c1,...,cK")
    common.add_argument("--tail-bound", type=float, default=0.0)
    common.add_argument("--t", default="0.5r", help="absolute t or fraction of the radius, e.g. 0.95r")
    common.add_argument("--regime", choices=[r.value for r in BacktrackRegime], default="forbid-all")
    common.add_argument("--route", choices=("auto", "node", "edge"), default="auto",
                        help="auto: node system below its elementwise poles, edge route beyond")
    common.add_argument("--top", type=int, default=None)
    common.add_argument("--compare", help="two measures, e.g. katz:nbt-katz")
    common.add_argument("--grid", default="linspace:0:0.99:12")
    common.add_argument("--k", type=int, default=2)
    common.add_argument("--kmax", type=int, default=4)
    common.add_argument("--tol", type=float, default=SOLVE_TOL)
    common.add_argument("--format", choices=OUTPUT_FORMATS, default="csv")
    common.add_argument("--output", help="write the table here instead of stdout")
    common.add_argument("--ledger", help="record the run in this sqlite file")
    common.add_argument("--only", help="history: restrict to one subcommand")
    verbosity = common.add_mutually_exclusive_group()
    verbosity.add_argument("--verbose", action="store_true")
    verbosity.add_argument("--quiet", action="store_true")

    parser = argparse.ArgumentParser(
        prog="nbt",
        description="Non-backtracking walk centralities for weighted static and temporal networks.",
        epilog=_columns_epilog(),
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common])
    return parser


def configure_logging(args) -> None:
    level = logging.DEBUG if args.verbose else logging.ERROR if args.quiet else LOG_LEVEL
    logging.basicConfig(
        stream=sys.stderr,
        level=level,
        format="%(levelname)s %(name)s: %(message)s",
        force=True,
    )
    logging.captureWarnings(True)


# -------------------------------------------------------------------
# MAIN
# -------------------------------------------------------------------
def _ledger(args, status: str, values) -> None:
    if not args.ledger or args.command == "history":
        return
    try:
        digest = digest_inputs(input_paths(args))
    except (NbtError, OSError):
        digest = None
    config = {k: v for k, v in vars(args).items() if k not in ("ledger",)}
    run_id = record_run(args.command, digest, config, values, status=status, path=args.ledger)
    logger.info("recorded run %d in %s", run_id, args.ledger)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(args)

    try:
        result = COMMANDS[args.command](args)
        if args.output:
            with open(args.output, "w", encoding="utf-8", newline="") as handle:
                write_table(result.table, args.format, handle)
        else:
            write_table(result.table, args.format, sys.stdout)
        if result.failure is not None:
            raise result.failure
    except ValidationError as exc:
        logger.error("%s", exc)
        _ledger(args, "validation-error", {"error": str(exc)})
        return EXIT_VALIDATION
    except NumericalError as exc:
        logger.error("%s", exc)
        _ledger(args, "numerical-error", {"error": str(exc)})
        return EXIT_NUMERICAL

    _ledger(args, "ok", result.values)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
