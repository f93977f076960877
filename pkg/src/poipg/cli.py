"""Command-line entry point: ``poipg discover|query|dsep|inducing|verify``.

Results go to stdout (or ``--out``); diagnostics go to stderr.  Exit codes:
0 success, 1 usage or input error, 2 verification failure, 3 query found
no claim, 4 oracle or data error.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import Optional, Sequence

from . import cli_io
from .causal_queries import blocking_claims, definite_cause, latent_variable, no_cause_either_way
from .equiv_verify import EnumBounds, VerificationError, iter_equiv_members, verify_poipg
from .fci import ConflictPolicy, FciConfig, OrientationConflict, fci
from .graph_core import Dag, GraphError
from .oracles import DataError, OracleError, caching_oracle, data_oracle, graphical_oracle, table_oracle
from .separation import d_separated, inducing_path_orientations, observable_independent

EXIT_OK, EXIT_USAGE, EXIT_VERIFY, EXIT_NO_CLAIM, EXIT_ORACLE = 0, 1, 2, 3, 4


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _read(path: str) -> bytes:
    try:
        return Path(path).read_bytes()
    except OSError as e:
        raise UsageError(f"cannot read {path}: {e.strerror}") from None


def _write(path: Optional[str], data: bytes) -> None:
    if path is None or path == "-":
        sys.stdout.flush()
        sys.stdout.buffer.write(data)
        sys.stdout.flush()
    else:
        Path(path).write_bytes(data)


def _names(arg: Optional[str]) -> list[str]:
    if not arg:
        return []
    return [t.strip() for t in arg.split(",") if t.strip()]


def _discover(ns) -> int:
    if ns.graph:
        g = cli_io.parse_graph(_read(ns.graph))
        if ns.collapse_selection:
            g = Dag(g.variables, sorted(g.edges), collapse_selection=True)
        oracle, exact = graphical_oracle(g), True
    elif ns.ci:
        oracle, exact = table_oracle(cli_io.parse_ci(_read(ns.ci))), True
    else:
        try:
            data = cli_io.parse_csv(_read(ns.data))
        except cli_io.FormatError as e:
            raise DataError(f"{ns.data}: {e}") from None
        oracle, exact = data_oracle(data, ns.alpha), False
    default = FciConfig() if exact else FciConfig.for_data()
    config = FciConfig(
        max_cond_size=ns.max_cond if ns.max_cond is not None else default.max_cond_size,
        conflict_policy=ConflictPolicy(ns.policy) if ns.policy else default.conflict_policy,
        collapse_selection=ns.collapse_selection,
    )
    result = fci(caching_oracle(oracle), config)
    _write(ns.out, cli_io.emit_poipg(result.poipg))
    if ns.dot:
        _write(ns.dot, cli_io.emit_dot(result.poipg))
    if ns.trace:
        _write(ns.trace, result.trace.text().encode())
    return EXIT_OK


def _query(ns) -> int:
    p = cli_io.parse_poipg(_read(ns.poipg))
    a, b = ns.from_, ns.to
    if ns.kind == "cause":
        claims = [definite_cause(p, a, b)]
    elif ns.kind == "confound":
        claims = [no_cause_either_way(p, a, b), latent_variable(p, a, b)]
    else:
        claims = blocking_claims(p, a, b, _names(ns.through))
    claims = [c for c in claims if c is not None]
    for c in claims:
        print(c.format(p.names))
        if ns.explain:
            print("  " + c.explain(p.names), file=sys.stderr)
    if not claims:
        print(f"no {ns.kind} claim for {a} -> {b}", file=sys.stderr)
        return EXIT_NO_CLAIM
    return EXIT_OK


def _dsep(ns) -> int:
    g = cli_io.parse_graph(_read(ns.graph))
    x, z, y = _names(ns.x), _names(ns.z), _names(ns.y)
    if not x or not z:
        raise UsageError("--x and --z must name at least one vertex")
    test = observable_independent if ns.given_selection else d_separated
    print("true" if test(g, x, z, y) else "false")
    return EXIT_OK


def _inducing(ns) -> int:
    g = cli_io.parse_graph(_read(ns.graph))
    orients = sorted(inducing_path_orientations(g, ns.a, ns.b))
    print("true" if orients else "false")
    for o in orients:
        print(f"into_{ns.a}={str(o.into_a).lower()} into_{ns.b}={str(o.into_b).lower()}")
    return EXIT_OK


def _verify(ns) -> int:
    cond = cli_io.parse_ci(_read(ns.ci))
    if len(cond.universe) != ns.obs:
        raise UsageError(f"--obs {ns.obs} but the CI file declares {len(cond.universe)} variables")
    bounds = EnumBounds(ns.obs, ns.max_latent, ns.max_sel, selection_sinks=ns.selection_sinks)
    p = cli_io.parse_poipg(_read(ns.poipg)) if ns.poipg else fci(table_oracle(cond)).poipg
    report = verify_poipg(p, iter_equiv_members(cond, bounds), bounds)
    _write(ns.out, report.text().encode())
    print(f"verified {report.class_size} members in {report.elapsed:.1f}s", file=sys.stderr)
    return EXIT_OK if report.passed else EXIT_VERIFY


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="poipg", description="Causal discovery with latent variables and selection bias.")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    d = sub.add_parser("discover", help="build a POIPG from a graph, a CI file or discrete data")
    src = d.add_mutually_exclusive_group(required=True)
    src.add_argument("--graph", help="graph JSON; answers come from d-separation given the selection set")
    src.add_argument("--ci", help="CI text file, read closed-world")
    src.add_argument("--data", help="discrete CSV with '#arity name=k' header lines")
    d.add_argument("--alpha", type=float, default=0.05, help="test level for --data (default 0.05)")
    d.add_argument("--max-cond", type=int, help="cap on conditioning-set size (default: none, or 3 for --data)")
    d.add_argument("--policy", choices=[p.value for p in ConflictPolicy], help="orientation conflict handling")
    d.add_argument("--collapse-selection", action="store_true")
    d.add_argument("--out", help="POIPG JSON output (default stdout)")
    d.add_argument("--dot", help="also write a DOT rendering here")
    d.add_argument("--trace", help="also write the event trace here")
    d.set_defaults(run=_discover)

    q = sub.add_parser("query", help="causal claims licensed by a POIPG")
    q.add_argument("kind", choices=["cause", "confound", "blocked"])
    q.add_argument("--poipg", required=True)
    q.add_argument("--from", dest="from_", required=True, metavar="X")
    q.add_argument("--to", required=True, metavar="Y")
    q.add_argument("--through", help="comma-separated blocker set for 'blocked'")
    q.add_argument("--explain", action="store_true", help="print a plain-language reading to stderr")
    q.set_defaults(run=_query)

    s = sub.add_parser("dsep", help="d-separation in a graph")
    s.add_argument("--graph", required=True)
    s.add_argument("--x", required=True)
    s.add_argument("--z", required=True)
    s.add_argument("--y", default="")
    s.add_argument("--given-selection", action="store_true", help="also condition on every selection vertex")
    s.set_defaults(run=_dsep)

    i = sub.add_parser("inducing", help="inducing paths between two observed vertices")
    i.add_argument("--graph", required=True)
    i.add_argument("--a", required=True)
    i.add_argument("--b", required=True)
    i.set_defaults(run=_inducing)

    v = sub.add_parser("verify", help="check a POIPG against every DAG in a bounded equivalence class")
    v.add_argument("--ci", required=True)
    v.add_argument("--obs", type=int, required=True)
    v.add_argument("--max-latent", type=int, default=0)
    v.add_argument("--max-sel", type=int, default=0)
    v.add_argument("--selection-sinks", action="store_true", help="only enumerate childless selection vertices")
    v.add_argument("--poipg", help="verify this POIPG instead of the one discovered from --ci")
    v.add_argument("--out", help="report output (default stdout)")
    v.set_defaults(run=_verify)
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        ns = build_parser().parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else EXIT_USAGE
    try:
        return ns.run(ns)
    except (OracleError, DataError, OrientationConflict) as e:
        print(f"poipg: {e}", file=sys.stderr)
        return EXIT_ORACLE
    except VerificationError as e:
        print(f"poipg: {e}", file=sys.stderr)
        return EXIT_VERIFY
    except (UsageError, cli_io.FormatError, GraphError, ValueError) as e:
        print(f"poipg: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
