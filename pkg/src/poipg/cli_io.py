"""File formats: graph and POIPG JSON, CI text files, discrete CSV, DOT.

Every ``parse_*`` accepts ``bytes`` or ``str`` and raises `FormatError`
with a line (and where useful, field) position; every ``emit_*`` returns
UTF-8 ``bytes`` with a trailing newline and no environment-dependent
content, so identical inputs give byte-identical files.
"""
from __future__ import annotations

import csv
import io
import json
import re
from collections.abc import Mapping, Sequence
from typing import Optional, Union

from .graph_core import ARROW, CIRCLE, TAIL, Dag, EndpointMark, GraphError, Poipg, Role
from .oracles import DataError, Dataset
from .separation import CiSet, CiStatement

Source = Union[bytes, str]


class FormatError(ValueError):
    """Malformed input; ``line`` is 1-based when known."""

    def __init__(self, message: str, line: Optional[int] = None):
        super().__init__(f"line {line}: {message}" if line is not None else message)
        self.line = line


def _text(src: Source) -> str:
    if isinstance(src, bytes):
        try:
            return src.decode("utf-8")
        except UnicodeDecodeError as e:
            raise FormatError(f"input is not UTF-8 ({e.reason} at byte {e.start})") from None
    return src


def _json(src: Source):
    try:
        return json.loads(_text(src))
    except json.JSONDecodeError as e:
        raise FormatError(f"invalid JSON: {e.msg} (column {e.colno})", e.lineno) from None


def _dump(doc) -> bytes:
    return (json.dumps(doc, indent=2, sort_keys=False) + "\n").encode()


def _expect(cond: bool, message: str) -> None:
    if not cond:
        raise FormatError(message)


# ---------------------------------------------------------------------------
# DAG files


def graph_document(g: Dag) -> dict:
    return {
        "variables": [{"name": v.name, "role": v.role.value} for v in g.variables],
        "edges": [[g.name(u), g.name(v)] for u, v in sorted(g.edges)],
    }


def parse_graph(src: Source) -> Dag:
    doc = _json(src)
    _expect(isinstance(doc, dict), "a graph file must be a JSON object")
    unknown = set(doc) - {"variables", "edges"}
    _expect(not unknown, f"unknown graph field(s): {', '.join(sorted(unknown))}")
    variables = doc.get("variables")
    _expect(isinstance(variables, list), "'variables' must be a list")
    decl = []
    for i, v in enumerate(variables):
        _expect(isinstance(v, dict) and isinstance(v.get("name"), str), f"variables[{i}] needs a string 'name'")
        try:
            decl.append((v["name"], Role.parse(v.get("role", "observed"))))
        except GraphError as e:
            raise FormatError(f"variables[{i}]: {e}") from None
    edges = doc.get("edges", [])
    _expect(isinstance(edges, list), "'edges' must be a list")
    pairs = []
    for i, e in enumerate(edges):
        _expect(
            isinstance(e, list) and len(e) == 2 and all(isinstance(x, str) for x in e),
            f"edges[{i}] must be a [parent, child] pair of names",
        )
        pairs.append((e[0], e[1]))
    try:
        return Dag(decl, pairs)
    except GraphError as e:
        raise FormatError(str(e)) from None


def emit_graph(g: Dag, compact: bool = False) -> bytes:
    doc = graph_document(g)
    if compact:
        return json.dumps(doc, separators=(",", ":")).encode()
    return _dump(doc)


# ---------------------------------------------------------------------------
# POIPG files


def parse_poipg(src: Source) -> Poipg:
    doc = _json(src)
    _expect(isinstance(doc, dict), "a POIPG file must be a JSON object")
    names = doc.get("variables")
    _expect(isinstance(names, list) and all(isinstance(n, str) for n in names), "'variables' must be a list of names")
    edges = []
    for i, e in enumerate(doc.get("edges", [])):
        _expect(isinstance(e, dict) and {"a", "b", "mark_a", "mark_b"} <= set(e), f"edges[{i}] needs a, b, mark_a, mark_b")
        try:
            edges.append((e["a"], e["b"], EndpointMark.parse(e["mark_a"]), EndpointMark.parse(e["mark_b"])))
        except GraphError as err:
            raise FormatError(f"edges[{i}]: {err}") from None
    trip = doc.get("noncolliders", [])
    for i, t in enumerate(trip):
        _expect(isinstance(t, list) and len(t) == 3, f"noncolliders[{i}] must be a triple of names")
    try:
        return Poipg(names, edges, [tuple(t) for t in trip])
    except GraphError as e:
        raise FormatError(str(e)) from None


def emit_poipg(p: Poipg) -> bytes:
    n = p.names
    return _dump(
        {
            "variables": list(n),
            "edges": [
                {"a": n[e.a], "b": n[e.b], "mark_a": e.mark_a.label, "mark_b": e.mark_b.label} for e in p.edges
            ],
            "noncolliders": [[n[x], n[y], n[z]] for x, y, z in sorted(p.noncolliders)],
        }
    )


# ---------------------------------------------------------------------------
# CI files
#
#   vars A,B,C,D          (optional; otherwise the sorted mentioned names)
#   indep D ; A,B ; C     D independent of {A,B} given C
#   indep A ; B ; -       empty conditioning set

_NAME = re.compile(r"^[^\s,;#]+$")


def _names(field: str, line: int, allow_empty: bool) -> list[str]:
    field = field.strip()
    if field == "-":
        if allow_empty:
            return []
        raise FormatError("only the conditioning set may be '-'", line)
    out = [t.strip() for t in field.split(",")]
    for t in out:
        if not _NAME.match(t):
            raise FormatError(f"bad variable name {t!r}", line)
    if len(set(out)) != len(out):
        raise FormatError(f"repeated name in {field!r}", line)
    return out


def parse_ci(src: Source, universe: Optional[Sequence[str]] = None) -> CiSet:
    declared = list(universe) if universe is not None else None
    raw: list[tuple[int, list[str], list[str], list[str]]] = []
    for no, line in enumerate(_text(src).splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        word, _, rest = line.partition(" ")
        if word == "vars":
            if declared is not None:
                raise FormatError("variables declared twice", no)
            declared = _names(rest.replace(" ", ","), no, allow_empty=False) if rest.strip() else []
        elif word == "indep":
            parts = rest.split(";")
            if len(parts) != 3:
                raise FormatError("expected 'indep X ; Z ; Y'", no)
            raw.append((no, _names(parts[0], no, False), _names(parts[1], no, False), _names(parts[2], no, True)))
        else:
            raise FormatError(f"unknown directive {word!r}", no)
    if declared is None:
        declared = sorted({n for _, x, z, y in raw for n in x + z + y})
    index = {n: i for i, n in enumerate(declared)}
    stmts = []
    for no, x, z, y in raw:
        for n in x + z + y:
            if n not in index:
                raise FormatError(f"{n!r} is not a declared variable", no)
        try:
            stmts.append(CiStatement.make([index[n] for n in x], [index[n] for n in z], [index[n] for n in y]))
        except ValueError as e:
            raise FormatError(str(e), no) from None
    try:
        return CiSet(declared, stmts)
    except (GraphError, ValueError) as e:
        raise FormatError(str(e)) from None


def emit_ci(cond: CiSet) -> bytes:
    lines = ["vars " + ",".join(cond.universe)]
    lines += [s.format(cond.universe) for s in cond.sorted()]
    return ("\n".join(lines) + "\n").encode()


# ---------------------------------------------------------------------------
# discrete CSV
#
#   #arity A=2 B=2 C=3
#   A,B,C
#   0,1,2


def parse_csv(src: Source, arities: Optional[Mapping[str, int]] = None) -> Dataset:
    text = _text(src)
    declared: dict[str, int] = dict(arities or {})
    body: list[tuple[int, str]] = []
    for no, line in enumerate(text.splitlines(), 1):
        stripped = line.strip()
        if stripped.startswith("#arity"):
            for tok in stripped[len("#arity"):].split():
                name, eq, k = tok.partition("=")
                if not eq or not k.strip().isdigit():
                    raise FormatError(f"bad arity declaration {tok!r}; expected name=k", no)
                declared[name] = int(k)
        elif stripped.startswith("#") or not stripped:
            continue
        else:
            body.append((no, line))
    if not body:
        raise FormatError("no header row")
    rows_iter = csv.reader(io.StringIO("\n".join(line for _, line in body)))
    lines = [no for no, _ in body]
    header = [h.strip() for h in next(rows_iter)]
    missing = [h for h in header if h not in declared]
    if missing:
        raise FormatError(f"no arity declared for column(s) {', '.join(missing)}", lines[0])
    rows = []
    for k, row in enumerate(rows_iter, 1):
        if len(row) != len(header):
            raise FormatError(f"expected {len(header)} fields, found {len(row)}", lines[k])
        vals = []
        for j, cell in enumerate(row):
            cell = cell.strip()
            if not cell.isdigit():
                raise FormatError(f"column {header[j]!r}: {cell!r} is not a nonnegative integer", lines[k])
            v = int(cell)
            if v >= declared[header[j]]:
                raise FormatError(
                    f"column {header[j]!r}: value {v} outside 0..{declared[header[j]] - 1}", lines[k]
                )
            vals.append(v)
        rows.append(vals)
    if not rows:
        raise FormatError("no data rows")
    try:
        return Dataset(header, [declared[h] for h in header], rows)
    except DataError as e:
        raise FormatError(str(e)) from None


def emit_csv(data: Dataset) -> bytes:
    out = io.StringIO()
    out.write("#arity " + " ".join(f"{c}={k}" for c, k in zip(data.columns, data.arities)) + "\n")
    w = csv.writer(out, lineterminator="\n")
    w.writerow(data.columns)
    w.writerows(data.values.tolist())
    return out.getvalue().encode()


# ---------------------------------------------------------------------------
# DOT

_DOT_MARK = {ARROW: "normal", TAIL: "none", CIRCLE: "odot"}


def _dot_id(name: str) -> str:
    return '"' + name.replace("\\", "\\\\").replace('"', '\\"') + '"'


def emit_dot(p: Poipg) -> bytes:
    lines = ["digraph poipg {"]
    lines += [f"  {_dot_id(n)};" for n in p.names]
    for e in p.edges:
        lines.append(
            f"  {_dot_id(p.name(e.a))} -> {_dot_id(p.name(e.b))} "
            f"[dir=both, arrowtail={_DOT_MARK[e.mark_a]}, arrowhead={_DOT_MARK[e.mark_b]}];"
        )
    lines.append("}")
    return ("\n".join(lines) + "\n").encode()
