"""FCI: build a partially oriented inducing path graph from an independence oracle.

Steps, in order: complete circle graph; adjacency search with growing
conditioning sets; collider orientation; possible-d-sep edge removal;
reset and re-orient colliders (recording definite non-colliders);
orientation rules R1-R3 to a fixed point.  Query order is fixed (pairs
lexicographic, subsets by size then lexicographic) so runs are reproducible.

There is no discriminating-path rule.  Its tail conclusion can contradict
an inducing path into that endpoint, which a tail mark must rule out.
"""
from __future__ import annotations

import enum
import logging
from collections.abc import Iterable, Iterator, Sequence
from dataclasses import dataclass, field
from itertools import combinations
from typing import NamedTuple, Optional, Union

from .graph_core import ARROW, CIRCLE, TAIL, EndpointMark, GraphError, MixedGraph, Poipg
from .oracles import CiOracle, OracleError, Verdict

log = logging.getLogger(__name__)


class ConflictPolicy(enum.Enum):
    FAIL_FAST = "fail"
    WARN_KEEP_FIRST = "warn"


class OrientationConflict(RuntimeError):
    def __init__(self, message: str, existing: str, demanded: str):
        super().__init__(message)
        self.existing = existing
        self.demanded = demanded


@dataclass(frozen=True)
class FciConfig:
    max_cond_size: Optional[int] = None
    conflict_policy: ConflictPolicy = ConflictPolicy.FAIL_FAST
    collapse_selection: bool = False

    def __post_init__(self):
        if self.max_cond_size is not None and self.max_cond_size < 0:
            raise ValueError("max_cond_size must be >= 0")

    @classmethod
    def for_data(cls, max_cond_size: Optional[int] = 3) -> "FciConfig":
        """Defaults for statistical oracles: capped tests, conflicts tolerated."""
        return cls(max_cond_size=max_cond_size, conflict_policy=ConflictPolicy.WARN_KEEP_FIRST)


class SepsetTable:
    """Separating set per unordered pair; the first recorded set wins."""

    def __init__(self):
        self._sets: dict[frozenset[int], frozenset[int]] = {}

    def record(self, a: int, b: int, sepset: Iterable[int]) -> None:
        key = frozenset((a, b))
        s = frozenset(sepset)
        if a in s or b in s:
            raise ValueError("a separating set cannot contain its own pair")
        self._sets.setdefault(key, s)

    def get(self, a: int, b: int) -> Optional[frozenset[int]]:
        return self._sets.get(frozenset((a, b)))

    def __contains__(self, pair) -> bool:
        return frozenset(pair) in self._sets

    def __len__(self) -> int:
        return len(self._sets)

    def items(self) -> list[tuple[tuple[int, int], frozenset[int]]]:
        return sorted((tuple(sorted(k)), v) for k, v in self._sets.items())


# ---------------------------------------------------------------------------
# trace


@dataclass(frozen=True)
class EdgeRemoved:
    a: int
    b: int
    sepset: frozenset[int]
    phase: str


@dataclass(frozen=True)
class ColliderOriented:
    a: int
    c: int
    b: int


@dataclass(frozen=True)
class MarksReset:
    pass


@dataclass(frozen=True)
class NoncolliderRecorded:
    a: int
    c: int
    b: int


@dataclass(frozen=True)
class RuleFired:
    rule: str
    u: int
    v: int
    mark: EndpointMark  # new mark at the v end of u *-* v


@dataclass(frozen=True)
class Conflict:
    description: str


Event = Union[EdgeRemoved, ColliderOriented, MarksReset, NoncolliderRecorded, RuleFired, Conflict]


@dataclass
class FciTrace:
    names: tuple[str, ...]
    events: list[Event] = field(default_factory=list)

    def add(self, event: Event) -> None:
        self.events.append(event)

    def lines(self) -> list[str]:
        n = self.names

        def vs(s):
            return ",".join(n[i] for i in sorted(s)) or "-"

        out = []
        for e in self.events:
            if isinstance(e, EdgeRemoved):
                out.append(f"EDGE_REMOVED {n[e.a]} {n[e.b]} phase={e.phase} sepset={vs(e.sepset)}")
            elif isinstance(e, ColliderOriented):
                out.append(f"COLLIDER {n[e.a]} {n[e.c]} {n[e.b]}")
            elif isinstance(e, MarksReset):
                out.append("MARKS_RESET")
            elif isinstance(e, NoncolliderRecorded):
                out.append(f"NONCOLLIDER {n[e.a]} {n[e.c]} {n[e.b]}")
            elif isinstance(e, RuleFired):
                out.append(f"RULE {e.rule} {n[e.u]} {n[e.v]} mark={e.mark.label}")
            else:
                out.append(f"CONFLICT {e.description}")
        return out

    def text(self) -> str:
        return "".join(line + "\n" for line in self.lines())

    @classmethod
    def parse(cls, names: Sequence[str], text: str) -> "FciTrace":
        index = {name: i for i, name in enumerate(names)}
        trace = cls(tuple(names))

        def ids(field_: str) -> frozenset[int]:
            return frozenset() if field_ == "-" else frozenset(index[v] for v in field_.split(","))

        for lineno, line in enumerate(text.splitlines(), 1):
            if not line.strip():
                continue
            head, _, rest = line.partition(" ")
            parts = rest.split()
            try:
                if head == "EDGE_REMOVED":
                    trace.add(EdgeRemoved(index[parts[0]], index[parts[1]], ids(parts[3][7:]), parts[2][6:]))
                elif head == "COLLIDER":
                    trace.add(ColliderOriented(*(index[p] for p in parts)))
                elif head == "MARKS_RESET":
                    trace.add(MarksReset())
                elif head == "NONCOLLIDER":
                    trace.add(NoncolliderRecorded(*(index[p] for p in parts)))
                elif head == "RULE":
                    trace.add(RuleFired(parts[0], index[parts[1]], index[parts[2]], EndpointMark.parse(parts[3][5:])))
                elif head == "CONFLICT":
                    trace.add(Conflict(rest))
                else:
                    raise ValueError(f"unknown event {head!r}")
            except (KeyError, IndexError, ValueError, GraphError) as e:
                raise ValueError(f"trace line {lineno}: {e}") from None
        return trace

    def replay(self) -> Poipg:
        """Rebuild the output graph by applying every event to the complete circle graph."""
        g = MixedGraph.complete(self.names)
        for e in self.events:
            if isinstance(e, EdgeRemoved):
                g.remove_edge(e.a, e.b)
            elif isinstance(e, ColliderOriented):
                for end in (e.a, e.b):
                    if g.mark(end, e.c) is not TAIL:
                        g.set_mark(end, e.c, ARROW)
            elif isinstance(e, MarksReset):
                g.reset_marks()
                g.noncolliders.clear()
            elif isinstance(e, NoncolliderRecorded):
                g.noncolliders.add((min(e.a, e.b), e.c, max(e.a, e.b)))
            elif isinstance(e, RuleFired):
                g.set_mark(e.u, e.v, e.mark)
        return g.freeze()


class FciResult(NamedTuple):
    poipg: Poipg
    sepsets: SepsetTable
    trace: FciTrace


# ---------------------------------------------------------------------------
# orientation machinery


class _Orienter:
    def __init__(self, g: MixedGraph, trace: FciTrace, policy: ConflictPolicy):
        self.g = g
        self.trace = trace
        self.policy = policy

    def set_mark(self, rule: str, u: int, v: int, mark: EndpointMark) -> bool:
        """Write ``mark`` at the ``v`` end of ``u *-* v`` if it is a circle."""
        current = self.g.mark(u, v)
        if current is mark:
            return False
        if current is CIRCLE:
            self.g.set_mark(u, v, mark)
            self.trace.add(RuleFired(rule, u, v, mark))
            return True
        self.conflict(rule, u, v, current, mark)
        return False

    def conflict(self, rule: str, u: int, v: int, existing: EndpointMark, demanded: EndpointMark) -> None:
        n = self.g.names
        desc = f"{rule} {n[u]} {n[v]} existing={existing.label} demanded={demanded.label}"
        if self.policy is ConflictPolicy.FAIL_FAST:
            raise OrientationConflict(
                f"orientation conflict at the {n[v]} end of {n[u]}-{n[v]}: "
                f"{existing.label} already set, {rule} demands {demanded.label}",
                existing.label,
                demanded.label,
            )
        log.warning("orientation conflict kept first mark: %s", desc)
        self.trace.add(Conflict(desc))


def unshielded_triples(g: MixedGraph) -> Iterator[tuple[int, int, int]]:
    """``(a, c, b)`` with ``a < b`` both adjacent to ``c`` and not to each other."""
    for c in range(g.n):
        for a, b in combinations(g.neighbors(c), 2):
            if not g.is_adjacent(a, b):
                yield a, c, b


def orient_colliders(
    g: MixedGraph,
    sepsets: SepsetTable,
    trace: Optional[FciTrace] = None,
    policy: ConflictPolicy = ConflictPolicy.FAIL_FAST,
) -> list[Event]:
    """Orient every unshielded triple whose middle vertex is outside the pair's sepset.

    Triples with the middle vertex inside the sepset become recorded
    non-colliders.  Returns the events produced.
    """
    trace = trace if trace is not None else FciTrace(g.names)
    start = len(trace.events)
    orienter = _Orienter(g, trace, policy)
    for a, c, b in list(unshielded_triples(g)):
        sep = sepsets.get(a, b)
        if sep is None:
            raise GraphError(f"no separating set recorded for nonadjacent {g.names[a]}, {g.names[b]}")
        if c in sep:
            g.noncolliders.add((a, c, b))
            trace.add(NoncolliderRecorded(a, c, b))
            continue
        trace.add(ColliderOriented(a, c, b))
        for end in (a, b):
            current = g.mark(end, c)
            if current is TAIL:
                orienter.conflict("collider", end, c, current, ARROW)
            elif current is CIRCLE:
                g.set_mark(end, c, ARROW)
    return trace.events[start:]


def possible_d_sep(g: Union[MixedGraph, Poipg], a, b=None) -> frozenset[int]:
    """Vertices reachable from ``a`` along simple paths whose interior
    vertices are colliders on the path or have adjacent path neighbours.

    ``b`` only needs to be a valid vertex; it is not excluded from the result.
    Depth-first over simple paths: a walk-based search would also accept
    vertices reachable only by revisiting a vertex.
    """
    if isinstance(g, Poipg):
        g = g.thaw()
    a = g.resolve(a)
    if b is not None and g.resolve(b) == a:
        raise GraphError("possible-d-sep needs two distinct vertices")
    found: set[int] = set()
    on_path = {a}

    def extend(u: int, v: int) -> None:
        for w in g.neighbors(v):
            if len(found) == g.n - 1:
                return  # nothing left to discover
            if w in on_path:
                continue
            if (g.mark(u, v) is ARROW and g.mark(w, v) is ARROW) or g.is_adjacent(u, w):
                found.add(w)
                on_path.add(w)
                extend(v, w)
                on_path.discard(w)

    for w in g.neighbors(a):
        found.add(w)
        on_path.add(w)
        extend(a, w)
        on_path.discard(w)
    return frozenset(found)


# orientation rules; each returns True when it changed a mark


def _rule1(o: _Orienter) -> bool:
    g = o.g
    changed = False
    for b in range(g.n):
        for c in g.neighbors(b):
            if g.mark(c, b) is not CIRCLE:
                continue
            for a in g.neighbors(b):
                if a != c and g.mark(a, b) is ARROW and not g.is_adjacent(a, c):
                    changed |= o.set_mark("R1", c, b, TAIL)
                    changed |= o.set_mark("R1", b, c, ARROW)
                    break
    return changed


def _rule2(o: _Orienter) -> bool:
    g = o.g
    changed = False
    for a in range(g.n):
        for c in g.neighbors(a):
            if g.mark(a, c) is not CIRCLE:
                continue
            for b in g.neighbors(a):
                if b == c or not g.is_adjacent(b, c):
                    continue
                if (g.is_parent(a, b) and g.mark(b, c) is ARROW) or (g.mark(a, b) is ARROW and g.is_parent(b, c)):
                    changed |= o.set_mark("R2", a, c, ARROW)
                    break
    return changed


def _rule3(o: _Orienter) -> bool:
    g = o.g
    changed = False
    for d in range(g.n):
        for b in g.neighbors(d):
            if g.mark(d, b) is not CIRCLE:
                continue
            hits = [
                x for x in g.neighbors(b)
                if x != d and g.is_adjacent(x, d) and g.mark(x, b) is ARROW and g.mark(x, d) is CIRCLE
            ]
            if any(not g.is_adjacent(x, y) for x, y in combinations(hits, 2)):
                changed |= o.set_mark("R3", d, b, ARROW)
    return changed


def apply_orientation_rules(
    g: MixedGraph,
    trace: Optional[FciTrace] = None,
    policy: ConflictPolicy = ConflictPolicy.FAIL_FAST,
) -> list[Event]:
    """Apply R1-R3 in order, repeatedly, until no mark changes."""
    trace = trace if trace is not None else FciTrace(g.names)
    start = len(trace.events)
    o = _Orienter(g, trace, policy)
    while True:
        changed = _rule1(o)
        changed |= _rule2(o)
        changed |= _rule3(o)
        if not changed:
            break
    return trace.events[start:]


# ---------------------------------------------------------------------------
# driver


class _Tester:
    def __init__(self, oracle: CiOracle, names: Sequence[str]):
        self.oracle = oracle
        self.names = names

    def independent(self, a: int, b: int, cond: Sequence[int]) -> bool:
        try:
            return self.oracle.query([a], [b], list(cond)) is Verdict.INDEPENDENT
        except Exception as e:
            q = (self.names[a], self.names[b], tuple(self.names[c] for c in cond))
            raise OracleError(f"oracle failed on {q[0]} vs {q[1]} given {{{', '.join(q[2])}}}: {e}", q) from e


def _adjacency_phase(g: MixedGraph, t: _Tester, sepsets: SepsetTable, trace: FciTrace, cap: Optional[int]) -> None:
    depth = 0
    while cap is None or depth <= cap:
        any_large = False
        for a in range(g.n):
            for b in g.neighbors(a):
                if not g.is_adjacent(a, b):
                    continue
                others = [v for v in g.neighbors(a) if v != b]
                if len(others) < depth:
                    continue
                any_large = True
                for cond in combinations(others, depth):
                    if t.independent(a, b, cond):
                        g.remove_edge(a, b)
                        sepsets.record(a, b, cond)
                        trace.add(EdgeRemoved(min(a, b), max(a, b), frozenset(cond), "adjacency"))
                        break
        if not any_large:
            break
        depth += 1


def _possible_dsep_phase(g: MixedGraph, t: _Tester, sepsets: SepsetTable, trace: FciTrace, cap: Optional[int]) -> None:
    pds = {v: possible_d_sep(g, v) for v in range(g.n)}
    for a, b in g.pairs():
        removed = False
        for x, y in ((a, b), (b, a)):
            pool = sorted(pds[x] - {x, y})
            top = len(pool) if cap is None else min(cap, len(pool))
            for size in range(top + 1):
                for cond in combinations(pool, size):
                    if t.independent(a, b, cond):
                        g.remove_edge(a, b)
                        sepsets.record(a, b, cond)
                        trace.add(EdgeRemoved(a, b, frozenset(cond), "possible-dsep"))
                        removed = True
                        break
                if removed:
                    break
            if removed:
                break


def fci(oracle: CiOracle, config: FciConfig = FciConfig()) -> FciResult:
    names = oracle.universe
    if not names:
        raise GraphError("the oracle has no variables")
    g = MixedGraph.complete(names)
    sepsets = SepsetTable()
    trace = FciTrace(tuple(names))
    t = _Tester(oracle, names)
    policy = config.conflict_policy

    _adjacency_phase(g, t, sepsets, trace, config.max_cond_size)
    orient_colliders(g, sepsets, trace, policy)
    _possible_dsep_phase(g, t, sepsets, trace, config.max_cond_size)

    g.reset_marks()
    g.noncolliders.clear()
    trace.add(MarksReset())
    orient_colliders(g, sepsets, trace, policy)
    apply_orientation_rules(g, trace, policy)
    return FciResult(g.freeze(), sepsets, trace)
