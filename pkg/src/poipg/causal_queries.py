"""Causal claims that a partially oriented inducing path graph licenses.

Each claim is phrased at exactly the strength of the result it rests on:
a directed POIPG path gives a definite cause (theorem 2); a bidirected edge
rules out causation either way and implies a latent variable (theorem 3);
missing or blocked semi-directed paths restrict which directed paths can
exist without passing through selection variables (theorems 4-6).
"""
from __future__ import annotations

import enum
from collections.abc import Iterable, Iterator, Sequence
from dataclasses import dataclass
from itertools import combinations
from typing import Optional

from .graph_core import ARROW, TAIL, GraphError, Poipg, VertexRef


class ClaimKind(enum.Enum):
    DEFINITE_CAUSE = "DefiniteCause"
    NO_CAUSE_EITHER_WAY = "NoCauseEitherWay"
    LATENT_CONFOUNDER = "LatentConfounder"
    ALL_PATHS_HIT_S = "AllPathsHitS"
    ALL_PATHS_HIT_S_OR_C = "AllPathsHitSorC"
    PATHS_THROUGH_C_HIT_S = "PathsThroughCHitS"


_NEEDS_BLOCKER = {ClaimKind.ALL_PATHS_HIT_S_OR_C, ClaimKind.PATHS_THROUGH_C_HIT_S}

_MEANING = {
    ClaimKind.DEFINITE_CAUSE: "{a} is a (possibly indirect) cause of {b}, and {a} has no descendant among the selection variables",
    ClaimKind.NO_CAUSE_EITHER_WAY: "neither of {a} and {b} causes the other, directly or indirectly",
    ClaimKind.LATENT_CONFOUNDER: "the generating graph contains at least one latent variable",
    ClaimKind.ALL_PATHS_HIT_S: "every directed path from {a} to {b} passes through a selection variable",
    ClaimKind.ALL_PATHS_HIT_S_OR_C: "every directed path from {a} to {b} passes through a selection variable or one of {c}",
    ClaimKind.PATHS_THROUGH_C_HIT_S: "every directed path from {a} to {b} through one of {c} also passes through a selection variable",
}


@dataclass(frozen=True)
class CausalClaim:
    kind: ClaimKind
    subject: int
    object: int
    theorem: int
    blocker: Optional[frozenset[int]] = None

    def __post_init__(self):
        if (self.blocker is not None) != (self.kind in _NEEDS_BLOCKER):
            raise ValueError(f"{self.kind.value} claims {'need' if self.kind in _NEEDS_BLOCKER else 'take no'} blocker set")
        if not 2 <= self.theorem <= 6:
            raise ValueError("theorem number must be in 2..6")

    def format(self, names: Sequence[str]) -> str:
        line = f"THEOREM={self.theorem} KIND={self.kind.value} FROM={names[self.subject]} TO={names[self.object]}"
        if self.blocker is not None:
            line += " C={" + ",".join(names[i] for i in sorted(self.blocker)) + "}"
        return line

    def explain(self, names: Sequence[str]) -> str:
        c = "{" + ", ".join(names[i] for i in sorted(self.blocker or ())) + "}"
        return _MEANING[self.kind].format(a=names[self.subject], b=names[self.object], c=c)


def _vertex(p: Poipg, v: VertexRef) -> int:
    return p.resolve(v)


def _distinct(p: Poipg, a: VertexRef, b: VertexRef) -> tuple[int, int]:
    a, b = p.resolve(a), p.resolve(b)
    if a == b:
        raise GraphError("the two query vertices must differ")
    return a, b


def exists_directed_path(p: Poipg, a: VertexRef, b: VertexRef) -> bool:
    """Path of ``-->`` edges all pointing from ``a`` towards ``b``; trivially true for a == b."""
    a, b = _vertex(p, a), _vertex(p, b)
    seen = {a}
    stack = [a]
    while stack:
        x = stack.pop()
        if x == b:
            return True
        for y in p.neighbors(x):
            if y not in seen and p.mark(y, x) is TAIL and p.mark(x, y) is ARROW:
                seen.add(y)
                stack.append(y)
    return False


def exists_semi_directed_path(
    p: Poipg,
    a: VertexRef,
    b: VertexRef,
    through: Optional[Iterable[VertexRef]] = None,
    avoiding: Optional[Iterable[VertexRef]] = None,
) -> bool:
    """Acyclic path from ``a`` to ``b`` with no arrowhead pointing back towards ``a``.

    With ``through``, the path must visit one of those vertices; with
    ``avoiding``, it must visit none of them.
    """
    a, b = _distinct(p, a, b)
    thr = frozenset(p.resolve(v) for v in through) if through is not None else None
    avoid = frozenset(p.resolve(v) for v in avoiding) if avoiding is not None else frozenset()
    if thr is not None and a in thr:
        raise GraphError("the start vertex cannot be in the through set")
    if a in avoid or b in avoid:
        return False

    on_path = {a}

    def walk(x: int, hit: bool) -> bool:
        for y in p.neighbors(x):
            if y in on_path or y in avoid or p.mark(y, x) is ARROW:
                continue
            now = hit or (thr is not None and y in thr)
            if y == b:
                if thr is None or now:
                    return True
                continue
            on_path.add(y)
            found = walk(y, now)
            on_path.discard(y)
            if found:
                return True
        return False

    return walk(a, False)


def definite_cause(p: Poipg, a: VertexRef, b: VertexRef) -> Optional[CausalClaim]:
    a, b = _distinct(p, a, b)
    if exists_directed_path(p, a, b):
        return CausalClaim(ClaimKind.DEFINITE_CAUSE, a, b, theorem=2)
    return None


def no_cause_either_way(p: Poipg, a: VertexRef, b: VertexRef) -> Optional[CausalClaim]:
    """For ``a <-> b``: no directed path either way, and some latent variable exists."""
    a, b = _distinct(p, a, b)
    if p.is_adjacent(a, b) and p.mark(a, b) is ARROW and p.mark(b, a) is ARROW:
        return CausalClaim(ClaimKind.NO_CAUSE_EITHER_WAY, a, b, theorem=3)
    return None


def latent_variable(p: Poipg, a: VertexRef, b: VertexRef) -> Optional[CausalClaim]:
    """The latent-variable half of the bidirected-edge result.

    It asserts that a latent variable exists, not that it is a common cause
    of ``a`` and ``b``: with selection bias that need not hold.
    """
    claim = no_cause_either_way(p, a, b)
    if claim is None:
        return None
    return CausalClaim(ClaimKind.LATENT_CONFOUNDER, claim.subject, claim.object, theorem=3)


def blocking_claims(p: Poipg, a: VertexRef, b: VertexRef, c: Iterable[VertexRef] = ()) -> list[CausalClaim]:
    """Path-blocking claims for directed paths from ``a`` to ``b``.

    Order: theorem 5 (no semi-directed path at all), theorem 4 (none through
    ``c``), theorem 6 (all pass ``c``).  With empty ``c`` the last two are
    vacuous or repeat theorem 5 and are not emitted.
    """
    a, b = _distinct(p, a, b)
    cs = frozenset(p.resolve(v) for v in c)
    if cs & {a, b}:
        raise GraphError("the blocker set must not contain the query endpoints")
    out = []
    if not exists_semi_directed_path(p, a, b):
        out.append(CausalClaim(ClaimKind.ALL_PATHS_HIT_S, a, b, theorem=5))
    if cs:
        if not exists_semi_directed_path(p, a, b, through=cs):
            out.append(CausalClaim(ClaimKind.PATHS_THROUGH_C_HIT_S, a, b, theorem=4, blocker=cs))
        if not exists_semi_directed_path(p, a, b, avoiding=cs):
            out.append(CausalClaim(ClaimKind.ALL_PATHS_HIT_S_OR_C, a, b, theorem=6, blocker=cs))
    return out


def all_claims(p: Poipg, blockers: bool = True) -> list[CausalClaim]:
    """Every claim derivable from ``p``; with ``blockers``, theorems 4 and 6
    are tried for every nonempty blocker set."""
    n = len(p)
    out: list[CausalClaim] = []
    for a in range(n):
        for b in range(n):
            if a == b:
                continue
            for claim in (definite_cause(p, a, b), no_cause_either_way(p, a, b), latent_variable(p, a, b)):
                if claim is not None and (claim.theorem != 3 or a < b):
                    out.append(claim)
            others = [v for v in range(n) if v not in (a, b)]
            sets: Iterator[tuple[int, ...]] = (
                (s for k in range(1, len(others) + 1) for s in combinations(others, k)) if blockers else iter(())
            )
            out.extend(blocking_claims(p, a, b))
            for s in sets:
                out.extend(c for c in blocking_claims(p, a, b, s) if c.theorem != 5)
    return out
