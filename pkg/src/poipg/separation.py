"""d-separation, observable independence under selection, and inducing paths.

Every observable query conditions on the full selection set: data are only
ever seen in the subpopulation where all selection indicators equal one.
"""
from __future__ import annotations

from collections.abc import Iterable, Iterator, Sequence
from dataclasses import dataclass
from itertools import combinations, product
from typing import Union

from .graph_core import Dag, GraphError, Role, VertexRef, bits, to_mask, validate_path

SetArg = Union[VertexRef, Iterable[VertexRef], None]


# ---------------------------------------------------------------------------
# bitmask kernels


def reachable(parents: Sequence[int], children: Sequence[int], anc: Sequence[int], source: int, cond: int) -> int:
    """Vertices d-connected to ``source`` given ``cond`` (as a mask).

    Bayes-ball style reachability over (vertex, direction) states.  ``anc``
    holds inclusive ancestor masks.  The result never includes ``cond``.
    """
    anc_cond = 0
    for c in bits(cond):
        anc_cond |= anc[c]
    up, down = source & ~cond, 0
    seen_up = seen_down = 0
    while up or down:
        next_up = next_down = 0
        seen_up |= up
        seen_down |= down
        for v in bits(up):
            # arrived from a child (or started here); v is never in cond
            next_up |= parents[v]
            next_down |= children[v]
        for v in bits(down):
            if not cond >> v & 1:
                next_down |= children[v]
            if anc_cond >> v & 1:
                next_up |= parents[v]
        up = next_up & ~seen_up & ~cond
        down = next_down & ~seen_down
    return (seen_up | seen_down) & ~cond


def moral_separated(parents: Sequence[int], children: Sequence[int], anc: Sequence[int], x: int, z: int, y: int) -> bool:
    """Separation of ``x`` and ``z`` by ``y`` in the moralized ancestral subgraph."""
    keep = 0
    for v in bits(x | z | y):
        keep |= anc[v]
    adj = {}
    for v in bits(keep):
        m = parents[v] | (children[v] & keep)
        for c in bits(children[v] & keep):
            m |= parents[c]
        adj[v] = m & ~(1 << v)
    free = keep & ~y
    seen = x
    frontier = x
    while frontier:
        nxt = 0
        for v in bits(frontier):
            nxt |= adj[v]
        nxt &= free & ~seen
        if nxt & z:
            return False
        seen |= nxt
        frontier = nxt
    return not (x & z)


def _disjoint_masks(g: Dag, x: SetArg, z: SetArg, y: SetArg) -> tuple[int, int, int]:
    xs, zs, ys = g.resolve_set(x), g.resolve_set(z), g.resolve_set(y)
    overlap = (xs & zs) | (xs & ys) | (zs & ys)
    if overlap:
        raise GraphError("x, z and y must be disjoint; overlap: " + ", ".join(g.name(v) for v in sorted(overlap)))
    return to_mask(xs), to_mask(zs), to_mask(ys)


def d_separated(g: Dag, x: SetArg, z: SetArg, y: SetArg = None) -> bool:
    """True iff ``y`` blocks every path between ``x`` and ``z`` in ``g``."""
    xm, zm, ym = _disjoint_masks(g, x, z, y)
    return not reachable(g.parent_masks, g.child_masks, g.ancestor_masks, xm, ym) & zm


def d_separated_moral(g: Dag, x: SetArg, z: SetArg, y: SetArg = None) -> bool:
    """Same relation as `d_separated`, via the moralized ancestral graph."""
    xm, zm, ym = _disjoint_masks(g, x, z, y)
    return moral_separated(g.parent_masks, g.child_masks, g.ancestor_masks, xm, zm, ym)


def _require_observed(g: Dag, *sets: frozenset[int]) -> None:
    for s in sets:
        for v in s:
            if g.variables[v].role is not Role.OBSERVED:
                raise GraphError(f"{g.name(v)} is {g.variables[v].role.value}; only observed variables can be queried")


def observable_independent(g: Dag, x: SetArg, z: SetArg, y: SetArg = None) -> bool:
    """``x`` independent of ``z`` given ``y`` together with every selection variable."""
    xs, zs, ys = g.resolve_set(x), g.resolve_set(z), g.resolve_set(y)
    _require_observed(g, xs, zs, ys)
    return d_separated(g, xs, zs, ys | frozenset(g.selection))


def dependent_given_every_subset(g: Dag, a: VertexRef, b: VertexRef) -> bool:
    """For every observed X without a and b: a and b dependent given X and the selection set.

    Exponential in the number of observed variables; kept as a cross-check
    for `exists_inducing_path`.
    """
    a, b = _pair(g, a, b)
    sel = g.role_mask(Role.SELECTION)
    rest = [v for v in g.observed if v not in (a, b)]
    args = (g.parent_masks, g.child_masks, g.ancestor_masks)
    for k in range(len(rest) + 1):
        for xs in combinations(rest, k):
            if not reachable(*args, 1 << a, to_mask(xs) | sel) >> b & 1:
                return False
    return True


# ---------------------------------------------------------------------------
# inducing paths


@dataclass(frozen=True, order=True)
class InducingPathOrientation:
    into_a: bool
    into_b: bool


def _pair(g: Dag, a: VertexRef, b: VertexRef) -> tuple[int, int]:
    a, b = g.resolve(a), g.resolve(b)
    if a == b:
        raise GraphError("inducing paths need two distinct endpoints")
    _require_observed(g, frozenset([a, b]))
    return a, b


def is_inducing_path(g: Dag, path: Sequence[VertexRef], a: VertexRef, b: VertexRef) -> bool:
    a, b = _pair(g, a, b)
    ids = validate_path(g, path)
    if ids[0] != a or ids[-1] != b:
        raise GraphError(f"path runs {g.name(ids[0])}..{g.name(ids[-1])}, expected {g.name(a)}..{g.name(b)}")
    target = (1 << a) | (1 << b) | g.role_mask(Role.SELECTION)
    latent = g.role_mask(Role.LATENT)
    pm, desc = g.parent_masks, g.descendant_masks
    for prev, v, nxt in zip(ids, ids[1:], ids[2:]):
        if pm[v] >> prev & 1 and pm[v] >> nxt & 1:
            if not desc[v] & target:
                return False
        elif not latent >> v & 1:
            return False
    return True


def _inducing_paths(g: Dag, a: int, b: int) -> Iterator[tuple[int, ...]]:
    """Depth-first enumeration of acyclic inducing paths from ``a`` to ``b``.

    Legality of an interior vertex is decided as soon as both of its path
    neighbours are known, so illegal prefixes are cut immediately.
    """
    pm, cm = g.parent_masks, g.child_masks
    target = (1 << a) | (1 << b) | g.role_mask(Role.SELECTION)
    latent = g.role_mask(Role.LATENT)
    # colliders must have a descendant in target, i.e. be an ancestor of it
    collider_ok = 0
    for t in bits(target):
        collider_ok |= g.ancestor_masks[t]
    # interior vertices are latent non-colliders or colliders in collider_ok
    interior_ok = (latent | collider_ok) & ~((1 << a) | (1 << b))

    path = [a]
    on_path = 1 << a

    def extend(prev: int, v: int) -> Iterator[tuple[int, ...]]:
        nonlocal on_path
        nbrs = pm[v] | cm[v]
        if nbrs >> b & 1 and v != a and _legal(prev, v, b):
            yield tuple(path) + (b,)
        for w in bits(nbrs & interior_ok & ~on_path):
            if v != a and not _legal(prev, v, w):
                continue
            path.append(w)
            on_path |= 1 << w
            yield from extend(v, w)
            path.pop()
            on_path &= ~(1 << w)

    def _legal(prev: int, v: int, nxt: int) -> bool:
        if pm[v] >> prev & 1 and pm[v] >> nxt & 1:
            return bool(collider_ok >> v & 1)
        return bool(latent >> v & 1)

    if (pm[a] | cm[a]) >> b & 1:
        yield (a, b)
    yield from extend(-1, a)


def iter_inducing_paths(g: Dag, a: VertexRef, b: VertexRef) -> Iterator[tuple[int, ...]]:
    a, b = _pair(g, a, b)
    return _inducing_paths(g, a, b)


def inducing_path_orientations(g: Dag, a: VertexRef, b: VertexRef) -> frozenset[InducingPathOrientation]:
    """Orientations realized by at least one inducing path between ``a`` and ``b``."""
    a, b = _pair(g, a, b)
    pm = g.parent_masks
    found: set[InducingPathOrientation] = set()
    for p in _inducing_paths(g, a, b):
        found.add(InducingPathOrientation(bool(pm[a] >> p[1] & 1), bool(pm[b] >> p[-2] & 1)))
        if len(found) == 4:
            break
    return frozenset(found)


def exists_inducing_path(g: Dag, a: VertexRef, b: VertexRef) -> bool:
    a, b = _pair(g, a, b)
    return next(_inducing_paths(g, a, b), None) is not None


# ---------------------------------------------------------------------------
# conditional-independence statements


@dataclass(frozen=True)
class CiStatement:
    """``x`` independent of ``z`` given ``y``; members are universe indices.

    Build through `CiStatement.make` to get the canonical form (x holds the
    smallest index of x and z).
    """

    x: frozenset[int]
    z: frozenset[int]
    y: frozenset[int] = frozenset()
    independent: bool = True

    @classmethod
    def make(cls, x: Iterable[int], z: Iterable[int], y: Iterable[int] = (), independent: bool = True) -> "CiStatement":
        xs, zs, ys = frozenset(x), frozenset(z), frozenset(y)
        if not xs or not zs:
            raise ValueError("both sides of an independence statement must be nonempty")
        if xs & zs or xs & ys or zs & ys:
            raise ValueError("x, z and y must be pairwise disjoint")
        if min(zs) < min(xs):
            xs, zs = zs, xs
        return cls(xs, zs, ys, independent)

    def sort_key(self) -> tuple:
        return (len(self.y), sorted(self.y), len(self.x) + len(self.z), sorted(self.x), sorted(self.z))

    def format(self, names: Sequence[str]) -> str:
        def side(s):
            return ",".join(names[i] for i in sorted(s)) or "-"

        return f"indep {side(self.x)} ; {side(self.z)} ; {side(self.y)}"


class CiSet:
    """A set of independence statements over a named universe, read closed-world."""

    def __init__(self, universe: Sequence[str], statements: Iterable[CiStatement] = ()):
        self.universe = tuple(universe)
        if len(set(self.universe)) != len(self.universe):
            raise ValueError("universe names must be unique")
        n = len(self.universe)
        stmts = set()
        for s in statements:
            if not s.independent:
                raise ValueError("a CiSet only lists independencies")
            for i in s.x | s.z | s.y:
                if not 0 <= i < n:
                    raise ValueError(f"statement mentions index {i} outside the universe")
            stmts.add(CiStatement.make(s.x, s.z, s.y))
        self.statements = frozenset(stmts)

    @classmethod
    def from_names(cls, universe: Sequence[str], statements: Iterable[tuple]) -> "CiSet":
        """Statements given as ``(x_names, z_names, y_names)`` triples."""
        index = {n: i for i, n in enumerate(universe)}

        def ids(side):
            if isinstance(side, str):
                side = [side]
            try:
                return [index[n] for n in side]
            except KeyError as e:
                raise ValueError(f"unknown variable {e.args[0]!r}") from None

        return cls(universe, [CiStatement.make(ids(x), ids(z), ids(y)) for x, z, y in statements])

    def index(self, name: str) -> int:
        try:
            return self.universe.index(name)
        except ValueError:
            raise ValueError(f"unknown variable {name!r}") from None

    def __contains__(self, s: CiStatement) -> bool:
        return CiStatement.make(s.x, s.z, s.y) in self.statements

    def implies(self, x: Iterable[int], z: Iterable[int], y: Iterable[int] = ()) -> bool:
        """Membership up to symmetry and decomposition of a listed statement."""
        q = CiStatement.make(x, z, y)
        if q in self.statements:
            return True
        for s in self.statements:
            if s.y != q.y:
                continue
            if (q.x <= s.x and q.z <= s.z) or (q.x <= s.z and q.z <= s.x):
                return True
        return False

    def closure(self) -> "CiSet":
        """Close under symmetry, decomposition, weak union and contraction.

        These rules hold in every probability distribution, so the result
        only adds statements the listed ones already entail.  Exponential in
        the universe size; intended for hand-written tables.
        """
        known: set[CiStatement] = set()
        todo = list(self.statements)
        while todo:
            s = todo.pop()
            if s in known:
                continue
            known.add(s)
            new = list(_split_rules(s))
            for t in known:
                new.extend(_contract(s, t))
                new.extend(_contract(t, s))
            todo.extend(c for c in new if c not in known)
        return CiSet(self.universe, known)

    def sorted(self) -> list[CiStatement]:
        return sorted(self.statements, key=CiStatement.sort_key)

    def __len__(self) -> int:
        return len(self.statements)

    def __iter__(self) -> Iterator[CiStatement]:
        return iter(self.sorted())

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, CiSet):
            return NotImplemented
        return self.universe == other.universe and self.statements == other.statements

    def __hash__(self) -> int:
        return hash((self.universe, self.statements))

    def __repr__(self) -> str:
        body = "; ".join(s.format(self.universe)[6:] for s in self.sorted())
        return f"CiSet({', '.join(self.universe)}: {body})"


def _nonempty_subsets(s: frozenset[int]) -> Iterator[frozenset[int]]:
    items = sorted(s)
    for k in range(1, len(items) + 1):
        for c in combinations(items, k):
            yield frozenset(c)


def _split_rules(s: CiStatement) -> Iterator[CiStatement]:
    """Decomposition and weak union applied to either side of ``s``."""
    for a, b in ((s.x, s.z), (s.z, s.x)):
        for keep in _nonempty_subsets(a):
            moved = a - keep
            yield CiStatement.make(keep, b, s.y)
            if moved:
                yield CiStatement.make(keep, b, s.y | moved)


def _contract(s: CiStatement, t: CiStatement) -> Iterator[CiStatement]:
    """X _||_ Y | Z and X _||_ W | Y u Z give X _||_ Y u W | Z."""
    for sx, sy in ((s.x, s.z), (s.z, s.x)):
        for tx, tw in ((t.x, t.z), (t.z, t.x)):
            if sx == tx and t.y == s.y | sy and not (tw & s.y):
                yield CiStatement.make(sx, sy | tw, s.y)


def _split_assignments(items: Sequence[int]) -> Iterator[tuple[int, int]]:
    """All (x, z) masks of disjoint nonempty subsets of ``items`` with min(x) < min(z)."""
    for labels in product((0, 1, 2), repeat=len(items)):
        x = z = 0
        for v, lab in zip(items, labels):
            if lab == 1:
                x |= 1 << v
            elif lab == 2:
                z |= 1 << v
        if x and z and (x & -x) < (z & -z):
            yield x, z


def observable_ci_set(g: Dag, max_observed: int = 8) -> CiSet:
    """Every independence among observed variables that holds given the selection set."""
    obs = g.observed
    if len(obs) > max_observed:
        raise GraphError(
            f"{len(obs)} observed variables exceeds the enumeration guard of {max_observed}; "
            "pass max_observed explicitly to raise it"
        )
    pos = {v: i for i, v in enumerate(obs)}
    sel = g.role_mask(Role.SELECTION)
    args = (g.parent_masks, g.child_masks, g.ancestor_masks)
    stmts = []
    for k in range(len(obs) + 1):
        for ys in combinations(obs, k):
            ym = to_mask(ys)
            rest = [v for v in obs if not ym >> v & 1]
            reach = {v: reachable(*args, 1 << v, ym | sel) for v in rest}
            for xm, zm in _split_assignments(rest):
                r = 0
                for v in bits(xm):
                    r |= reach[v]
                if not r & zm:
                    stmts.append(
                        CiStatement.make([pos[v] for v in bits(xm)], [pos[v] for v in bits(zm)], [pos[v] for v in ys])
                    )
    return CiSet([g.name(v) for v in obs], stmts)


def pairwise_signature(g: Dag) -> int:
    """Bit-packed pairwise observable independencies of ``g``.

    d-separation is compositional, so this determines `observable_ci_set`;
    two DAGs over the same observed names have equal CI sets iff their
    signatures match.  Bit layout follows `signature_layout`.
    """
    obs = g.observed
    sel = g.role_mask(Role.SELECTION)
    args = (g.parent_masks, g.child_masks, g.ancestor_masks)
    sig = 0
    for bit, (i, j, rest) in enumerate(signature_layout(len(obs))):
        ym = to_mask(obs[r] for r in rest)
        if not reachable(*args, 1 << obs[i], ym | sel) >> obs[j] & 1:
            sig |= 1 << bit
    return sig


def signature_layout(n: int) -> list[tuple[int, int, tuple[int, ...]]]:
    out = []
    for i, j in combinations(range(n), 2):
        others = [v for v in range(n) if v not in (i, j)]
        for k in range(len(others) + 1):
            for ys in combinations(others, k):
                out.append((i, j, ys))
    return out


def ci_set_signature(cond: CiSet) -> int:
    """Signature of the relation that ``cond`` (with decomposition) describes."""
    sig = 0
    for bit, (i, j, ys) in enumerate(signature_layout(len(cond.universe))):
        if cond.implies([i], [j], ys):
            sig |= 1 << bit
    return sig


def nondescendants(g: Dag, v: VertexRef) -> frozenset[int]:
    v = g.resolve(v)
    d = g.descendant_masks[v]
    return frozenset(u for u in range(len(g)) if not d >> u & 1)


def local_markov_holds(g: Dag, v: VertexRef) -> bool:
    """Local directed Markov property at ``v`` under d-separation."""
    v = g.resolve(v)
    pa = frozenset(bits(g.parent_masks[v]))
    rest = nondescendants(g, v) - pa
    if not rest:
        return True
    return d_separated(g, {v}, rest, pa)
