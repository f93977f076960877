"""Role-tagged DAGs, endpoint-marked mixed graphs and path vocabulary.

Vertices are dense integer ids; names are only used at the I/O boundary.
Most public functions also accept a vertex name wherever an id is expected,
which keeps tests and interactive use readable.
"""
from __future__ import annotations

import enum
from collections.abc import Iterable, Iterator, Sequence
from dataclasses import dataclass
from typing import Union

VertexRef = Union[int, str]


class GraphError(ValueError):
    """Raised for malformed graphs or references to unknown vertices."""


class Role(enum.Enum):
    OBSERVED = "observed"
    LATENT = "latent"
    SELECTION = "selection"

    @classmethod
    def parse(cls, value: Union[str, "Role"]) -> "Role":
        if isinstance(value, Role):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            raise GraphError(f"unknown role {value!r}; expected observed, latent or selection") from None


@dataclass(frozen=True)
class Variable:
    id: int
    name: str
    role: Role


def bits(mask: int) -> Iterator[int]:
    """Yield the indices of the set bits of ``mask`` in ascending order."""
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


def to_mask(ids: Iterable[int]) -> int:
    m = 0
    for i in ids:
        m |= 1 << i
    return m


class _Named:
    """Shared name/id resolution for graphs whose vertices are ``Variable``."""

    _vars: tuple[Variable, ...]
    _index: dict[str, int]

    @property
    def variables(self) -> tuple[Variable, ...]:
        return self._vars

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(v.name for v in self._vars)

    def __len__(self) -> int:
        return len(self._vars)

    def name(self, v: int) -> str:
        return self._vars[v].name

    def resolve(self, v: VertexRef) -> int:
        if isinstance(v, str):
            try:
                return self._index[v]
            except KeyError:
                raise GraphError(f"unknown vertex {v!r}") from None
        if isinstance(v, bool) or not isinstance(v, int) or not 0 <= v < len(self._vars):
            raise GraphError(f"unknown vertex id {v!r}")
        return v

    def resolve_set(self, vs: Union[VertexRef, Iterable[VertexRef], None]) -> frozenset[int]:
        if vs is None:
            return frozenset()
        if isinstance(vs, (int, str)):
            return frozenset([self.resolve(vs)])
        return frozenset(self.resolve(v) for v in vs)


def _check_names(variables: Sequence[Variable]) -> dict[str, int]:
    index: dict[str, int] = {}
    for i, var in enumerate(variables):
        if var.id != i:
            raise GraphError(f"variable ids must be 0..n-1 without gaps; got {var.id} at position {i}")
        if not var.name:
            raise GraphError("variable names must be nonempty")
        if var.name in index:
            raise GraphError(f"duplicate variable name {var.name!r}")
        index[var.name] = i
    return index


class Dag(_Named):
    """An immutable directed acyclic graph whose vertices carry a `Role`.

    ``variables`` may hold `Variable` objects or ``(name, role)`` pairs; ids
    are assigned by position.  Edges are ``(parent, child)`` pairs given as
    ids or names.  With ``collapse_selection=True`` every selection vertex is
    merged into one vertex (named ``"S"`` when that name is free).
    """

    __slots__ = ("_vars", "_index", "_parents", "_children", "_edges", "_topo", "_desc", "_anc")

    def __init__(
        self,
        variables: Sequence[Union[Variable, tuple[str, Union[str, Role]]]],
        edges: Iterable[tuple[VertexRef, VertexRef]] = (),
        *,
        collapse_selection: bool = False,
    ):
        vars_: list[Variable] = []
        for i, v in enumerate(variables):
            if isinstance(v, Variable):
                vars_.append(Variable(i, v.name, v.role))
            else:
                name, role = v
                vars_.append(Variable(i, str(name), Role.parse(role)))
        self._vars = tuple(vars_)
        self._index = _check_names(self._vars)

        pairs: list[tuple[int, int]] = []
        for e in edges:
            try:
                u, v = e
            except (TypeError, ValueError):
                raise GraphError(f"edge {e!r} is not a (parent, child) pair") from None
            pairs.append((self.resolve(u), self.resolve(v)))

        if collapse_selection:
            self._collapse(pairs)
            return
        self._freeze(pairs)

    def _collapse(self, pairs: list[tuple[int, int]]) -> None:
        sel = [v.id for v in self._vars if v.role is Role.SELECTION]
        if len(sel) <= 1:
            self._freeze(pairs)
            return
        taken = {v.name for v in self._vars if v.role is not Role.SELECTION}
        merged_name = "S" if "S" not in taken else "+".join(self._vars[s].name for s in sel)
        keep = [v for v in self._vars if v.role is not Role.SELECTION or v.id == sel[0]]
        new_id = {v.id: i for i, v in enumerate(keep)}
        for s in sel:
            new_id[s] = new_id[sel[0]]
        self._vars = tuple(
            Variable(i, merged_name if v.id == sel[0] else v.name, v.role) for i, v in enumerate(keep)
        )
        self._index = _check_names(self._vars)
        remapped = [(new_id[u], new_id[v]) for u, v in pairs]
        self._freeze([(u, v) for u, v in dict.fromkeys(remapped) if u != v])

    def _freeze(self, pairs: list[tuple[int, int]]) -> None:
        n = len(self._vars)
        parents = [0] * n
        children = [0] * n
        seen: set[tuple[int, int]] = set()
        for u, v in pairs:
            if u == v:
                raise GraphError(f"self-loop on {self._vars[u].name!r}")
            if (u, v) in seen:
                raise GraphError(f"duplicate edge {self._vars[u].name}->{self._vars[v].name}")
            seen.add((u, v))
            parents[v] |= 1 << u
            children[u] |= 1 << v
        self._parents = tuple(parents)
        self._children = tuple(children)
        self._edges = frozenset(seen)
        self._topo = _kahn(parents, children, self._vars)
        desc = [0] * n
        for v in reversed(self._topo):
            m = 1 << v
            for c in bits(children[v]):
                m |= desc[c]
            desc[v] = m
        anc = [0] * n
        for v in self._topo:
            m = 1 << v
            for p in bits(parents[v]):
                m |= anc[p]
            anc[v] = m
        self._desc = tuple(desc)
        self._anc = tuple(anc)

    @classmethod
    def build(
        cls,
        observed: Iterable[str] = (),
        latent: Iterable[str] = (),
        selection: Iterable[str] = (),
        edges: Iterable[tuple[VertexRef, VertexRef]] = (),
        *,
        collapse_selection: bool = False,
    ) -> "Dag":
        """Convenience constructor; ids run observed, then latent, then selection."""
        variables = [(n, Role.OBSERVED) for n in observed]
        variables += [(n, Role.LATENT) for n in latent]
        variables += [(n, Role.SELECTION) for n in selection]
        return cls(variables, edges, collapse_selection=collapse_selection)

    @classmethod
    def from_masks(cls, variables: Sequence[Variable], parent_masks: Sequence[int]) -> "Dag":
        """Build from per-vertex parent bitmasks (used by the enumerators)."""
        edges = [(p, v) for v, m in enumerate(parent_masks) for p in bits(m)]
        return cls(variables, edges)

    def with_edges(
        self,
        add: Iterable[tuple[VertexRef, VertexRef]] = (),
        remove: Iterable[tuple[VertexRef, VertexRef]] = (),
    ) -> "Dag":
        """Return a new graph with one batch of edge changes applied."""
        drop = {(self.resolve(u), self.resolve(v)) for u, v in remove}
        missing = drop - self._edges
        if missing:
            u, v = sorted(missing)[0]
            raise GraphError(f"cannot remove absent edge {self.name(u)}->{self.name(v)}")
        pairs = sorted(self._edges - drop) + [(self.resolve(u), self.resolve(v)) for u, v in add]
        return Dag(self._vars, pairs)

    # -- structure ---------------------------------------------------------

    @property
    def edges(self) -> frozenset[tuple[int, int]]:
        return self._edges

    @property
    def parent_masks(self) -> tuple[int, ...]:
        return self._parents

    @property
    def child_masks(self) -> tuple[int, ...]:
        return self._children

    @property
    def descendant_masks(self) -> tuple[int, ...]:
        return self._desc

    @property
    def ancestor_masks(self) -> tuple[int, ...]:
        return self._anc

    def role(self, v: VertexRef) -> Role:
        return self._vars[self.resolve(v)].role

    def ids_with_role(self, role: Role) -> tuple[int, ...]:
        return tuple(v.id for v in self._vars if v.role is role)

    @property
    def observed(self) -> tuple[int, ...]:
        return self.ids_with_role(Role.OBSERVED)

    @property
    def latent(self) -> tuple[int, ...]:
        return self.ids_with_role(Role.LATENT)

    @property
    def selection(self) -> tuple[int, ...]:
        return self.ids_with_role(Role.SELECTION)

    def role_mask(self, role: Role) -> int:
        return to_mask(self.ids_with_role(role))

    def is_adjacent(self, u: int, v: int) -> bool:
        return bool((self._parents[v] | self._children[v]) >> u & 1)

    def neighbor_mask(self, v: int) -> int:
        return self._parents[v] | self._children[v]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Dag):
            return NotImplemented
        return self._vars == other._vars and self._edges == other._edges

    def __hash__(self) -> int:
        return hash((self._vars, self._edges))

    def __repr__(self) -> str:
        es = ", ".join(f"{self.name(u)}->{self.name(v)}" for u, v in sorted(self._edges))
        roles = ", ".join(f"{v.name}:{v.role.value[0]}" for v in self._vars)
        return f"Dag([{roles}]; {{{es}}})"


def _kahn(parents: list[int], children: list[int], variables: Sequence[Variable]) -> tuple[int, ...]:
    import heapq

    indeg = [m.bit_count() for m in parents]
    heap = [v for v, d in enumerate(indeg) if d == 0]
    heapq.heapify(heap)
    order: list[int] = []
    while heap:
        v = heapq.heappop(heap)
        order.append(v)
        for c in bits(children[v]):
            indeg[c] -= 1
            if indeg[c] == 0:
                heapq.heappush(heap, c)
    if len(order) != len(parents):
        stuck = sorted(variables[v].name for v, d in enumerate(indeg) if d > 0)
        raise GraphError(f"edges form a directed cycle through {', '.join(stuck)}")
    return tuple(order)


def parents(g: Dag, v: VertexRef) -> frozenset[int]:
    return frozenset(bits(g.parent_masks[g.resolve(v)]))


def children(g: Dag, v: VertexRef) -> frozenset[int]:
    return frozenset(bits(g.child_masks[g.resolve(v)]))


def descendants(g: Dag, v: VertexRef) -> frozenset[int]:
    """Descendants of ``v``, including ``v`` itself."""
    return frozenset(bits(g.descendant_masks[g.resolve(v)]))


def ancestors(g: Dag, v: VertexRef) -> frozenset[int]:
    """Ancestors of ``v``, including ``v`` itself."""
    return frozenset(bits(g.ancestor_masks[g.resolve(v)]))


def topological_order(g: Dag) -> tuple[int, ...]:
    """Parents before children; ties broken by ascending id."""
    return g._topo


def validate_path(g: Dag, path: Sequence[VertexRef]) -> tuple[int, ...]:
    ids = tuple(g.resolve(v) for v in path)
    if not ids:
        raise GraphError("a path needs at least one vertex")
    if len(set(ids)) != len(ids):
        raise GraphError("path repeats a vertex")
    for u, v in zip(ids, ids[1:]):
        if not g.is_adjacent(u, v):
            raise GraphError(f"{g.name(u)} and {g.name(v)} are not adjacent")
    return ids


def is_collider_on(g: Dag, path: Sequence[VertexRef], v: VertexRef) -> bool:
    ids = validate_path(g, path)
    v = g.resolve(v)
    if v not in ids:
        raise GraphError(f"{g.name(v)} is not on the path")
    i = ids.index(v)
    if i == 0 or i == len(ids) - 1:
        raise GraphError(f"{g.name(v)} is an endpoint of the path; collider status is undefined there")
    into = g.parent_masks[v]
    return bool(into >> ids[i - 1] & 1 and into >> ids[i + 1] & 1)


# ---------------------------------------------------------------------------
# Endpoint-marked graphs


class EndpointMark(enum.Enum):
    TAIL = "-"
    ARROW = ">"
    CIRCLE = "o"

    @property
    def label(self) -> str:
        return self.name.lower()

    @classmethod
    def parse(cls, text: str) -> "EndpointMark":
        t = str(text).strip().lower()
        for m in cls:
            if t in (m.label, m.value):
                return m
        raise GraphError(f"unknown endpoint mark {text!r}")


TAIL, ARROW, CIRCLE = EndpointMark.TAIL, EndpointMark.ARROW, EndpointMark.CIRCLE

_LEGAL_PAIRS = {
    frozenset([TAIL, ARROW]),
    frozenset([CIRCLE, ARROW]),
    frozenset([CIRCLE]),
    frozenset([ARROW]),
}


@dataclass(frozen=True, order=True)
class EdgeRecord:
    a: int
    b: int
    mark_a: EndpointMark
    mark_b: EndpointMark


def render_edge(mark_a: EndpointMark, mark_b: EndpointMark) -> str:
    left = {TAIL: "-", ARROW: "<", CIRCLE: "o"}[mark_a]
    right = {TAIL: "-", ARROW: ">", CIRCLE: "o"}[mark_b]
    return f"{left}-{right}"


class MixedGraph:
    """Mutable endpoint-marked graph over ``n`` vertices.

    ``mark(u, v)`` is the mark at the ``v`` end of the edge ``u *-* v``.
    Used as the working graph during discovery; `Poipg` is its frozen form.
    """

    def __init__(self, names: Sequence[str]):
        self.names = tuple(names)
        self.n = len(self.names)
        self._index = {name: i for i, name in enumerate(self.names)}
        self._marks: list[dict[int, EndpointMark]] = [{} for _ in range(self.n)]
        self.noncolliders: set[tuple[int, int, int]] = set()

    @classmethod
    def complete(cls, names: Sequence[str], mark: EndpointMark = CIRCLE) -> "MixedGraph":
        g = cls(names)
        for a in range(g.n):
            for b in range(a + 1, g.n):
                g.add_edge(a, b, mark, mark)
        return g

    def resolve(self, v: VertexRef) -> int:
        if isinstance(v, str):
            try:
                return self._index[v]
            except KeyError:
                raise GraphError(f"unknown vertex {v!r}") from None
        if isinstance(v, bool) or not isinstance(v, int) or not 0 <= v < self.n:
            raise GraphError(f"unknown vertex id {v!r}")
        return v

    def add_edge(self, a: int, b: int, mark_a: EndpointMark, mark_b: EndpointMark) -> None:
        if a == b:
            raise GraphError("self-loop in mixed graph")
        if b in self._marks[a]:
            raise GraphError(f"{self.names[a]} and {self.names[b]} are already adjacent")
        self._marks[a][b] = mark_b
        self._marks[b][a] = mark_a

    def remove_edge(self, a: int, b: int) -> None:
        del self._marks[a][b]
        del self._marks[b][a]

    def is_adjacent(self, a: int, b: int) -> bool:
        return b in self._marks[a]

    def neighbors(self, v: int) -> list[int]:
        return sorted(self._marks[v])

    def mark(self, u: int, v: int) -> EndpointMark:
        """Mark at the ``v`` end of edge ``u *-* v``."""
        return self._marks[u][v]

    def set_mark(self, u: int, v: int, mark: EndpointMark) -> None:
        """Set the mark at the ``v`` end of edge ``u *-* v``."""
        if v not in self._marks[u]:
            raise GraphError(f"{self.names[u]} and {self.names[v]} are not adjacent")
        self._marks[u][v] = mark

    def pairs(self) -> list[tuple[int, int]]:
        return [(a, b) for a in range(self.n) for b in sorted(self._marks[a]) if a < b]

    def reset_marks(self, mark: EndpointMark = CIRCLE) -> None:
        for a in range(self.n):
            for b in self._marks[a]:
                self._marks[a][b] = mark

    def is_parent(self, u: int, v: int) -> bool:
        """True for ``u --> v``."""
        return self.is_adjacent(u, v) and self._marks[v][u] is TAIL and self._marks[u][v] is ARROW

    def copy(self) -> "MixedGraph":
        g = MixedGraph(self.names)
        g._marks = [dict(m) for m in self._marks]
        g.noncolliders = set(self.noncolliders)
        return g

    def freeze(self) -> "Poipg":
        edges = [(a, b, self._marks[b][a], self._marks[a][b]) for a, b in self.pairs()]
        return Poipg(self.names, edges, self.noncolliders)

    def __repr__(self) -> str:
        return f"MixedGraph({_edge_list(self.names, self.pairs(), self.mark)})"


def _edge_list(names, pairs, mark) -> str:
    return ", ".join(f"{names[a]} {render_edge(mark(b, a), mark(a, b))} {names[b]}" for a, b in pairs)


class Poipg(_Named):
    """Frozen partially oriented inducing path graph over observed variables.

    Edges are ``(a, b, mark_at_a, mark_at_b)``.  Definite non-collider
    triples ``(x, y, z)`` are stored explicitly with ``x < z``; they can hold
    even when both marks at ``y`` are circles.
    """

    __slots__ = ("_vars", "_index", "_marks", "_noncolliders")

    def __init__(
        self,
        names: Sequence[str],
        edges: Iterable[tuple[VertexRef, VertexRef, EndpointMark, EndpointMark]] = (),
        noncolliders: Iterable[tuple[VertexRef, VertexRef, VertexRef]] = (),
    ):
        self._vars = tuple(Variable(i, str(n), Role.OBSERVED) for i, n in enumerate(names))
        self._index = _check_names(self._vars)
        marks: list[dict[int, EndpointMark]] = [{} for _ in self._vars]
        for a, b, ma, mb in edges:
            a, b = self.resolve(a), self.resolve(b)
            if a == b:
                raise GraphError(f"self-loop on {self.name(a)!r}")
            if b in marks[a]:
                raise GraphError(f"more than one edge between {self.name(a)} and {self.name(b)}")
            if frozenset([ma, mb]) not in _LEGAL_PAIRS:
                raise GraphError(
                    f"illegal mark pair {render_edge(ma, mb)} on {self.name(a)}, {self.name(b)}"
                )
            marks[a][b] = mb
            marks[b][a] = ma
        self._marks = tuple(marks)
        trip = set()
        for x, y, z in noncolliders:
            x, y, z = self.resolve(x), self.resolve(y), self.resolve(z)
            if x > z:
                x, z = z, x
            if y not in marks[x] or y not in marks[z] or x == z:
                raise GraphError(
                    f"non-collider triple ({self.name(x)}, {self.name(y)}, {self.name(z)}) is not a path"
                )
            trip.add((x, y, z))
        self._noncolliders = frozenset(trip)

    @property
    def noncolliders(self) -> frozenset[tuple[int, int, int]]:
        return self._noncolliders

    @property
    def edges(self) -> tuple[EdgeRecord, ...]:
        return tuple(
            EdgeRecord(a, b, self._marks[b][a], self._marks[a][b])
            for a in range(len(self._vars))
            for b in sorted(self._marks[a])
            if a < b
        )

    def is_adjacent(self, a: VertexRef, b: VertexRef) -> bool:
        return self.resolve(b) in self._marks[self.resolve(a)]

    def neighbors(self, v: VertexRef) -> list[int]:
        return sorted(self._marks[self.resolve(v)])

    def mark(self, u: VertexRef, v: VertexRef) -> EndpointMark:
        """Mark at the ``v`` end of edge ``u *-* v``."""
        u, v = self.resolve(u), self.resolve(v)
        try:
            return self._marks[u][v]
        except KeyError:
            raise GraphError(f"{self.name(u)} and {self.name(v)} are not adjacent") from None

    def thaw(self) -> MixedGraph:
        g = MixedGraph(self.names)
        g._marks = [dict(m) for m in self._marks]
        g.noncolliders = set(self._noncolliders)
        return g

    def relabel(self, order: Sequence[int]) -> "Poipg":
        """Re-index vertices so that new id ``i`` is old id ``order[i]``."""
        new = {old: i for i, old in enumerate(order)}
        return Poipg(
            [self.name(o) for o in order],
            [(new[e.a], new[e.b], e.mark_a, e.mark_b) for e in self.edges],
            [(new[x], new[y], new[z]) for x, y, z in self._noncolliders],
        )

    def describe(self) -> str:
        return _edge_list(self.names, [(e.a, e.b) for e in self.edges], lambda u, v: self._marks[u][v])

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Poipg):
            return NotImplemented
        return self._vars == other._vars and self._marks == other._marks and self._noncolliders == other._noncolliders

    def __hash__(self) -> int:
        return hash((self._vars, self.edges, self._noncolliders))

    def __repr__(self) -> str:
        return f"Poipg({self.describe()})"
