"""Bounded enumeration of DAGs and of the DAGs that entail a CI set, and
empirical verification of a POIPG against every enumerated member.

The true equivalence class of a CI set is infinite (latent variables can be
added without limit), so everything here works under explicit `EnumBounds`
and reports them.  A check that passes for every member within the bounds
is evidence, not proof.

Search strategy: observed-observed pairs are decided first, then pairs
touching latent and selection vertices.  Each vertex pair is either absent
or oriented one way or the other; a partial graph is abandoned as soon as
one required independence fails, since adding edges can only add
d-connecting paths.  Required dependencies are checked on complete graphs.
"""
from __future__ import annotations

import time
from collections.abc import Iterable, Iterator, Sequence
from dataclasses import dataclass, field
from itertools import permutations
from typing import Optional

from .causal_queries import CausalClaim, ClaimKind, all_claims
from .graph_core import Dag, GraphError, Poipg, Role, Variable, bits
from .graph_core import ARROW, TAIL
from .separation import (
    CiSet,
    ci_set_signature,
    dependent_given_every_subset,
    inducing_path_orientations,
    observable_ci_set,
    pairwise_signature,
    reachable,
    signature_layout,
)

MAX_VERTICES = 8


@dataclass(frozen=True)
class EnumBounds:
    """At most ``max_latent`` latent and ``max_selection`` selection vertices
    alongside exactly ``n_observed`` observed ones."""

    n_observed: int
    max_latent: int = 0
    max_selection: int = 0
    selection_sinks: bool = False

    def __post_init__(self):
        if self.n_observed < 1:
            raise GraphError("at least one observed variable is required")
        if self.max_latent < 0 or self.max_selection < 0:
            raise GraphError("latent and selection bounds must be nonnegative")
        total = self.n_observed + self.max_latent + self.max_selection
        if total > MAX_VERTICES:
            raise GraphError(f"bounds allow {total} vertices; the enumeration guard is {MAX_VERTICES}")

    def layers(self) -> list[tuple[int, int]]:
        return [(k, m) for k in range(self.max_latent + 1) for m in range(self.max_selection + 1)]

    def describe(self) -> str:
        s = f"obs={self.n_observed} latent<={self.max_latent} selection<={self.max_selection}"
        return s + (" selection-sinks" if self.selection_sinks else "")


def _observed_names(n: int) -> list[str]:
    if n <= 26:
        return [chr(ord("A") + i) for i in range(n)]
    return [f"X{i + 1}" for i in range(n)]


def _layer_variables(observed: Sequence[str], k: int, m: int, max_selection: int) -> list[Variable]:
    taken = set(observed)

    def fresh(name: str) -> str:
        while name in taken:
            name += "_"
        taken.add(name)
        return name

    out = [Variable(i, n, Role.OBSERVED) for i, n in enumerate(observed)]
    for i in range(k):
        out.append(Variable(len(out), fresh(f"L{i + 1}"), Role.LATENT))
    for i in range(m):
        out.append(Variable(len(out), fresh("S" if max_selection == 1 else f"S{i + 1}"), Role.SELECTION))
    return out


# ---------------------------------------------------------------------------
# search core


def _search(
    n_obs: int,
    n: int,
    sel_mask: int,
    selection_sinks: bool,
    indep: Sequence[tuple[int, int, int]] = (),
    dep: Sequence[tuple[int, int, int]] = (),
) -> Iterator[tuple[int, ...]]:
    """Yield parent-mask tuples of every DAG over ``n`` vertices in which
    each ``(i, j, cond)`` of ``indep`` is d-separated and each of ``dep`` is
    d-connected."""
    pairs = sorted(
        ((i, j) for i in range(n) for j in range(i + 1, n)),
        key=lambda p: (p[1] >= n_obs, p[0] >= n_obs, p[1], p[0]),
    )
    par = [0] * n
    ch = [0] * n

    def separated(anc) -> bool:
        return all(not reachable(par, ch, anc, 1 << i, c) >> j & 1 for i, j, c in indep)

    def connected(anc) -> bool:
        return all(reachable(par, ch, anc, 1 << i, c) >> j & 1 for i, j, c in dep)

    def rec(k: int, anc: list[int]) -> Iterator[tuple[int, ...]]:
        if k == len(pairs):
            if connected(anc):
                yield tuple(par)
            return
        yield from rec(k + 1, anc)
        u, v = pairs[k]
        for p, c in ((u, v), (v, u)):
            if anc[p] >> c & 1 or (selection_sinks and sel_mask >> p & 1):
                continue
            par[c] |= 1 << p
            ch[p] |= 1 << c
            a2 = list(anc)
            ap = anc[p]
            for w in range(n):
                if a2[w] >> c & 1:
                    a2[w] |= ap
            if separated(a2):
                yield from rec(k + 1, a2)
            par[c] &= ~(1 << p)
            ch[p] &= ~(1 << c)

    yield from rec(0, [1 << i for i in range(n)])


def enumerate_dags(b: EnumBounds, observed: Optional[Sequence[str]] = None) -> Iterator[Dag]:
    """Every labeled DAG within the bounds, each exactly once.

    Layers run by latent count, then selection count; within a layer the
    order is fixed by the search.
    """
    names = list(observed) if observed is not None else _observed_names(b.n_observed)
    if len(names) != b.n_observed:
        raise GraphError(f"{len(names)} observed names given for n_observed={b.n_observed}")
    for k, m in b.layers():
        variables = _layer_variables(names, k, m, b.max_selection)
        n = len(variables)
        sel = sum(1 << v.id for v in variables if v.role is Role.SELECTION)
        for masks in _search(b.n_observed, n, sel, b.selection_sinks):
            yield Dag.from_masks(variables, masks)


def _target_signature(cond: CiSet) -> int:
    return ci_set_signature(cond.closure())


def iter_equiv_members(cond: CiSet, b: EnumBounds) -> Iterator[Dag]:
    """Stream the enumerated DAGs whose observable CI set equals ``cond``.

    ``cond`` is read as the set of relations it entails under the
    semi-graphoid rules, so generator lists such as ``{D indep {A,B} | C,
    A indep B}`` can be given directly.
    """
    if len(cond.universe) != b.n_observed:
        raise GraphError(f"CI set has {len(cond.universe)} variables but bounds say {b.n_observed}")
    closed = cond.closure()
    sig = ci_set_signature(closed)
    layout = signature_layout(b.n_observed)
    checked = False
    for k, m in b.layers():
        variables = _layer_variables(cond.universe, k, m, b.max_selection)
        n = len(variables)
        sel = sum(1 << v.id for v in variables if v.role is Role.SELECTION)
        indep, dep = [], []
        for bit, (i, j, ys) in enumerate(layout):
            c = sel
            for r in ys:
                c |= 1 << r
            (indep if sig >> bit & 1 else dep).append((i, j, c))
        for masks in _search(b.n_observed, n, sel, b.selection_sinks, indep, dep):
            g = Dag.from_masks(variables, masks)
            if not checked:
                # pairwise facts fix a graph's whole CI set; if the closure is
                # not such a set, nothing can match it exactly
                if observable_ci_set(g) != closed:
                    return
                checked = True
            yield g


def equiv_members(cond: CiSet, b: EnumBounds) -> list[Dag]:
    return list(iter_equiv_members(cond, b))


def brute_force_members(cond: CiSet, b: EnumBounds) -> list[Dag]:
    """Reference implementation: filter `enumerate_dags` by CI-set equality."""
    closed = cond.closure()
    return [g for g in enumerate_dags(b, cond.universe) if observable_ci_set(g) == closed]


# ---------------------------------------------------------------------------
# verification


CHECK_IDS = (
    "iii-adjacency",
    "v-tail",
    "vi-arrow",
    "vii-noncollider",
    "theorem1",
    "theorem2",
    "theorem3",
    "theorem4",
    "theorem5",
    "theorem6",
)


class VerificationError(GraphError):
    pass


@dataclass
class CheckResult:
    check: str
    failures: int = 0
    detail: str = ""
    counterexample: Optional[Dag] = None

    @property
    def passed(self) -> bool:
        return self.failures == 0


@dataclass
class VerificationReport:
    class_size: int
    checks: list[CheckResult]
    members_with_latent: int
    bounds: Optional[EnumBounds] = None
    elapsed: float = field(default=0.0, compare=False)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def check(self, check_id: str) -> CheckResult:
        for c in self.checks:
            if c.check == check_id:
                return c
        raise KeyError(check_id)

    def lines(self) -> list[str]:
        from .cli_io import emit_graph

        out = []
        if self.bounds is not None:
            out.append("BOUNDS " + self.bounds.describe())
        out.append(f"CLASS_SIZE {self.class_size}")
        out.append(f"MEMBERS_WITH_LATENT {self.members_with_latent}")
        for c in self.checks:
            if c.passed:
                out.append(f"CHECK {c.check} PASS")
            else:
                out.append(
                    f"CHECK {c.check} FAIL failures={c.failures} detail={c.detail} "
                    f"counterexample={emit_graph(c.counterexample, compact=True).decode()}"
                )
        out.append("RESULT " + ("PASS" if self.passed else "FAIL"))
        return out

    def text(self) -> str:
        return "\n".join(self.lines()) + "\n"


def _reduce(g: Dag) -> tuple:
    """Canonical key of ``g`` with barren latents dropped.

    A latent all of whose descendants are latent lies on no inducing path,
    no d-connecting path between observed vertices given observed and
    selection vertices, and no directed path between observed vertices, so
    every check below is blind to it.  Latent and selection labels are then
    canonicalized by trying every permutation within each role.
    """
    lat = g.role_mask(Role.LATENT)
    desc = g.descendant_masks
    keep = [v for v in range(len(g)) if not (lat >> v & 1 and not desc[v] & ~lat)]
    obs = [v for v in keep if g.role(v) is Role.OBSERVED]
    lats = [v for v in keep if g.role(v) is Role.LATENT]
    sels = [v for v in keep if g.role(v) is Role.SELECTION]
    pm = g.parent_masks
    best = None
    for lp in permutations(lats):
        for sp in permutations(sels):
            order = obs + list(lp) + list(sp)
            new = {old: i for i, old in enumerate(order)}
            masks = tuple(sum(1 << new[p] for p in bits(pm[v]) if p in new) for v in order)
            if best is None or masks < best:
                best = masks
    roles = (len(obs), len(lats), len(sels))
    return roles, best


def _rebuild(names: Sequence[str], key: tuple) -> Dag:
    (n_obs, n_lat, n_sel), masks = key
    variables = [Variable(i, n, Role.OBSERVED) for i, n in enumerate(names)]
    variables += [Variable(n_obs + i, f"L{i + 1}", Role.LATENT) for i in range(n_lat)]
    variables += [Variable(n_obs + n_lat + i, f"S{i + 1}", Role.SELECTION) for i in range(n_sel)]
    return Dag.from_masks(variables, masks)


def _directed_reach(g: Dag, src: int, allowed: int) -> int:
    """Vertices reachable from ``src`` by directed paths whose every vertex
    after ``src`` lies in ``allowed``."""
    cm = g.child_masks
    seen = 1 << src
    front = seen
    while front:
        nxt = 0
        for v in bits(front):
            nxt |= cm[v]
        front = nxt & allowed & ~seen
        seen |= front
    return seen


class _Verifier:
    def __init__(self, p: Poipg):
        self.p = p
        self.n = len(p)
        self.claims = all_claims(p)
        self.cache: dict[tuple, list[tuple[str, str]]] = {}

    def failures(self, g: Dag) -> list[tuple[str, str]]:
        key = _reduce(g)
        hit = self.cache.get(key)
        if hit is None:
            hit = self._check(_rebuild(self.p.names, key))
            self.cache[key] = hit
        out = list(hit)
        if not g.latent:
            for c in self.claims:
                if c.kind is ClaimKind.LATENT_CONFOUNDER:
                    out.append(("theorem3", f"{self._claim_text(c)}: graph has no latent variable"))
                    break
        return out

    def _claim_text(self, c: CausalClaim) -> str:
        return c.format(self.p.names).replace(" ", ",")

    def _check(self, g: Dag) -> list[tuple[str, str]]:
        p, names = self.p, self.p.names
        out: list[tuple[str, str]] = []
        orient = {}
        for a in range(self.n):
            for b in range(a + 1, self.n):
                o = inducing_path_orientations(g, a, b)
                orient[a, b] = o
                orient[b, a] = frozenset(type(x)(x.into_b, x.into_a) for x in o)
                pair = f"{names[a]}-{names[b]}"
                if bool(o) != p.is_adjacent(a, b):
                    out.append(("iii-adjacency", f"{pair}:adjacent={p.is_adjacent(a, b)},inducing={bool(o)}"))
                if bool(o) != dependent_given_every_subset(g, a, b):
                    out.append(("theorem1", f"{pair}:inducing={bool(o)}"))
        for e in p.edges:
            for u, v, m in ((e.b, e.a, e.mark_a), (e.a, e.b, e.mark_b)):
                # m is the mark at v on edge u *-* v
                os_ = orient[u, v]
                if m is TAIL and any(x.into_b for x in os_):
                    out.append(("v-tail", f"{names[u]}-{names[v]}:inducing path into {names[v]}"))
                if m is ARROW and not all(x.into_b for x in os_):
                    out.append(("vi-arrow", f"{names[u]}-{names[v]}:inducing path out of {names[v]}"))
        for x, y, z in sorted(p.noncolliders):
            if any(o.into_b for o in orient[x, y]) and any(o.into_b for o in orient[z, y]):
                out.append(("vii-noncollider", f"{names[x]}-{names[y]}-{names[z]}:inducing paths into {names[y]} from both sides"))
        sel = g.role_mask(Role.SELECTION)
        full = (1 << len(g)) - 1
        desc = g.descendant_masks
        for c in self.claims:
            a, b = c.subject, c.object
            fail = False
            if c.kind is ClaimKind.DEFINITE_CAUSE:
                fail = not desc[a] >> b & 1 or bool(desc[a] & sel)
            elif c.kind is ClaimKind.NO_CAUSE_EITHER_WAY:
                fail = bool(desc[a] >> b & 1 or desc[b] >> a & 1)
            elif c.kind is ClaimKind.ALL_PATHS_HIT_S:
                fail = bool(_directed_reach(g, a, full & ~sel) >> b & 1)
            elif c.kind is ClaimKind.ALL_PATHS_HIT_S_OR_C:
                cm = sum(1 << v for v in c.blocker)
                fail = bool(_directed_reach(g, a, full & ~sel & ~cm) >> b & 1)
            elif c.kind is ClaimKind.PATHS_THROUGH_C_HIT_S:
                r = _directed_reach(g, a, full & ~sel)
                fail = any(r >> v & 1 and _directed_reach(g, v, full & ~sel) >> b & 1 for v in c.blocker)
            if fail:
                out.append((f"theorem{c.theorem}", self._claim_text(c)))
        return out


def verify_poipg(
    p: Poipg,
    members: Iterable[Dag],
    bounds: Optional[EnumBounds] = None,
) -> VerificationReport:
    """Check ``p`` against every DAG in ``members`` (any iterable, consumed once).

    For each member: adjacency iff an inducing path exists, and the same
    against the all-subsets dependence test; every tail and arrowhead
    against the orientations of the member's inducing paths; every recorded
    non-collider against pairs of inducing paths into the middle vertex; and
    every claim `all_claims` derives from ``p`` against the member's
    directed paths.
    """
    start = time.perf_counter()
    ver = _Verifier(p)
    checks = {c: CheckResult(c) for c in CHECK_IDS}
    size = with_latent = 0
    for g in members:
        if tuple(g.name(v) for v in g.observed) != p.names:
            raise VerificationError(
                f"member observed variables {[g.name(v) for v in g.observed]} differ from the POIPG's {list(p.names)}"
            )
        size += 1
        if g.latent:
            with_latent += 1
        seen = set()
        for check_id, detail in ver.failures(g):
            r = checks[check_id]
            if check_id in seen:
                continue
            seen.add(check_id)
            r.failures += 1
            if r.counterexample is None:
                r.counterexample, r.detail = g, detail
    if size == 0:
        raise VerificationError("no members to verify against; widen the bounds")
    return VerificationReport(size, list(checks.values()), with_latent, bounds, time.perf_counter() - start)


def verify_bounded(cond: CiSet, b: EnumBounds, p: Optional[Poipg] = None) -> VerificationReport:
    """Run discovery on ``cond`` (unless ``p`` is given) and verify against its bounded class."""
    if p is None:
        from .fci import fci
        from .oracles import table_oracle

        p = fci(table_oracle(cond)).poipg
    return verify_poipg(p, iter_equiv_members(cond, b), b)


def enumerate_signatures(b: EnumBounds) -> dict[int, int]:
    """Histogram of pairwise CI signatures over `enumerate_dags` (diagnostics)."""
    hist: dict[int, int] = {}
    for g in enumerate_dags(b):
        s = pairwise_signature(g)
        hist[s] = hist.get(s, 0) + 1
    return hist
