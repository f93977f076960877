"""Shared fixtures and reference implementations.

The reference helpers here deliberately avoid the package's own search
code: d-separation and inducing paths are decided by listing every simple
path of a small graph, and DAG counts come from the labeled-DAG recurrence.
"""
from __future__ import annotations

import random
from itertools import combinations
from math import comb
from pathlib import Path

import numpy as np
import pytest

from poipg import CiSet, Dag, Role
from poipg.sampling import DiscreteNetwork

DATA = Path(__file__).parent / "data"


def cond1() -> CiSet:
    return CiSet(["A", "B"])


def cond2() -> CiSet:
    return CiSet.from_names("ABCD", [("D", ["A", "B"], ["C"]), ("A", "B", [])])


def cond3() -> CiSet:
    return CiSet.from_names("ABCD", [("D", ["A", "B"], []), ("A", ["C", "D"], [])])


def cond2_network() -> DiscreteNetwork:
    """A -> C <- B, C -> D with binary variables and strong effects.

    P(C=1 | a, b) = 0.05 + 0.45a + 0.45b and D copies C with 10% noise.
    """
    g = Dag.build("ABCD", edges=[("A", "C"), ("B", "C"), ("C", "D")])
    c = np.zeros((2, 2, 2))
    for a in range(2):
        for b in range(2):
            p = 0.05 + 0.45 * a + 0.45 * b
            c[a, b] = [1 - p, p]
    cpts = {"A": [0.5, 0.5], "B": [0.5, 0.5], "C": c, "D": [[0.9, 0.1], [0.1, 0.9]]}
    return DiscreteNetwork(g, {v: 2 for v in "ABCD"}, cpts)


@pytest.fixture
def collider_chain() -> Dag:
    return Dag.build("ABCD", edges=[("A", "C"), ("B", "C"), ("C", "D")])


# ---------------------------------------------------------------------------
# random graphs


def random_dag(rng: random.Random, n_obs: int, n_lat: int, n_sel: int, p: float) -> Dag:
    """Edges follow a random vertex order; each forward pair is an edge with probability ``p``."""
    names = [f"O{i}" for i in range(n_obs)]
    lat = [f"L{i}" for i in range(n_lat)]
    sel = [f"S{i}" for i in range(n_sel)]
    n = n_obs + n_lat + n_sel
    order = list(range(n))
    rng.shuffle(order)
    edges = [(order[i], order[j]) for i, j in combinations(range(n), 2) if rng.random() < p]
    return Dag.build(names, lat, sel, edges)


# ---------------------------------------------------------------------------
# reference implementations


def simple_paths(g: Dag, a: int, b: int):
    """All simple undirected paths from ``a`` to ``b``."""
    nbrs = [set() for _ in range(len(g))]
    for u, v in g.edges:
        nbrs[u].add(v)
        nbrs[v].add(u)
    out = []

    def walk(path):
        x = path[-1]
        if x == b:
            out.append(tuple(path))
            return
        for y in sorted(nbrs[x]):
            if y not in path:
                walk(path + [y])

    walk([a])
    return out


def _descendants(g: Dag, v: int) -> set[int]:
    seen, stack = {v}, [v]
    while stack:
        x = stack.pop()
        for u, w in g.edges:
            if u == x and w not in seen:
                seen.add(w)
                stack.append(w)
    return seen


def _collider(g: Dag, prev: int, v: int, nxt: int) -> bool:
    return (prev, v) in g.edges and (nxt, v) in g.edges


def ref_d_separated(g: Dag, x, z, y) -> bool:
    """Path-listing d-separation for singletons or small sets."""
    y = set(y)
    for a in x:
        for b in z:
            for path in simple_paths(g, a, b):
                blocked = False
                for prev, v, nxt in zip(path, path[1:], path[2:]):
                    if _collider(g, prev, v, nxt):
                        if not _descendants(g, v) & y:
                            blocked = True
                    elif v in y:
                        blocked = True
                if not blocked:
                    return False
    return True


def ref_inducing_orientations(g: Dag, a: int, b: int) -> set[tuple[bool, bool]]:
    target = {a, b} | set(g.selection)
    latent = set(g.latent)
    out = set()
    for path in simple_paths(g, a, b):
        ok = True
        for prev, v, nxt in zip(path, path[1:], path[2:]):
            if _collider(g, prev, v, nxt):
                ok &= bool(_descendants(g, v) & target)
            else:
                ok &= v in latent
        if ok:
            out.add(((path[1], a) in g.edges, (path[-2], b) in g.edges))
    return out


def labeled_dag_count(n: int) -> int:
    a = [1]
    for m in range(1, n + 1):
        a.append(sum((-1) ** (k + 1) * comb(m, k) * 2 ** (k * (m - k)) * a[m - k] for k in range(1, m + 1)))
    return a[n]


def directed_paths(g: Dag, a: int, b: int):
    out = []

    def walk(path):
        x = path[-1]
        if x == b:
            out.append(tuple(path))
            return
        for u, w in sorted(g.edges):
            if u == x and w not in path:
                walk(path + [w])

    walk([a])
    return out


def roles(g: Dag, role: Role) -> set[int]:
    return set(g.ids_with_role(role))
