import random

import pytest

from conftest import cond1, cond2, cond3, directed_paths, random_dag
from poipg import (
    CausalClaim,
    ClaimKind,
    FciConfig,
    GraphError,
    Role,
    blocking_claims,
    definite_cause,
    exists_directed_path,
    exists_semi_directed_path,
    fci,
    graphical_oracle,
    latent_variable,
    no_cause_either_way,
    table_oracle,
)
from poipg.causal_queries import all_claims


@pytest.fixture(scope="module")
def p1():
    return fci(table_oracle(cond1())).poipg


@pytest.fixture(scope="module")
def p2():
    return fci(table_oracle(cond2())).poipg


@pytest.fixture(scope="module")
def p3():
    return fci(table_oracle(cond3())).poipg


def test_directed_paths(p2):
    assert exists_directed_path(p2, "C", "D")
    assert not exists_directed_path(p2, "A", "C")
    assert exists_directed_path(p2, "A", "A")
    with pytest.raises(GraphError):
        exists_directed_path(p2, "A", "Q")


def test_definite_cause(p1, p2):
    claim = definite_cause(p2, "C", "D")
    assert claim.kind is ClaimKind.DEFINITE_CAUSE and claim.theorem == 2
    assert definite_cause(p2, "D", "C") is None
    assert definite_cause(p1, "A", "B") is None
    with pytest.raises(GraphError):
        definite_cause(p2, "C", "C")


def test_bidirected_edge_claims(p1, p2, p3):
    claim = no_cause_either_way(p3, "B", "C")
    assert claim.kind is ClaimKind.NO_CAUSE_EITHER_WAY and claim.theorem == 3
    assert latent_variable(p3, "B", "C").kind is ClaimKind.LATENT_CONFOUNDER
    assert no_cause_either_way(p2, "A", "C") is None
    assert no_cause_either_way(p1, "A", "B") is None
    assert latent_variable(p1, "A", "B") is None


def test_semi_directed_paths(p2, p3):
    assert not exists_semi_directed_path(p2, "D", "A")
    assert exists_semi_directed_path(p2, "A", "D")
    assert not exists_semi_directed_path(p3, "B", "C")
    assert exists_semi_directed_path(p2, "A", "D", through=["C"])
    assert not exists_semi_directed_path(p2, "A", "D", avoiding=["C"])
    with pytest.raises(GraphError):
        exists_semi_directed_path(p2, "A", "D", through=["A"])


def test_directed_implies_semi_directed(p1, p2, p3):
    for p in (p1, p2, p3):
        for a in range(len(p)):
            for b in range(len(p)):
                if a != b and exists_directed_path(p, a, b):
                    assert exists_semi_directed_path(p, a, b)


def test_blocking_claims(p2):
    [claim] = blocking_claims(p2, "D", "A")
    assert claim.kind is ClaimKind.ALL_PATHS_HIT_S and claim.theorem == 5
    kinds = [c.kind for c in blocking_claims(p2, "A", "D", ["C"])]
    assert kinds == [ClaimKind.ALL_PATHS_HIT_S_OR_C]
    assert not any(c.theorem == 5 for c in blocking_claims(p2, "C", "D"))
    with pytest.raises(GraphError, match="blocker"):
        blocking_claims(p2, "A", "D", ["A"])


def test_claim_format_and_invariants(p2):
    names = p2.names
    assert definite_cause(p2, "C", "D").format(names) == "THEOREM=2 KIND=DefiniteCause FROM=C TO=D"
    c = CausalClaim(ClaimKind.ALL_PATHS_HIT_S_OR_C, 0, 3, 6, frozenset({2, 1}))
    assert c.format(names) == "THEOREM=6 KIND=AllPathsHitSorC FROM=A TO=D C={B,C}"
    with pytest.raises(ValueError):
        CausalClaim(ClaimKind.ALL_PATHS_HIT_S_OR_C, 0, 3, 6)
    with pytest.raises(ValueError):
        CausalClaim(ClaimKind.DEFINITE_CAUSE, 0, 3, 2, frozenset({1}))
    with pytest.raises(ValueError):
        CausalClaim(ClaimKind.DEFINITE_CAUSE, 0, 3, 7)


def test_theorem_soundness_on_random_graphs():
    rng = random.Random(99)
    for _ in range(150):
        g = random_dag(rng, rng.randint(2, 5), rng.randint(0, 2), rng.randint(0, 1), 0.35)
        p = fci(graphical_oracle(g), FciConfig()).poipg
        obs, sel = g.observed, set(g.ids_with_role(Role.SELECTION))
        desc = g.descendant_masks
        for c in all_claims(p):
            a, b = obs[c.subject], obs[c.object]
            paths = directed_paths(g, a, b)
            if c.kind is ClaimKind.DEFINITE_CAUSE:
                assert paths and not any(desc[a] >> s & 1 for s in sel)
            elif c.kind is ClaimKind.NO_CAUSE_EITHER_WAY:
                assert not paths and not directed_paths(g, b, a)
            elif c.kind is ClaimKind.LATENT_CONFOUNDER:
                assert g.latent
            elif c.kind is ClaimKind.ALL_PATHS_HIT_S:
                assert all(set(path) & sel for path in paths)
            else:
                block = {obs[v] for v in c.blocker}
                if c.kind is ClaimKind.ALL_PATHS_HIT_S_OR_C:
                    assert all(set(path) & (sel | block) for path in paths)
                else:
                    assert all(set(path) & sel for path in paths if set(path) & block)
