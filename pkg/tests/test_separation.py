import random
from itertools import combinations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import cond2, cond3, random_dag, ref_d_separated, ref_inducing_orientations
from poipg import (
    CiSet,
    CiStatement,
    Dag,
    GraphError,
    InducingPathOrientation,
    d_separated,
    exists_inducing_path,
    inducing_path_orientations,
    is_inducing_path,
    observable_ci_set,
    observable_independent,
)
from poipg.separation import (
    ci_set_signature,
    d_separated_moral,
    dependent_given_every_subset,
    local_markov_holds,
    pairwise_signature,
)

SELECTED_COMMON_CAUSE = Dag.build(["A", "B", "T", "S"], edges=[("T", "A"), ("T", "B"), ("A", "S"), ("B", "S")])
DIRECT_EDGE = Dag.build("AB", edges=[("A", "B")])
LATENT_COMMON_CAUSE = Dag.build(["A", "B"], ["T"], edges=[("T", "A"), ("T", "B")])
SELECTION_COLLIDER = Dag.build(["A", "B"], [], ["S"], [("A", "S"), ("B", "S")])
SELECTION_THEN_LATENT = Dag.build(["A", "B"], ["T"], ["S"], [("A", "S"), ("T", "S"), ("T", "B")])
TWO_LATENT_CAUSES = Dag.build(["A", "B"], ["T", "U"], edges=[("T", "A"), ("T", "B"), ("U", "A"), ("U", "B")])


def io(into_a, into_b):
    return InducingPathOrientation(into_a, into_b)


# -- d-separation ------------------------------------------------------------


def test_chain_blocked_by_middle():
    g = Dag.build("ABC", edges=[("A", "B"), ("B", "C")])
    assert d_separated(g, {"A"}, {"C"}, {"B"})
    assert not d_separated(g, {"A"}, {"C"})


def test_collider_opens_when_conditioned():
    g = Dag.build("XZY", edges=[("X", "Z"), ("Y", "Z")])
    assert d_separated(g, {"X"}, {"Y"}, set())
    assert not d_separated(g, {"X"}, {"Y"}, {"Z"})


def test_conditioning_on_selection_creates_dependence():
    assert d_separated(SELECTED_COMMON_CAUSE, {"A"}, {"B"}, {"T"})
    assert not d_separated(SELECTED_COMMON_CAUSE, {"A"}, {"B"}, {"T", "S"})


def test_overlapping_sets_are_reported():
    g = Dag.build("ABC")
    with pytest.raises(GraphError, match="overlap.*B"):
        d_separated(g, {"A", "B"}, {"B"}, set())


def test_observable_independence_conditions_on_selection():
    assert not observable_independent(SELECTION_COLLIDER, {"A"}, {"B"}, set())
    assert not observable_independent(DIRECT_EDGE, {"A"}, {"B"}, set())
    assert observable_independent(Dag.build("AB"), {"A"}, {"B"}, set())


def test_observable_independence_rejects_unobserved_arguments():
    with pytest.raises(GraphError):
        observable_independent(LATENT_COMMON_CAUSE, {"A"}, {"B"}, {"T"})


def test_small_graphs_agree_with_path_listing():
    rng = random.Random(7)
    for _ in range(150):
        g = random_dag(rng, 5, 0, 0, 0.4)
        for a, b in combinations(range(5), 2):
            rest = [v for v in range(5) if v not in (a, b)]
            for k in range(len(rest) + 1):
                for y in combinations(rest, k):
                    assert d_separated(g, {a}, {b}, set(y)) == ref_d_separated(g, [a], [b], y)


@st.composite
def dags(draw, max_n=8):
    n = draw(st.integers(1, max_n))
    order = draw(st.permutations(range(n)))
    edges = [(order[i], order[j]) for i in range(n) for j in range(i + 1, n) if draw(st.booleans())]
    return Dag([(f"V{i}", "observed") for i in range(n)], edges)


@settings(max_examples=300, deadline=None)
@given(dags(), st.data())
def test_reachability_and_moral_graph_agree(g, data):
    n = len(g)
    labels = data.draw(st.lists(st.integers(0, 3), min_size=n, max_size=n))
    x = {v for v in range(n) if labels[v] == 1}
    z = {v for v in range(n) if labels[v] == 2}
    y = {v for v in range(n) if labels[v] == 3}
    if x and z:
        assert d_separated(g, x, z, y) == d_separated_moral(g, x, z, y)
        assert d_separated(g, x, z, y) == d_separated(g, z, x, y)


@settings(max_examples=200, deadline=None)
@given(dags())
def test_local_markov_property(g):
    for v in range(len(g)):
        assert local_markov_holds(g, v)


def test_isolated_selection_means_no_selection_bias():
    rng = random.Random(3)
    for _ in range(50):
        base = random_dag(rng, 4, 1, 0, 0.5)
        names = [base.name(v) for v in base.observed]
        g = Dag.build(names, [base.name(v) for v in base.latent], ["S"], sorted(base.edges))
        for a, b in combinations(range(4), 2):
            rest = [v for v in range(4) if v not in (a, b)]
            for k in range(3):
                for y in combinations(rest, k):
                    assert observable_independent(g, {a}, {b}, y) == d_separated(g, {a}, {b}, set(y))


# -- inducing paths -----------------------------------------------------------


def test_single_edge_is_inducing():
    assert is_inducing_path(DIRECT_EDGE, ["A", "B"], "A", "B")


def test_selection_collider_path_is_inducing():
    assert is_inducing_path(SELECTION_THEN_LATENT, ["A", "S", "T", "B"], "A", "B")


def test_collider_without_target_descendant_is_not_inducing(collider_chain):
    assert not is_inducing_path(collider_chain, ["A", "C", "B"], "A", "B")


def test_is_inducing_path_checks_endpoints(collider_chain):
    with pytest.raises(GraphError, match="expected"):
        is_inducing_path(collider_chain, ["A", "C"], "A", "D")


def test_orientations_of_small_graphs(collider_chain):
    assert inducing_path_orientations(LATENT_COMMON_CAUSE, "A", "B") == {io(True, True)}
    assert inducing_path_orientations(DIRECT_EDGE, "A", "B") == {io(False, True)}
    assert inducing_path_orientations(collider_chain, "C", "D") == {io(False, True)}


def test_existence_examples(collider_chain):
    assert exists_inducing_path(TWO_LATENT_CAUSES, "A", "B")
    assert not exists_inducing_path(collider_chain, "A", "B")
    assert not exists_inducing_path(Dag.build("AB"), "A", "B")


def test_inducing_paths_need_distinct_observed_endpoints():
    with pytest.raises(GraphError):
        exists_inducing_path(LATENT_COMMON_CAUSE, "A", "A")
    with pytest.raises(GraphError):
        exists_inducing_path(LATENT_COMMON_CAUSE, "A", "T")


def test_inducing_paths_match_theorem1_and_path_listing():
    rng = random.Random(11)
    for _ in range(300):
        g = random_dag(rng, 4, 2, 1, 0.35)
        for a, b in combinations(g.observed, 2):
            found = {(o.into_a, o.into_b) for o in inducing_path_orientations(g, a, b)}
            assert found == ref_inducing_orientations(g, a, b)
            assert exists_inducing_path(g, a, b) == dependent_given_every_subset(g, a, b)


# -- CI statements and sets -----------------------------------------------------


def test_statement_canonical_form():
    s = CiStatement.make([3], [0, 1], [2])
    assert s.x == {0, 1} and s.z == {3}
    assert s.format("ABCD") == "indep A,B ; D ; C"
    assert CiStatement.make([1], [0]).format("AB") == "indep A ; B ; -"
    with pytest.raises(ValueError):
        CiStatement.make([0], [0])
    with pytest.raises(ValueError):
        CiStatement.make([], [1])


def test_ci_set_of_collider_chain_is_closure_of_cond2(collider_chain):
    got = observable_ci_set(collider_chain)
    assert got == cond2().closure()
    assert len(got) == 6


def test_ci_set_of_direct_edge_is_empty():
    assert len(observable_ci_set(DIRECT_EDGE)) == 0


def test_ci_set_of_latent_common_cause_graph():
    g = Dag.build(["A", "B", "C", "D"], ["T"], edges=[("A", "B"), ("T", "B"), ("T", "C"), ("D", "C")])
    assert observable_ci_set(g) == cond3().closure()


def test_ci_set_guard():
    g = Dag.build([f"V{i}" for i in range(9)])
    with pytest.raises(GraphError, match="max_observed"):
        observable_ci_set(g)
    assert len(observable_ci_set(Dag.build("ABC"), max_observed=3)) > 0


def test_implies_uses_decomposition_and_symmetry():
    c = cond3()
    assert c.implies([0], [2])
    assert c.implies([2], [0])
    assert not c.implies([1], [2])
    assert not c.implies([0], [2], [1])


def test_pairwise_signature_determines_ci_set():
    rng = random.Random(5)
    seen = {}
    for _ in range(200):
        g = random_dag(rng, 4, 1, 1, 0.4)
        sig = pairwise_signature(g)
        cs = observable_ci_set(g)
        assert ci_set_signature(cs) == sig
        assert seen.setdefault(sig, cs) == cs


def test_closure_is_idempotent():
    c = cond2().closure()
    assert c.closure() == c
    assert CiSet(["A", "B"]).closure() == CiSet(["A", "B"])
