import random
import threading
from itertools import combinations

import numpy as np
import pytest

from conftest import cond2_network, cond3, random_dag
from poipg import (
    CiSet,
    DataError,
    Dataset,
    Dag,
    GraphError,
    InsufficientPolicy,
    Verdict,
    caching_oracle,
    data_oracle,
    g2_test,
    graphical_oracle,
    observable_ci_set,
    table_oracle,
)
from poipg.oracles import CiOracle
from poipg.sampling import DiscreteNetwork

SELECTION_COLLIDER = Dag.build(["A", "B"], [], ["S"], [("A", "S"), ("B", "S")])


def binary_net(g: Dag, cpts) -> DiscreteNetwork:
    return DiscreteNetwork(g, {g.name(v): 2 for v in range(len(g))}, cpts)


def collider_net() -> DiscreteNetwork:
    g = Dag.build("ABC", edges=[("A", "C"), ("B", "C")])
    c = np.array([[[0.9, 0.1], [0.2, 0.8]], [[0.2, 0.8], [0.05, 0.95]]])
    return binary_net(g, {"A": [0.5, 0.5], "B": [0.5, 0.5], "C": c})


def cond2_data(n=10_000, seed=1) -> Dataset:
    return cond2_network().sample(n, np.random.default_rng(seed))


# -- graphical ----------------------------------------------------------------


def test_graphical_oracle_examples(collider_chain):
    o = graphical_oracle(collider_chain)
    assert o.query({"A"}, {"B"}, set()) is Verdict.INDEPENDENT
    assert o.query({"A"}, {"C"}, {"B"}) is Verdict.DEPENDENT
    assert graphical_oracle(SELECTION_COLLIDER).query("A", "B") is Verdict.DEPENDENT
    assert o.query_count == 2


def test_graphical_oracle_rejects_unobserved_vertices():
    o = graphical_oracle(SELECTION_COLLIDER)
    with pytest.raises(GraphError):
        o.query("A", "S")


def test_graphical_oracle_needs_observed_vertices():
    with pytest.raises(GraphError):
        graphical_oracle(Dag.build([], ["T"]))


# -- table ----------------------------------------------------------------------


def test_table_oracle_examples():
    o = table_oracle(cond3())
    assert o.query({"A"}, {"C"}, set()) is Verdict.INDEPENDENT
    assert o.query({"B"}, {"C"}, set()) is Verdict.DEPENDENT
    assert table_oracle(CiSet(["A", "B"])).query("A", "B") is Verdict.DEPENDENT


def test_table_oracle_rejects_malformed_queries():
    o = table_oracle(cond3())
    with pytest.raises(GraphError):
        o.query("A", "A")
    with pytest.raises(GraphError):
        o.query("A", "Q")


def test_graphical_and_table_oracles_coincide():
    rng = random.Random(2)
    for _ in range(40):
        g = random_dag(rng, 4, 1, 1, 0.4)
        go, to = graphical_oracle(g), table_oracle(observable_ci_set(g))
        for k in range(3):
            for y in combinations(range(4), k):
                rest = [v for v in range(4) if v not in y]
                for a, b in combinations(rest, 2):
                    assert go.query([a], [b], y) is to.query([a], [b], y)


# -- statistics -------------------------------------------------------------------


def test_independent_columns_are_independent():
    rng = np.random.default_rng(1)
    d = Dataset(["X", "Z"], [2, 2], rng.integers(0, 2, size=(10_000, 2)))
    assert g2_test(d, "X", "Z", (), 0.01).verdict is Verdict.INDEPENDENT


def test_collider_conditioning_creates_dependence():
    d = collider_net().sample(10_000, np.random.default_rng(3))
    assert g2_test(d, "A", "B", (), 0.01).verdict is Verdict.INDEPENDENT
    assert g2_test(d, "A", "B", ["C"], 0.01).verdict is Verdict.DEPENDENT


def test_small_samples_are_insufficient():
    d = Dataset(["X", "Z"], [2, 2], [[0, 1], [1, 0], [0, 0], [1, 1], [0, 1]])
    assert g2_test(d, "X", "Z").verdict is Verdict.INSUFFICIENT_DATA


def test_g2_statistic_on_a_hand_computed_table():
    # counts [[30, 10], [10, 30]]: expected 20 everywhere
    rows = [[0, 0]] * 30 + [[0, 1]] * 10 + [[1, 0]] * 10 + [[1, 1]] * 30
    r = g2_test(Dataset(["X", "Z"], [2, 2], rows), "X", "Z")
    expected = 2 * (2 * 30 * np.log(30 / 20) + 2 * 10 * np.log(10 / 20))
    assert r.statistic == pytest.approx(expected)
    assert r.dof == 1


def test_g2_is_symmetric():
    d = cond2_data(2_000, 4)
    r1, r2 = g2_test(d, "A", "D", ["C"]), g2_test(d, "D", "A", ["C"])
    assert (r1.statistic, r1.dof, r1.verdict) == pytest.approx((r2.statistic, r2.dof, r2.verdict))


def test_empty_strata_reduce_dof():
    rows = [[0, 0, 0], [1, 1, 0]] * 50  # third column never takes value 1 or 2
    d = Dataset(["X", "Z", "Y"], [2, 2, 3], rows)
    assert g2_test(d, "X", "Z", ["Y"]).dof == 1
    assert g2_test(d, "X", "Z", ["Y"], reduce_empty_strata=False).dof == 3


def test_composite_columns():
    d = cond2_data(10_000, 2)
    assert g2_test(d, "D", ["A", "B"], ["C"], 0.01).verdict is Verdict.INDEPENDENT
    assert g2_test(d, "D", ["A", "B"], (), 0.01).verdict is Verdict.DEPENDENT


@pytest.mark.parametrize(
    "kwargs, message",
    [({"alpha": 0.0}, "alpha"), ({"alpha": 1.5}, "alpha"), ({"y": ["Q"]}, "unknown"), ({"y": ["X"]}, "distinct")],
)
def test_g2_argument_errors(kwargs, message):
    d = Dataset(["X", "Z"], [2, 2], [[0, 1], [1, 0]])
    with pytest.raises(DataError, match=message):
        g2_test(d, "X", "Z", **kwargs)


def test_dataset_validation():
    with pytest.raises(DataError, match="row 2"):
        Dataset(["X"], [2], [[0], [2]])
    with pytest.raises(DataError, match="arity"):
        Dataset(["X"], [1], [[0]])
    with pytest.raises(DataError, match="at least one row"):
        Dataset(["X"], [2], np.zeros((0, 1)))


def test_data_oracle_on_cond2_data():
    o = data_oracle(cond2_data(), 0.01)
    assert o.query({"A"}, {"B"}) is Verdict.INDEPENDENT
    assert o.query({"D"}, {"A"}, {"C"}) is Verdict.INDEPENDENT
    assert o.query({"C"}, {"D"}) is Verdict.DEPENDENT


def test_data_oracle_rejects_constant_column():
    d = Dataset(["X", "Z"], [2, 2], [[0, 0], [0, 1], [0, 0]])
    with pytest.raises(DataError, match="arity < 2"):
        data_oracle(d)


def test_insufficient_data_policy():
    d = Dataset(["X", "Z"], [2, 2], [[0, 1], [1, 0], [0, 0], [1, 1], [0, 1]])
    assert data_oracle(d).query("X", "Z") is Verdict.DEPENDENT
    o = data_oracle(d, insufficient_policy=InsufficientPolicy.ASSUME_INDEPENDENT)
    assert o.query("X", "Z") is Verdict.INDEPENDENT
    assert o.insufficient == 1


# -- caching ----------------------------------------------------------------------


def test_caching_oracle_counts(collider_chain):
    inner = graphical_oracle(collider_chain)
    c = caching_oracle(inner)
    c.query("A", "B")
    c.query("A", "B")
    assert inner.query_count == 1
    c.query("B", "A")
    assert inner.query_count == 1 and c.hits == 2 and c.misses == 1


def test_caching_oracle_distinct_queries(collider_chain):
    inner = graphical_oracle(collider_chain)
    c = caching_oracle(inner)
    qs = []
    for k in range(3):
        for y in combinations(range(4), k):
            rest = [v for v in range(4) if v not in y]
            qs += [([a], [b], y) for a, b in combinations(rest, 2)]
    for q in qs:
        c.query(*q)
    assert inner.query_count == len(qs) == c.misses


def test_caching_oracle_is_thread_safe(collider_chain):
    class Slow(CiOracle):
        def __init__(self):
            super().__init__("ABCD")
            self.calls = 0

        def _independent(self, s):
            self.calls += 1
            return False

    inner = Slow()
    c = caching_oracle(inner)
    threads = [threading.Thread(target=lambda: [c.query("A", "B", "C") for _ in range(50)]) for _ in range(8)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert inner.calls == 1 and c.query_count == 400
