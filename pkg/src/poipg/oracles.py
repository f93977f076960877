"""Conditional-independence oracles consumed by the discovery procedure.

An oracle answers "is x independent of z given y" over a fixed list of
observed variables.  Graph-backed answers condition on the selection set;
table-backed answers read a `CiSet` closed-world; data-backed answers run a
G-squared test on discrete samples.
"""
from __future__ import annotations

import abc
import enum
import threading
from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy import stats

from .graph_core import Dag, GraphError
from .separation import CiSet, CiStatement, observable_independent

Ref = Union[int, str]


class OracleError(RuntimeError):
    """An oracle could not answer; ``query`` holds the offending statement."""

    def __init__(self, message: str, query: tuple = ()):
        super().__init__(message)
        self.query = query


class DataError(ValueError):
    """Malformed dataset or test arguments."""


class Verdict(enum.Enum):
    INDEPENDENT = "independent"
    DEPENDENT = "dependent"
    INSUFFICIENT_DATA = "insufficient_data"


class CiOracle(abc.ABC):
    """Answers independence queries over ``universe``.

    Subclasses implement `_independent` on canonical statements; `query`
    validates, canonicalizes and counts.
    """

    def __init__(self, universe: Sequence[str]):
        self.universe = tuple(universe)
        if not self.universe:
            raise GraphError("an oracle needs at least one variable")
        self._index = {n: i for i, n in enumerate(self.universe)}
        self._count_lock = threading.Lock()
        self.query_count = 0

    def _ids(self, side: Union[Ref, Iterable[Ref], None]) -> frozenset[int]:
        if side is None:
            return frozenset()
        if isinstance(side, (int, str)):
            side = [side]
        out = set()
        for v in side:
            if isinstance(v, str):
                if v not in self._index:
                    raise GraphError(f"{v!r} is not an observed variable of this oracle")
                out.add(self._index[v])
            elif isinstance(v, int) and not isinstance(v, bool) and 0 <= v < len(self.universe):
                out.add(v)
            else:
                raise GraphError(f"{v!r} is not an observed variable of this oracle")
        return frozenset(out)

    def statement(self, x, z, y=()) -> CiStatement:
        try:
            return CiStatement.make(self._ids(x), self._ids(z), self._ids(y))
        except ValueError as e:
            raise GraphError(f"malformed query: {e}") from None

    def query(self, x, z, y=()) -> Verdict:
        s = self.statement(x, z, y)
        with self._count_lock:
            self.query_count += 1
        return Verdict.INDEPENDENT if self._independent(s) else Verdict.DEPENDENT

    def independent(self, x, z, y=()) -> bool:
        return self.query(x, z, y) is Verdict.INDEPENDENT

    @abc.abstractmethod
    def _independent(self, s: CiStatement) -> bool: ...


class GraphicalOracle(CiOracle):
    """d-separation given the selection set, in a known DAG."""

    def __init__(self, g: Dag):
        obs = g.observed
        if not obs:
            raise GraphError("the graph has no observed variables")
        super().__init__([g.name(v) for v in obs])
        self.graph = g
        self._gid = obs

    def _independent(self, s: CiStatement) -> bool:
        def m(side):
            return [self._gid[i] for i in side]

        return observable_independent(self.graph, m(s.x), m(s.z), m(s.y))


class TableOracle(CiOracle):
    """Closed-world lookup in a `CiSet`, honouring decomposition."""

    def __init__(self, cond: CiSet):
        super().__init__(cond.universe)
        self.cond = cond

    def _independent(self, s: CiStatement) -> bool:
        return self.cond.implies(s.x, s.z, s.y)


def graphical_oracle(g: Dag) -> GraphicalOracle:
    return GraphicalOracle(g)


def table_oracle(cond: CiSet) -> TableOracle:
    return TableOracle(cond)


# ---------------------------------------------------------------------------
# discrete data


class Dataset:
    """Complete-case discrete samples; column ``j`` takes values ``0..arity[j]-1``."""

    def __init__(self, columns: Sequence[str], arities: Sequence[int], rows):
        self.columns = tuple(columns)
        self.arities = tuple(int(a) for a in arities)
        if len(set(self.columns)) != len(self.columns):
            raise DataError("duplicate column names")
        if len(self.arities) != len(self.columns):
            raise DataError("one arity per column is required")
        for c, a in zip(self.columns, self.arities):
            if a < 2:
                raise DataError(f"column {c!r}: arity {a} < 2")
        values = np.asarray(rows, dtype=np.int64)
        if values.ndim != 2 or values.shape[1] != len(self.columns):
            raise DataError(f"expected a table with {len(self.columns)} columns")
        if values.shape[0] < 1:
            raise DataError("a dataset needs at least one row")
        for j, (c, a) in enumerate(zip(self.columns, self.arities)):
            col = values[:, j]
            bad = np.flatnonzero((col < 0) | (col >= a))
            if bad.size:
                raise DataError(f"row {bad[0] + 1}, column {c!r}: value {col[bad[0]]} outside 0..{a - 1}")
        self.values = values
        self.values.setflags(write=False)
        self._index = {c: j for j, c in enumerate(self.columns)}

    @property
    def n(self) -> int:
        return self.values.shape[0]

    def column_index(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise DataError(f"unknown column {name!r}") from None

    def coded(self, names: Sequence[str]) -> tuple[np.ndarray, int]:
        """Mixed-radix code of several columns and the size of its state space."""
        code = np.zeros(self.n, dtype=np.int64)
        size = 1
        for name in names:
            j = self.column_index(name)
            code = code * self.arities[j] + self.values[:, j]
            size *= self.arities[j]
        return code, size


@dataclass(frozen=True)
class TestResult:
    statistic: float
    dof: int
    p_value: float
    verdict: Verdict

    __test__ = False  # not a pytest class


def _as_list(cols) -> list[str]:
    return [cols] if isinstance(cols, str) else list(cols)


def g2_test(
    data: Dataset,
    x,
    z,
    y: Iterable[str] = (),
    alpha: float = 0.05,
    *,
    reduce_empty_strata: bool = True,
) -> TestResult:
    """G-squared test of ``x`` independent of ``z`` within each stratum of ``y``.

    ``x`` and ``z`` may name several columns; they are then tested as one
    composite variable over the product state space.  Degrees of freedom are
    ``(|x|-1)(|z|-1)`` per stratum, dropping strata with no rows when
    ``reduce_empty_strata`` is set.
    """
    if not 0.0 < alpha < 1.0:
        raise DataError(f"alpha must lie in (0, 1), got {alpha}")
    xs, zs, ys = _as_list(x), _as_list(z), _as_list(y)
    if not xs or not zs:
        raise DataError("x and z must name at least one column")
    allcols = xs + zs + ys
    for c in allcols:
        data.column_index(c)
    if len(set(allcols)) != len(allcols):
        raise DataError("x, z and y must name distinct columns")

    xc, kx = data.coded(xs)
    zc, kz = data.coded(zs)
    yc, ky = data.coded(ys)
    counts = np.bincount((yc * kx + xc) * kz + zc, minlength=ky * kx * kz).reshape(ky, kx, kz).astype(float)
    n_s = counts.sum(axis=(1, 2))
    n_sx = counts.sum(axis=2)
    n_sz = counts.sum(axis=1)

    with np.errstate(divide="ignore", invalid="ignore"):
        expected = n_sx[:, :, None] * n_sz[:, None, :] / n_s[:, None, None]
        terms = np.where(counts > 0, counts * np.log(counts / expected), 0.0)
    statistic = max(0.0, float(2.0 * terms.sum()))

    per_stratum = (kx - 1) * (kz - 1)
    strata = int(np.count_nonzero(n_s)) if reduce_empty_strata else ky
    dof = per_stratum * strata
    p_value = float(stats.chi2.sf(statistic, dof)) if dof > 0 else 1.0
    p_value = min(1.0, max(0.0, p_value))

    if data.n < 10 * dof:
        verdict = Verdict.INSUFFICIENT_DATA
    elif p_value > alpha:
        verdict = Verdict.INDEPENDENT
    else:
        verdict = Verdict.DEPENDENT
    return TestResult(statistic, dof, p_value, verdict)


class InsufficientPolicy(enum.Enum):
    ASSUME_DEPENDENT = "dependent"
    ASSUME_INDEPENDENT = "independent"


class DataOracle(CiOracle):
    """Answers queries with `g2_test`; inconclusive tests resolve per ``policy``."""

    def __init__(self, data: Dataset, alpha: float = 0.05, policy: InsufficientPolicy = InsufficientPolicy.ASSUME_DEPENDENT):
        if not 0.0 < alpha < 1.0:
            raise DataError(f"alpha must lie in (0, 1), got {alpha}")
        for j, c in enumerate(data.columns):
            if np.unique(data.values[:, j]).size < 2:
                raise DataError(f"column {c!r} is constant in the data (observed arity < 2)")
        super().__init__(data.columns)
        self.data = data
        self.alpha = alpha
        self.policy = policy
        self.insufficient = 0

    def _independent(self, s: CiStatement) -> bool:
        def cols(side):
            return [self.universe[i] for i in sorted(side)]

        result = g2_test(self.data, cols(s.x), cols(s.z), cols(s.y), self.alpha)
        if result.verdict is Verdict.INSUFFICIENT_DATA:
            self.insufficient += 1
            return self.policy is InsufficientPolicy.ASSUME_INDEPENDENT
        return result.verdict is Verdict.INDEPENDENT


def data_oracle(
    data: Dataset, alpha: float = 0.05, insufficient_policy: InsufficientPolicy = InsufficientPolicy.ASSUME_DEPENDENT
) -> DataOracle:
    return DataOracle(data, alpha, insufficient_policy)


class CachingOracle(CiOracle):
    """Memoizes another oracle on canonical statements (so symmetric queries share a slot)."""

    def __init__(self, inner: CiOracle):
        super().__init__(inner.universe)
        self.inner = inner
        self._cache: dict[CiStatement, bool] = {}
        self._lock = threading.Lock()
        self.hits = 0
        self.misses = 0

    def _independent(self, s: CiStatement) -> bool:
        # held across the inner call so a statement reaches ``inner`` at most once
        with self._lock:
            if s in self._cache:
                self.hits += 1
            else:
                self.misses += 1
                self._cache[s] = self.inner.query(s.x, s.z, s.y) is Verdict.INDEPENDENT
            return self._cache[s]


def caching_oracle(inner: CiOracle) -> CachingOracle:
    return CachingOracle(inner)

