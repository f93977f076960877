"""Forward sampling of discrete Bayesian networks with selection.

Selection vertices must be binary; a unit is kept only when every selection
vertex takes value 1, which is how a selected sample arises.  The returned
dataset holds the observed columns of the kept units.
"""
from __future__ import annotations

from collections.abc import Mapping
from dataclasses import dataclass

import numpy as np

from .graph_core import Dag, GraphError, Role, bits, topological_order
from .oracles import DataError, Dataset


@dataclass(frozen=True)
class DiscreteNetwork:
    """``cpts[name]`` has shape ``(*parent arities, arity)`` with parents in id order."""

    dag: Dag
    arities: Mapping[str, int]
    cpts: Mapping[str, np.ndarray]

    def __post_init__(self):
        g = self.dag
        for v in range(len(g)):
            name = g.name(v)
            if name not in self.arities or name not in self.cpts:
                raise GraphError(f"missing arity or table for {name!r}")
            k = self.arities[name]
            if g.role(v) is Role.SELECTION and k != 2:
                raise GraphError(f"selection variable {name!r} must be binary")
            shape = tuple(self.arities[g.name(p)] for p in bits(g.parent_masks[v])) + (k,)
            t = np.asarray(self.cpts[name], dtype=float)
            if t.shape != shape:
                raise GraphError(f"table for {name!r} has shape {t.shape}, expected {shape}")
            if np.any(t < 0) or not np.allclose(t.sum(axis=-1), 1.0):
                raise GraphError(f"table for {name!r} does not hold probability distributions")

    def sample(self, n: int, rng: np.random.Generator) -> Dataset:
        """Draw ``n`` population units and return the selected observed rows."""
        g = self.dag
        values = np.zeros((n, len(g)), dtype=np.int64)
        for v in topological_order(g):
            name = g.name(v)
            t = np.asarray(self.cpts[name], dtype=float)
            flat = t.reshape(-1, t.shape[-1])
            idx = np.zeros(n, dtype=np.int64)
            for p in bits(g.parent_masks[v]):
                idx = idx * self.arities[g.name(p)] + values[:, p]
            cum = np.cumsum(flat[idx], axis=1)
            u = rng.random(n)[:, None]
            values[:, v] = np.minimum((u >= cum).sum(axis=1), t.shape[-1] - 1)
        keep = np.ones(n, dtype=bool)
        for s in g.selection:
            keep &= values[:, s] == 1
        obs = list(g.observed)
        if not keep.any():
            raise DataError("no unit passed selection")
        return Dataset([g.name(v) for v in obs], [self.arities[g.name(v)] for v in obs], values[keep][:, obs])
