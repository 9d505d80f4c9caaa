"""
Weight matrices matched to a digraph.

``base_weights`` is the column-stochastic push-sum matrix used by every
B-SONATA variant; ``metropolis_weights`` is the doubly stochastic matrix of
the subgradient baseline on symmetric graphs.
"""
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .topology import Digraph

COLUMN_SUM_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class WeightMatrix:
    entries: np.ndarray
    kappa: float

    def __post_init__(self):
        entries = np.array(self.entries, dtype=float)
        if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
            raise ValueError('weights must be a square matrix')
        if (entries < 0).any():
            raise ValueError('weights must be nonnegative')
        positive = entries[entries > 0]
        if positive.size and positive.min() < self.kappa:
            raise ValueError('a positive weight lies below kappa')
        entries.setflags(write=False)
        object.__setattr__(self, 'entries', entries)

    @property
    def size(self):
        return self.entries.shape[0]

    @cached_property
    def support(self):
        """Digraph of the nonzero pattern: ``(j, i)`` for every ``entries[i, j] > 0``."""
        rows, cols = np.nonzero(self.entries)
        return Digraph.from_edges(self.size, zip(cols, rows))

    def column_sums(self):
        return self.entries.sum(axis=0)

    def is_column_stochastic(self, tol=COLUMN_SUM_TOL):
        return bool(np.all(np.abs(self.column_sums() - 1.0) <= tol))

    def is_row_stochastic(self, tol=COLUMN_SUM_TOL):
        return bool(np.all(np.abs(self.entries.sum(axis=1) - 1.0) <= tol))

    def matches(self, g):
        return np.array_equal(self.entries > 0, g.adjacency.astype(bool))


def base_weights(g):
    """Uniform out-degree weights: ``a[i, j] = 1 / outdeg(j)`` on every edge ``(j, i)``."""
    degrees = g.out_degrees.astype(float)
    entries = g.adjacency / degrees[np.newaxis, :]
    return WeightMatrix(entries=entries, kappa=1.0 / degrees.max())


def metropolis_weights(g):
    """
    Metropolis-Hastings weights on a symmetric graph.

    ``w[i, j] = 1 / (1 + max(d_i, d_j))`` for neighbours, where degrees
    exclude the self-loop, and the diagonal takes the remaining mass.
    """
    if not g.is_symmetric():
        raise ValueError('Metropolis weights need a symmetric graph')
    n = g.node_count
    degrees = g.out_degrees - 1
    entries = np.zeros((n, n))
    for j, i in g.edges:
        if i != j:
            entries[i, j] = 1.0 / (1.0 + max(degrees[i], degrees[j]))
    entries[np.diag_indices(n)] = 1.0 - entries.sum(axis=1)
    positive = entries[entries > 0]
    return WeightMatrix(entries=entries, kappa=float(positive.min()))
