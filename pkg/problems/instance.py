"""
Distributed sparse regression.

Agent ``i`` holds ``f_i(x) = ||D_i x - b_i||^2``; all agents share the
regularizer ``lam * sum r0(x)`` (or ``lam * ||x||_1``) and the box
``[k_lower, k_upper]^m``.
"""
import logging
from dataclasses import dataclass

import numpy as np

from .exceptions import DimensionError
from .partition import BlockPartition
from .penalties import (
    PENALTY_CHOICES, PENALTY_L1, PENALTY_LOG, eta, r0, r0_minus_derivative, r0_subgradient,
    soft_threshold, box_project,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class ProblemInstance:
    partition: BlockPartition
    D: tuple
    b: tuple
    box: tuple = (-np.inf, np.inf)
    lam: float = 0.0
    theta: float = 7.0
    penalty: str = PENALTY_LOG

    def __post_init__(self):
        D = tuple(np.array(d, dtype=float) for d in self.D)
        b = tuple(np.array(v, dtype=float) for v in self.b)
        if not D or len(D) != len(b):
            raise DimensionError('need one (D_i, b_i) pair per agent')
        m = self.partition.dimension
        for i, (d, v) in enumerate(zip(D, b)):
            if d.ndim != 2 or d.shape[1] != m:
                raise DimensionError(f'D_{i} has shape {d.shape}, expected (n_i, {m})')
            if v.shape != (d.shape[0],):
                raise DimensionError(f'b_{i} has shape {v.shape}, expected ({d.shape[0]},)')
        k_lower, k_upper = (float(k) for k in self.box)
        if k_lower > k_upper:
            raise ValueError('box lower bound exceeds upper bound')
        if self.lam < 0:
            raise ValueError('lam must be nonnegative')
        if self.penalty not in dict(PENALTY_CHOICES):
            raise ValueError(f'unknown penalty {self.penalty!r}')
        if self.penalty == PENALTY_LOG:
            eta(self.theta)
        for array in D + b:
            array.setflags(write=False)
        # Column slices per block, contiguous so full and block gradients
        # run the same products.
        columns = tuple(
            tuple(np.ascontiguousarray(d[:, idx]) for idx in self.partition.index_sets) for d in D
        )
        object.__setattr__(self, 'D', D)
        object.__setattr__(self, 'b', b)
        object.__setattr__(self, 'box', (k_lower, k_upper))
        object.__setattr__(self, '_columns', columns)

    @property
    def agent_count(self):
        return len(self.D)

    @property
    def dimension(self):
        return self.partition.dimension

    @property
    def block_count(self):
        return self.partition.block_count

    @property
    def threshold(self):
        """Weight of the l1 part the subproblems keep exactly."""
        if self.penalty == PENALTY_L1:
            return self.lam
        return self.lam * eta(self.theta)

    @property
    def is_convex(self):
        return self.penalty == PENALTY_L1 or self.lam == 0

    # ─── Smooth part ─────────────────────────────────────────────────────────

    def residual(self, agent, x):
        return self.D[agent] @ x - self.b[agent]

    def f_value(self, agent, x):
        r = self.residual(agent, x)
        return float(r @ r)

    def block_gradient(self, agent, x, block):
        r = self.residual(agent, x)
        return 2.0 * (self._columns[agent][block].T @ r)

    def gradient(self, agent, x):
        r = self.residual(agent, x)
        g = np.empty(self.dimension)
        for idx, cols in zip(self.partition.index_sets, self._columns[agent]):
            g[idx] = 2.0 * (cols.T @ r)
        return g

    def total_value(self, x):
        return sum(self.f_value(i, x) for i in range(self.agent_count))

    def total_gradient(self, x):
        total = np.zeros(self.dimension)
        for i in range(self.agent_count):
            total += self.gradient(i, x)
        return total

    # ─── Regularizer ─────────────────────────────────────────────────────────

    def regularizer(self, x):
        if self.penalty == PENALTY_L1:
            return self.lam * float(np.abs(x).sum())
        return self.lam * float(r0(x, self.theta).sum())

    def convex_penalty(self, x):
        """``threshold * ||x||_1``, the convex part of the regularizer."""
        return self.threshold * float(np.abs(x).sum())

    def concave_gradient(self, x):
        """Gradient of the convex function subtracted from the l1 part, zero for l1."""
        if self.penalty == PENALTY_L1 or self.lam == 0:
            return np.zeros_like(x, dtype=float)
        return self.lam * r0_minus_derivative(x, self.theta)

    def regularizer_subgradient(self, x):
        """A subgradient of the regularizer, taking 0 at 0."""
        if self.penalty == PENALTY_L1:
            return self.lam * np.sign(x)
        return self.lam * r0_subgradient(x, self.theta)

    # ─── Constraint and prox ─────────────────────────────────────────────────

    def project(self, x):
        return box_project(x, *self.box)

    def is_feasible(self, x, slack=1e-12):
        k_lower, k_upper = self.box
        return bool(np.all(x >= k_lower - slack) and np.all(x <= k_upper + slack))

    def block_minimizer(self, center, coefficient, modulus):
        """
        Minimizer over the box of
        ``coefficient'(u - center) + (modulus/2)||u - center||^2 + threshold||u||_1``.
        """
        if modulus <= 0:
            raise ValueError('modulus must be positive')
        shifted = center - coefficient / modulus
        return self.project(soft_threshold(shifted, self.threshold / modulus))


def closed_form_block_min(agent, block, x_i, y_block, tau, problem):
    """
    Closed-form DC best response on one block.

    With ``y_block`` the linear term is ``N * y_block``; with ``None`` it is
    the agent's own block gradient.
    """
    idx = problem.partition.index_sets[block]
    center = x_i[idx]
    if y_block is None:
        q = problem.block_gradient(agent, x_i, block)
    else:
        q = problem.agent_count * np.asarray(y_block, dtype=float)
    return problem.block_minimizer(center, q - problem.concave_gradient(center), tau)


def make_sparse_regression(rng, N, m, n_i, sparsity_frac, noise_var, lam, theta, box,
                           *, partition=None, noise_rng=None, penalty=PENALTY_LOG):
    """
    Random sparse regression instance and its ground truth.

    The ground truth is standard normal with the smallest ``sparsity_frac``
    share of entries (by magnitude) set to zero. ``D_i`` has standard normal
    entries and unit rows; ``b_i = D_i x0 + n_i`` with ``n_i ~ N(0,
    noise_var)``. Noise is drawn from ``noise_rng`` when given.
    """
    if N < 1 or m < 1 or n_i < 1:
        raise DimensionError('N, m and n_i must all be positive')
    if not 0 <= sparsity_frac < 1:
        raise ValueError('sparsity_frac must lie in [0, 1)')
    if noise_var < 0:
        raise ValueError('noise_var must be nonnegative')
    if partition is None:
        partition = BlockPartition.contiguous(m, 1)
    if partition.dimension != m:
        raise DimensionError(f'partition covers {partition.dimension} coordinates, expected {m}')
    noise_rng = rng if noise_rng is None else noise_rng

    x_true = rng.standard_normal(m)
    zeroed = int(round(sparsity_frac * m))
    x_true[np.argsort(np.abs(x_true), kind='stable')[:zeroed]] = 0.0

    D, b = [], []
    for _ in range(N):
        d = rng.standard_normal((n_i, m))
        d /= np.linalg.norm(d, axis=1, keepdims=True)
        D.append(d)
    for d in D:
        b.append(d @ x_true + np.sqrt(noise_var) * noise_rng.standard_normal(n_i))

    problem = ProblemInstance(
        partition=partition, D=tuple(D), b=tuple(b), box=box, lam=lam, theta=theta, penalty=penalty,
    )
    logger.debug('sparse regression N=%d m=%d n_i=%d, %d nonzeros', N, m, n_i, m - zeroed)
    return problem, x_true
