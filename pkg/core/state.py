"""
Per-agent optimizer state.

Each agent keeps per-block weights ``phi`` and the weighted vectors
``s = phi * x`` and ``sigma = phi * y``; the estimate ``x`` and gradient
tracker ``y`` are derived from them.
"""
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True, eq=False)
class AgentState:
    phi: np.ndarray
    s: np.ndarray
    sigma: np.ndarray
    grad_cache: np.ndarray
    coordinate_blocks: np.ndarray
    g_hat: np.ndarray = None

    @property
    def x(self):
        return self.s / self.phi[self.coordinate_blocks]

    @property
    def y(self):
        return self.sigma / self.phi[self.coordinate_blocks]

    def y_block(self, block, idx):
        return self.sigma[idx] / self.phi[block]


def initialize_estimates(problem, rng):
    """Standard normal draws projected onto the box, one row per agent."""
    return problem.project(rng.standard_normal((problem.agent_count, problem.dimension)))


def initial_states(problem, x0, with_g_hat=False):
    """Unit weights, ``x = x0[i]`` and ``y = grad f_i(x0[i])``."""
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (problem.agent_count, problem.dimension):
        raise ValueError(f'x0 must have shape ({problem.agent_count}, {problem.dimension})')
    owner = problem.partition.coordinate_blocks
    states = []
    for i in range(problem.agent_count):
        grad = problem.gradient(i, x0[i])
        states.append(AgentState(
            phi=np.ones(problem.block_count),
            s=x0[i].copy(),
            sigma=grad.copy(),
            grad_cache=grad,
            coordinate_blocks=owner,
            g_hat=grad.copy() if with_g_hat else None,
        ))
    return states
