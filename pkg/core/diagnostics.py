"""
Quantities monitored along a run: network averages, the Lyapunov-like
value, the per-step descent inequality and the metrics record.
"""
from dataclasses import dataclass, astuple, fields

import numpy as np

from problems.merit import merit_J
from .surrogate import PLAIN_LINEARIZATION

DESCENT_SLACK = 1e-9


@dataclass(frozen=True)
class MetricsRecord:
    t: int
    message_exchanges: float
    J: float
    D: float
    R: float
    tracking_residual: float
    V: float
    gamma: float
    delta_sum: float

    @classmethod
    def field_names(cls):
        return [f.name for f in fields(cls)]

    def values(self):
        return astuple(self)

    def is_finite(self):
        return all(np.isfinite(value) for value in self.values())


def weighted_average_sbar(states):
    """``(1/N) sum_i s_i``, the phi-weighted average of the estimates."""
    return np.stack([state.s for state in states]).mean(axis=0)


def sigma_bar(states):
    return np.stack([state.sigma for state in states]).mean(axis=0)


def lyapunov_V(states, s_bar_next, problem):
    value = problem.total_value(s_bar_next)
    for state in states:
        x = state.x
        for block, idx in enumerate(problem.partition.index_sets):
            value += state.phi[block] * problem.regularizer(x[idx])
    return float(value)


def descent_check(y_block, delta_x, tau_i, r_old, r_new, N, *, kind=PLAIN_LINEARIZATION, correction=None):
    """
    Best-response descent inequality for one block step.

    ``g' dx <= -mu ||dx||^2 - (r_new - r_old) + slack`` with ``g = N*y`` (minus
    ``correction`` for the DC surrogate) and ``mu`` the surrogate modulus.
    """
    delta_x = np.asarray(delta_x, dtype=float)
    gradient = N * np.asarray(y_block, dtype=float)
    if correction is not None:
        gradient = gradient - correction
    modulus = 2.0 * tau_i if kind == PLAIN_LINEARIZATION else tau_i
    squared = float(delta_x @ delta_x)
    lhs = float(gradient @ delta_x)
    rhs = -modulus * squared - (r_new - r_old) + DESCENT_SLACK * (1.0 + squared)
    return lhs <= rhs


def metrics(states, s_bar, problem, *, t=0, block_count=1, gamma=0.0, delta_sum=0.0, s_bar_next=None):
    """Metrics record for round ``t``; ``V`` uses ``s_bar_next`` when given."""
    x = np.stack([state.x for state in states])
    y = np.stack([state.y for state in states])
    tracked = sigma_bar(states)
    gradients = np.stack([problem.gradient(i, x[i]) for i in range(len(states))])
    return MetricsRecord(
        t=t,
        message_exchanges=t / block_count,
        J=merit_J(s_bar, problem),
        D=float(np.linalg.norm(x - s_bar, axis=1).max()),
        R=float(np.linalg.norm(y - tracked, axis=1).max()),
        tracking_residual=float(np.abs(tracked - gradients.mean(axis=0)).max()),
        V=lyapunov_V(states, s_bar if s_bar_next is None else s_bar_next, problem),
        gamma=float(gamma),
        delta_sum=float(delta_sum),
    )
