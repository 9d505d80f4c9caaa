"""
Per-round invariant checks used by ``run --verify``.

Each check raises ``InvariantViolation`` on the first failure.
"""
import logging

import numpy as np

from core.diagnostics import descent_check, weighted_average_sbar
from core.rounds import CTA
from .exceptions import InvariantViolation

logger = logging.getLogger(__name__)

MASS_TOL = 1e-10
TRACKING_TOL = 1e-8
RECURSION_TOL = 1e-9


def _fail(name, t, detail):
    logger.error('%s violated at round %d: %s', name, t, detail)
    raise InvariantViolation(name, t, detail)


def check_mass(states, t):
    phi = np.stack([state.phi for state in states])
    drift = np.abs(phi.sum(axis=0) - len(states)).max()
    if drift > MASS_TOL:
        _fail('mass conservation', t, f'max |sum phi - N| = {drift:.3e}')
    if not np.all(phi > 0):
        _fail('weight positivity', t, f'min phi = {phi.min():.3e}')


def check_tracking(states, t):
    """``sum_i sigma_i`` equals the sum of the gradients each agent last injected."""
    sigma = np.stack([state.sigma for state in states]).sum(axis=0)
    known = np.stack([state.grad_cache for state in states])
    gap = np.abs(sigma - known.sum(axis=0)).max()
    scale = 1.0 + np.abs(known).max()
    if gap > TRACKING_TOL * scale * len(states):
        _fail('tracking identity', t, f'max gap {gap:.3e}')


def check_feasibility(states, problem, t):
    for agent, state in enumerate(states):
        if not problem.is_feasible(state.x, slack=1e-9):
            _fail('feasibility', t, f'agent {agent} left the box')


def check_descent(states, steps, problem, spec, t):
    for step in steps:
        x_old = states[step.agent].x[problem.partition.index_sets[step.block]]
        ok = descent_check(
            step.y_block, step.delta, spec.tau_for(step.agent), step.r_old, step.r_new,
            problem.agent_count, kind=spec.kind, correction=problem.concave_gradient(x_old),
        )
        if not ok:
            _fail('descent inequality', t, f'agent {step.agent}, block {step.block}')


def check_sbar_recursion(states, result, gamma, problem, t, variant=None):
    """``s_bar' = s_bar + (gamma/N) sum_i w_i phi_i dx_i``: mixing is column stochastic.

    ``w_i`` is 1 for the adapt-then-combine variants and the mixed ``phi_i'``
    for CTA, which adds the step to x after mixing.
    """
    owner = problem.partition.coordinate_blocks
    push = np.zeros(problem.dimension)
    for step in result.steps:
        idx = problem.partition.index_sets[step.block]
        weight = states[step.agent].phi[owner[idx]] * step.delta
        if variant == CTA:
            weight = weight * result.states[step.agent].phi[owner[idx]]
        push[idx] += weight
    expected = weighted_average_sbar(states) + gamma * push / len(states)
    actual = weighted_average_sbar(result.states)
    gap = np.abs(actual - expected).max()
    if gap > RECURSION_TOL * (1.0 + np.abs(expected).max()):
        _fail('s_bar recursion', t, f'max gap {gap:.3e}')


def verify_round(states, result, gamma, problem, spec, variant, t):
    """Checks round ``t``, from ``states`` to ``result.states``."""
    check_descent(states, result.steps, problem, spec, t)
    check_sbar_recursion(states, result, gamma, problem, t, variant)
    check_mass(result.states, t + 1)
    check_tracking(result.states, t + 1)
    # CTA adds the local step after mixing, so estimates may leave the box.
    if variant != CTA:
        check_feasibility(result.states, problem, t + 1)
