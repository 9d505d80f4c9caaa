"""
B-SONATA rounds.

A round is a pure map from the round-``t`` agent states to the round-``t+1``
states. Each agent picks one block, solves its convex subproblem on that
block and pushes the block (weights, weighted estimate, weighted tracker)
to its out-neighbours. Three orderings are provided:

``atc``   adapt then combine: mix ``s + gamma*phi*dx`` and ``sigma + dgrad``
``cta``   combine then adapt: mix ``s`` and ``sigma``, then add ``gamma*phi*dx`` to x
          and ``dgrad`` to ``sigma``
``ghat``  as ``atc``, but the gradient is refreshed only on the selected block
"""
import logging
from dataclasses import dataclass

import numpy as np

from problems.penalties import oracle_prox_solve
from pushsum.protocol import block_weight_entries, check_positive
from schedule.rules import selections as round_selections
from .state import AgentState

logger = logging.getLogger(__name__)

ATC = 'atc'
CTA = 'cta'
GHAT = 'ghat'

VARIANT_CHOICES = (
    (ATC, 'adapt then combine'),
    (CTA, 'combine then adapt'),
    (GHAT, 'adapt then combine with block-wise gradients'),
)


@dataclass(frozen=True, eq=False)
class BlockResponse:
    x_tilde: np.ndarray
    r_old: float
    r_new: float
    coefficient: np.ndarray
    modulus: float

    def __iter__(self):
        return iter((self.x_tilde, self.r_old, self.r_new))


@dataclass(frozen=True, eq=False)
class BlockStep:
    """What one agent did in a round, kept for descent checks."""
    agent: int
    block: int
    delta: np.ndarray
    y_block: np.ndarray
    coefficient: np.ndarray
    r_old: float
    r_new: float

    @property
    def norm(self):
        return float(np.linalg.norm(self.delta))


@dataclass(frozen=True, eq=False)
class RoundResult:
    states: list
    steps: list
    selections: np.ndarray

    @property
    def delta_sum(self):
        return float(sum(step.norm for step in self.steps))


def best_response_block(agent, block, x_i, y_block, spec, problem):
    """
    Minimize the agent's surrogate plus the kept regularizer on one block.

    Unpacks as ``(x_tilde, r_old, r_new)`` where the ``r`` values are the
    convex penalty part at the centre and at the minimizer.
    """
    if not spec.supports(problem):
        raise ValueError('plain linearization needs a convex regularizer')
    idx = problem.partition.index_sets[block]
    center = x_i[idx]
    coefficient = spec.coefficient(problem.agent_count * np.asarray(y_block, dtype=float),
                                   problem.concave_gradient(center))
    modulus = spec.modulus(agent)
    if spec.use_oracle:
        x_tilde = oracle_prox_solve(coefficient, center, modulus / 2.0, problem.threshold, problem.box)
    else:
        x_tilde = problem.block_minimizer(center, coefficient, modulus)
    return BlockResponse(
        x_tilde=x_tilde,
        r_old=problem.convex_penalty(center),
        r_new=problem.convex_penalty(x_tilde),
        coefficient=coefficient,
        modulus=modulus,
    )


def local_steps(states, chosen, spec, problem):
    steps = []
    for agent, (state, block) in enumerate(zip(states, chosen)):
        block = int(block)
        idx = problem.partition.index_sets[block]
        x_i = state.x
        y_block = state.y_block(block, idx)
        response = best_response_block(agent, block, x_i, y_block, spec, problem)
        steps.append(BlockStep(
            agent=agent,
            block=block,
            delta=response.x_tilde - x_i[idx],
            y_block=y_block,
            coefficient=response.coefficient,
            r_old=response.r_old,
            r_new=response.r_new,
        ))
    return steps


def _advance(states, steps, base, chosen, gamma, problem, variant):
    partition = problem.partition
    owner = partition.coordinate_blocks
    phi = np.stack([state.phi for state in states])
    s = np.stack([state.s for state in states])
    sigma = np.stack([state.sigma for state in states])

    delta = np.zeros_like(s)
    for step in steps:
        delta[step.agent, partition.index_sets[step.block]] = step.delta
    push = gamma * phi[:, owner] * delta

    mixers = [block_weight_entries(base, chosen, block) for block in range(partition.block_count)]
    new_phi = np.empty_like(phi)
    new_s = np.empty_like(s)
    for block, (idx, a) in enumerate(zip(partition.index_sets, mixers)):
        new_phi[:, block] = a @ phi[:, block]
        if variant == CTA:
            # x' = mix + push, so in s coordinates the push scales by the mixed phi
            new_s[:, idx] = a @ s[:, idx] + new_phi[:, [block]] * push[:, idx]
        else:
            new_s[:, idx] = a @ (s[:, idx] + push[:, idx])
    check_positive(new_phi)
    new_x = new_s / new_phi[:, owner]

    if variant == GHAT:
        previous = np.stack([state.g_hat for state in states])
        known = previous.copy()
        for agent, block in enumerate(chosen):
            block = int(block)
            known[agent, partition.index_sets[block]] = problem.block_gradient(agent, new_x[agent], block)
    else:
        previous = np.stack([state.grad_cache for state in states])
        known = np.stack([problem.gradient(agent, new_x[agent]) for agent in range(len(states))])
    change = known - previous

    new_sigma = np.empty_like(sigma)
    for idx, a in zip(partition.index_sets, mixers):
        if variant == CTA:
            new_sigma[:, idx] = a @ sigma[:, idx] + change[:, idx]
        else:
            new_sigma[:, idx] = a @ (sigma[:, idx] + change[:, idx])

    return [
        AgentState(
            phi=new_phi[agent],
            s=new_s[agent],
            sigma=new_sigma[agent],
            grad_cache=known[agent],
            coordinate_blocks=owner,
            g_hat=known[agent] if variant == GHAT else None,
        )
        for agent in range(len(states))
    ]


def run_round(variant, states, g, base, sched, gamma, problem, spec, t):
    """One round of ``variant``; returns the new states with per-agent step records."""
    if variant not in dict(VARIANT_CHOICES):
        raise ValueError(f'unknown variant {variant!r}')
    if base.size != g.node_count or len(states) != g.node_count:
        raise ValueError('states, graph and weights disagree on the number of agents')
    if sched.block_count != problem.block_count:
        raise ValueError('schedule and partition disagree on the number of blocks')
    if variant == GHAT and states[0].g_hat is None:
        raise ValueError('the ghat variant needs states carrying g_hat')
    chosen = round_selections(sched, t, len(states))
    steps = local_steps(states, chosen, spec, problem)
    new_states = _advance(states, steps, base, chosen, gamma, problem, variant)
    return RoundResult(states=new_states, steps=steps, selections=chosen)


def sonata_round(states, g, base, sched, gamma, problem, spec, t):
    return run_round(ATC, states, g, base, sched, gamma, problem, spec, t)


def cta_round(states, g, base, sched, gamma, problem, spec, t):
    return run_round(CTA, states, g, base, sched, gamma, problem, spec, t)


def blockwise_gradient_round(states, g, base, sched, gamma, problem, spec, t):
    return run_round(GHAT, states, g, base, sched, gamma, problem, spec, t)
