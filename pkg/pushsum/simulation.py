"""
Driving the push-sum protocol over many rounds, and the signals the demo
tracks.
"""
import logging

import numpy as np

from schedule.rules import selections as round_selections
from .protocol import (
    block_weights, pushsum_step, track_average_step, tracking_state, SignalTracker,
)

logger = logging.getLogger(__name__)

SIGNAL_NONE = 'none'
SIGNAL_CONSTANT = 'constant'
SIGNAL_DRIFTING = 'drifting'

SIGNAL_CHOICES = (SIGNAL_NONE, SIGNAL_CONSTANT, SIGNAL_DRIFTING)


def constant_signal(blocks):
    blocks = [np.array(b, dtype=float) for b in blocks]
    return lambda t: blocks


def drifting_signal(start, drift, rate=0.99):
    """``u(t) = start + drift * (1 - rate**t)``: increments shrink like ``rate**t``."""
    start = [np.array(b, dtype=float) for b in start]
    drift = [np.array(b, dtype=float) for b in drift]
    return lambda t: [a + d * (1.0 - rate ** t) for a, d in zip(start, drift)]


def iterate_pushsum(base, sched, state, rounds):
    """Yield ``(t, state)`` for ``t = 0..rounds``."""
    yield 0, state
    for t in range(rounds):
        chosen = round_selections(sched, t, state.agent_count)
        weights = [block_weights(base, chosen, block) for block in range(state.block_count)]
        state = pushsum_step(state, weights)
        yield t + 1, state


def iterate_tracking(base, sched, trackers, rounds):
    """Yield ``(t, state, trackers)`` for ``t = 0..rounds``."""
    state = tracking_state(trackers)
    yield 0, state, trackers
    for t in range(rounds):
        chosen = round_selections(sched, t, state.agent_count)
        weights = [block_weights(base, chosen, block) for block in range(state.block_count)]
        state, trackers = track_average_step(state, trackers, chosen, weights, t)
        yield t + 1, state, trackers


def signal_average(trackers, t):
    """Per-block mean over agents of the true signals at ``t``."""
    values = [tr.signal(t) for tr in trackers]
    return [np.mean([v[block] for v in values], axis=0) for block in range(len(values[0]))]


def demo_trackers(rng, agent_count, block_count, dim, kind):
    """Random per-agent signals for the tracking demo."""
    starts = rng.standard_normal((agent_count, block_count, dim))
    if kind == SIGNAL_CONSTANT:
        signals = [constant_signal(start) for start in starts]
    elif kind == SIGNAL_DRIFTING:
        drifts = rng.uniform(-1.0, 1.0, size=(agent_count, block_count, dim))
        signals = [drifting_signal(start, drift) for start, drift in zip(starts, drifts)]
    else:
        raise ValueError(f'unknown signal kind {kind!r}')
    return [SignalTracker.start(signal) for signal in signals]
