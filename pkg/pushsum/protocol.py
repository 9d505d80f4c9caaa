"""
Block-wise push-sum.

Every round each agent pushes exactly one block: the block it selected, with
the matching weight ``phi``. Columns of senders that picked another block
collapse to the identity, so unsent blocks stay where they are.

Shapes: ``phi`` is ``(N, B)``; ``z`` holds one ``(N, d_l)`` array per block.
"""
from dataclasses import dataclass, replace
from typing import Callable, Sequence

import numpy as np

from graphs.weights import WeightMatrix
from .exceptions import DegenerateWeight


def block_weight_entries(base, selections, block):
    """Raw ``A_l``: column ``j`` is ``base[:, j]`` if agent ``j`` sends ``block``, else ``e_j``."""
    sending = np.asarray(selections) == block
    return np.where(sending[np.newaxis, :], base.entries, np.eye(base.size))


def block_weights(base, selections, block):
    return WeightMatrix(entries=block_weight_entries(base, selections, block), kappa=base.kappa)


def check_positive(phi):
    bad = np.argwhere(~(phi > 0))
    if bad.size:
        agent, block = (int(k) for k in bad[0])
        raise DegenerateWeight(agent, block, float(phi[agent, block]))


@dataclass(frozen=True, eq=False)
class PushSumState:
    phi: np.ndarray
    z: tuple

    @classmethod
    def start(cls, z_blocks):
        """Initial state with unit weights."""
        z = tuple(np.array(block, dtype=float) for block in z_blocks)
        agents = {block.shape[0] for block in z}
        if len(agents) != 1:
            raise ValueError('every block must hold one row per agent')
        return cls(phi=np.ones((agents.pop(), len(z))), z=z)

    @property
    def agent_count(self):
        return self.phi.shape[0]

    @property
    def block_count(self):
        return self.phi.shape[1]

    def mass(self):
        """Per-block sum of the weights, N while the state is valid."""
        return self.phi.sum(axis=0)

    def weighted_sums(self):
        return [(self.phi[:, [block]] * z).sum(axis=0) for block, z in enumerate(self.z)]

    def weighted_average(self):
        """Per-block ``sum_i phi z / sum_i phi``, the value push-sum converges to."""
        mass = self.mass()
        return [total / mass[block] for block, total in enumerate(self.weighted_sums())]


def perturbed_pushsum_step(state, weights, eps=None):
    """
    One push-sum round where agent ``j`` mixes ``z_j + eps_j`` for each block.

    ``weights`` holds one WeightMatrix per block; ``eps`` one ``(N, d_l)``
    array per block, or None for the unperturbed protocol.
    """
    if len(weights) != state.block_count:
        raise ValueError('one weight matrix per block is required')
    phi = np.empty_like(state.phi)
    mixed = []
    for block, (a, z) in enumerate(zip(weights, state.z)):
        payload = z if eps is None else z + eps[block]
        phi[:, block] = a.entries @ state.phi[:, block]
        mixed.append(a.entries @ (state.phi[:, [block]] * payload))
    check_positive(phi)
    z = tuple(values / phi[:, [block]] for block, values in enumerate(mixed))
    return PushSumState(phi=phi, z=z)


def pushsum_step(state, weights):
    return perturbed_pushsum_step(state, weights, eps=None)


# ─── Average-signal tracking ─────────────────────────────────────────────────

@dataclass(frozen=True, eq=False)
class SignalTracker:
    """Stale copy of one agent's signal, refreshed one block at a time."""

    u_hat: tuple
    signal: Callable[[int], Sequence[np.ndarray]]

    @classmethod
    def start(cls, signal):
        return cls(u_hat=tuple(np.array(b, dtype=float) for b in signal(0)), signal=signal)

    def refresh(self, block, t):
        u_hat = list(self.u_hat)
        u_hat[block] = np.array(self.signal(t)[block], dtype=float)
        return replace(self, u_hat=tuple(u_hat))


def tracking_state(trackers):
    """Push-sum state whose ``z`` starts at each agent's ``u_hat``."""
    block_count = len(trackers[0].u_hat)
    return PushSumState.start(
        [np.stack([tr.u_hat[block] for tr in trackers]) for block in range(block_count)]
    )


def track_average_step(state, trackers, selections, weights, t):
    """
    Round ``t`` of the tracking protocol.

    Agent ``i`` refreshes block ``selections[i]`` of its ``u_hat`` with the
    signal at ``t + 1`` and injects the change into the mixed block.
    """
    refreshed = [tr.refresh(int(selections[i]), t + 1) for i, tr in enumerate(trackers)]
    phi = np.empty_like(state.phi)
    mixed = []
    for block, (a, z) in enumerate(zip(weights, state.z)):
        injected = np.stack([new.u_hat[block] - old.u_hat[block]
                             for new, old in zip(refreshed, trackers)])
        phi[:, block] = a.entries @ state.phi[:, block]
        mixed.append(a.entries @ (state.phi[:, [block]] * z + injected))
    check_positive(phi)
    z = tuple(values / phi[:, [block]] for block, values in enumerate(mixed))
    return PushSumState(phi=phi, z=z), refreshed


def consensus_error(state):
    """Per agent, the l1 distance of ``z_i`` to the plain average over agents."""
    error = np.zeros(state.agent_count)
    for z in state.z:
        error += np.abs(z - z.mean(axis=0)).sum(axis=1)
    return error
