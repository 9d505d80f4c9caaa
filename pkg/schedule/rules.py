"""
Essentially cyclic block-selection rules.

Blocks are indexed ``0..B-1``. A selection is a pure function of the rule,
its seed, the agent and the round, so agents never need to coordinate.
"""
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

ROUND_ROBIN = 'round_robin'
SHUFFLED_CYCLIC = 'shuffled_cyclic'

RULE_CHOICES = (
    (ROUND_ROBIN, 'round robin'),
    (SHUFFLED_CYCLIC, 'shuffled cyclic'),
)


@dataclass(frozen=True)
class BlockSchedule:
    block_count: int
    rule: str = ROUND_ROBIN
    seed: int = 0
    offsets: tuple = None

    def __post_init__(self):
        if self.block_count < 1:
            raise ValueError('block_count must be at least 1')
        if self.rule not in dict(RULE_CHOICES):
            raise ValueError(f'unknown schedule rule {self.rule!r}')

    def offset(self, agent):
        """Round-robin offset, ``agent mod B`` unless given explicitly."""
        if self.offsets is None:
            return agent % self.block_count
        return self.offsets[agent]

    @property
    def period_bound(self):
        """T_i: every window of this many rounds covers all blocks."""
        if self.rule == ROUND_ROBIN:
            return self.block_count
        return 2 * self.block_count - 1


@lru_cache(maxsize=8192)
def _epoch_permutation(seed, agent, epoch, block_count):
    rng = np.random.default_rng([seed, agent, epoch])
    return tuple(int(b) for b in rng.permutation(block_count))


def select_block(s, agent, t):
    if agent < 0:
        raise ValueError('agent index must be nonnegative')
    if t < 0:
        raise ValueError('round must be nonnegative')
    if s.rule == ROUND_ROBIN:
        return (t + s.offset(agent)) % s.block_count
    epoch, position = divmod(t, s.block_count)
    return _epoch_permutation(s.seed, agent, epoch, s.block_count)[position]


def selections(s, t, agent_count):
    """Blocks chosen by every agent at round ``t``."""
    return np.array([select_block(s, i, t) for i in range(agent_count)], dtype=np.int64)


def selection_prefix(s, agent, length):
    return [select_block(s, agent, t) for t in range(length)]


def verify_essentially_cyclic(prefix, period, block_count):
    """True iff every length-``period`` window of ``prefix`` covers all blocks."""
    if period < 1:
        raise ValueError('period must be at least 1')
    if len(prefix) < period:
        raise ValueError('prefix is shorter than the claimed period')
    wanted = set(range(block_count))
    return all(
        set(prefix[start:start + period]) >= wanted
        for start in range(len(prefix) - period + 1)
    )
