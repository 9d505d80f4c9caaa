from dataclasses import dataclass

import numpy as np

from .exceptions import InvalidSchedule


def step_size_next(gamma, mu):
    """``gamma * (1 - mu * gamma)``."""
    if not 0 < gamma <= 1:
        raise InvalidSchedule(f'gamma={gamma} is outside (0, 1]')
    if mu < 0 or mu * gamma >= 1:
        raise InvalidSchedule(f'mu={mu} must satisfy 0 <= mu < 1/gamma')
    return gamma * (1.0 - mu * gamma)


@dataclass(frozen=True)
class StepSizeSchedule:
    gamma0: float = 0.3
    mu: float = 1e-3

    def __post_init__(self):
        if not 0 < self.gamma0 <= 1:
            raise InvalidSchedule(f'gamma0={self.gamma0} is outside (0, 1]')
        if not 0 < self.mu < 1 / self.gamma0:
            raise InvalidSchedule(f'mu={self.mu} is outside (0, 1/gamma0)')

    def __iter__(self):
        gamma = self.gamma0
        while True:
            yield gamma
            gamma = step_size_next(gamma, self.mu)

    def sequence(self, length):
        values = np.empty(length)
        for t, gamma in zip(range(length), self):
            values[t] = gamma
        return values
