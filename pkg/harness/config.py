"""
Run configuration.

A run is described by a TOML document with a top-level ``seed`` and the
sections ``[graph]``, ``[problem]``, ``[algorithm]`` and ``[run]``. Missing
keys take the defaults below, which describe the desk instance; unknown keys
are rejected by ``harness.serializers``.
"""
import logging
try:
    import tomllib
except ImportError:  # Python < 3.11
    import tomli as tomllib
from dataclasses import dataclass, field, replace

import numpy as np

from core.surrogate import DC_LINEARIZATION
from problems.penalties import PENALTY_LOG
from schedule.rules import ROUND_ROBIN
from .exceptions import ConfigError

logger = logging.getLogger(__name__)

BASELINE = 'baseline'

# Step rule of the subgradient comparator.
BASELINE_STEP_SCALED = 'gamma_over_tau'
BASELINE_STEP_RAW = 'gamma'

BASELINE_STEP_CHOICES = (
    (BASELINE_STEP_SCALED, 'gamma / tau'),
    (BASELINE_STEP_RAW, 'gamma'),
)

# Labels of the per-purpose random streams derived from the master seed.
STREAM_LABELS = {
    'graph': 1,
    'data': 2,
    'noise': 3,
    'init': 4,
    'schedule': 5,
}


@dataclass(frozen=True)
class GraphConfig:
    n: int = 10
    p: float = 0.5
    max_retries: int = 100


@dataclass(frozen=True)
class ProblemConfig:
    m: int = 60
    n_i: int = 40
    sparsity_frac: float = 0.8
    noise_var: float = 0.5
    lam: float = 0.15
    theta: float = 7.0
    box: tuple = (-10.0, 10.0)
    penalty: str = PENALTY_LOG


@dataclass(frozen=True)
class AlgorithmConfig:
    variant: str = 'atc'
    blocks: int = 3
    schedule_rule: str = ROUND_ROBIN
    gamma0: float = 0.3
    mu: float = 1e-3
    tau: float = 10.0
    surrogate: str = DC_LINEARIZATION
    baseline_step: str = BASELINE_STEP_SCALED

    def baseline_step_size(self, gamma):
        if self.baseline_step == BASELINE_STEP_RAW:
            return gamma
        return gamma / self.tau


@dataclass(frozen=True)
class RunSettings:
    max_rounds: int = 15000
    metrics_stride: int = 10
    stop_tol_J: float = 1e-3


@dataclass(frozen=True)
class RunConfig:
    seed: int = 0
    graph: GraphConfig = field(default_factory=GraphConfig)
    problem: ProblemConfig = field(default_factory=ProblemConfig)
    algorithm: AlgorithmConfig = field(default_factory=AlgorithmConfig)
    run: RunSettings = field(default_factory=RunSettings)

    def with_blocks(self, blocks):
        return replace(self, algorithm=replace(self.algorithm, blocks=blocks))

    def with_run(self, **changes):
        return replace(self, run=replace(self.run, **changes))

    def to_dict(self):
        """The TOML-shaped document this configuration parses from."""
        problem = self.problem
        algorithm = self.algorithm
        return {
            'seed': self.seed,
            'graph': {
                'n': self.graph.n,
                'p': self.graph.p,
                'max_retries': self.graph.max_retries,
            },
            'problem': {
                'm': problem.m,
                'n_i': problem.n_i,
                'sparsity_frac': problem.sparsity_frac,
                'noise_var': problem.noise_var,
                'lambda': problem.lam,
                'theta': problem.theta,
                'box': list(problem.box),
                'penalty': problem.penalty,
            },
            'algorithm': {
                'variant': algorithm.variant,
                'B': algorithm.blocks,
                'schedule_rule': algorithm.schedule_rule,
                'gamma0': algorithm.gamma0,
                'mu': algorithm.mu,
                'tau': algorithm.tau,
                'surrogate': algorithm.surrogate,
                'baseline_step': algorithm.baseline_step,
            },
            'run': {
                'max_rounds': self.run.max_rounds,
                'metrics_stride': self.run.metrics_stride,
                'stop_tol_J': self.run.stop_tol_J,
            },
        }


def parse_run_config(data, source=None):
    """Validate a TOML-shaped mapping and build the RunConfig it describes."""
    from .serializers import RunConfigSerializer

    serializer = RunConfigSerializer(data=data)
    if not serializer.is_valid():
        logger.warning('rejected run configuration%s: %s', f' {source}' if source else '', serializer.errors)
        raise ConfigError(serializer.errors, source=source)
    return serializer.to_config()


def load_run_config(path):
    try:
        with open(path, 'rb') as fh:
            data = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError({'non_field_errors': [str(exc)]}, source=str(path)) from exc
    except OSError as exc:
        raise ConfigError({'non_field_errors': [f'cannot read {path}: {exc.strerror}']}, source=str(path)) from exc
    return parse_run_config(data, source=str(path))


def rng_streams(seed):
    """One independent generator per purpose, keyed by the labels above."""
    return {name: np.random.default_rng([seed, label]) for name, label in STREAM_LABELS.items()}


def schedule_seed(stream):
    """Integer seed for the shuffled block schedule, drawn from the ``schedule`` stream."""
    return int(stream.integers(2 ** 31))
