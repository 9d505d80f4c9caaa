"""
Experiment orchestration.

``run_experiment`` builds graph, instance and initial estimates from the
master seed, iterates one variant until ``J`` drops below the tolerance or
the round budget runs out, and returns the sampled metrics trace.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from django.conf import settings

from core.diagnostics import MetricsRecord, metrics, weighted_average_sbar
from core.rounds import GHAT, run_round
from core.state import initial_states, initialize_estimates
from core.stepsize import StepSizeSchedule
from core.surrogate import SurrogateSpec
from graphs.topology import gen_erdos_renyi, algebraic_connectivity
from graphs.weights import base_weights, metropolis_weights
from problems.instance import make_sparse_regression
from problems.merit import merit_J, stationarity_residual
from problems.partition import BlockPartition
from schedule.rules import BlockSchedule
from .config import BASELINE, rng_streams, schedule_seed, parse_run_config
from .exceptions import DivergenceDetected
from .models import STATUS_CONVERGED, STATUS_MAX_ROUNDS
from .verification import verify_round

logger = logging.getLogger(__name__)

NOT_REACHED = -1


@dataclass(frozen=True, eq=False)
class Setup:
    graph: object
    weights: object
    schedule: BlockSchedule
    problem: object
    x_true: np.ndarray
    x0: np.ndarray
    spec: SurrogateSpec
    step_sizes: StepSizeSchedule


@dataclass(frozen=True, eq=False)
class ExperimentResult:
    config: object
    trace: list
    states: list
    status: str
    t_end: int
    algebraic_connectivity: float
    stationarity_residual: float
    problem: object
    x_true: np.ndarray

    @property
    def final(self):
        return self.trace[-1]

    @property
    def s_bar(self):
        return network_average(self.config, self.states)


@dataclass(frozen=True)
class SweepRow:
    blocks: int
    t_end: int
    t_end_per_B: float


def build_setup(cfg):
    """Graph, instance and initial estimates; the instance does not depend on B."""
    streams = rng_streams(cfg.seed)
    g = gen_erdos_renyi(cfg.graph.n, cfg.graph.p, streams['graph'], max_retries=cfg.graph.max_retries)
    algorithm = cfg.algorithm
    problem, x_true = make_sparse_regression(
        streams['data'],
        cfg.graph.n,
        cfg.problem.m,
        cfg.problem.n_i,
        cfg.problem.sparsity_frac,
        cfg.problem.noise_var,
        cfg.problem.lam,
        cfg.problem.theta,
        cfg.problem.box,
        partition=BlockPartition.contiguous(cfg.problem.m, algorithm.blocks),
        noise_rng=streams['noise'],
        penalty=cfg.problem.penalty,
    )
    weights = metropolis_weights(g) if algorithm.variant == BASELINE else base_weights(g)
    return Setup(
        graph=g,
        weights=weights,
        schedule=BlockSchedule(algorithm.blocks, algorithm.schedule_rule, seed=schedule_seed(streams['schedule'])),
        problem=problem,
        x_true=x_true,
        x0=initialize_estimates(problem, streams['init']),
        spec=SurrogateSpec(tau=algorithm.tau, kind=algorithm.surrogate),
        step_sizes=StepSizeSchedule(algorithm.gamma0, algorithm.mu),
    )


def network_average(cfg, states):
    """Average of the final estimates: plain for the baseline, phi-weighted otherwise."""
    if cfg.algorithm.variant == BASELINE:
        return np.mean(states, axis=0)
    return weighted_average_sbar(states)


def _checked(record):
    if not record.is_finite():
        logger.error('divergence at round %d: %s', record.t, record)
        raise DivergenceDetected(record.t, record)
    return record


# ─── Baseline comparator ─────────────────────────────────────────────────────

def baseline_subgradient_round(x, g, gamma, problem, weights=None):
    """
    One round of distributed subgradient projection on the full vector.

    ``x_i' = P(sum_j w_ij x_j - gamma * g_i(x_i))`` with Metropolis weights
    and ``g_i`` a subgradient of ``f_i + r/N``.
    """
    if weights is None:
        weights = metropolis_weights(g)
    x = np.asarray(x, dtype=float)
    n = problem.agent_count
    subgradients = np.stack([
        problem.gradient(i, x[i]) + problem.regularizer_subgradient(x[i]) / n for i in range(n)
    ])
    return problem.project(weights.entries @ x - gamma * subgradients)


def _baseline_record(x, x_next, problem, t, gamma):
    s_bar = x.mean(axis=0)
    s_bar_next = s_bar if x_next is None else x_next.mean(axis=0)
    V = problem.total_value(s_bar_next) + sum(problem.regularizer(row) for row in x)
    delta_sum = 0.0 if x_next is None else float(np.linalg.norm(x_next - x, axis=1).sum())
    return MetricsRecord(
        t=t,
        message_exchanges=float(t),
        J=merit_J(s_bar, problem),
        D=float(np.linalg.norm(x - s_bar, axis=1).max()),
        R=0.0,
        tracking_residual=0.0,
        V=float(V),
        gamma=float(gamma),
        delta_sum=delta_sum,
    )


def _run_baseline(cfg, setup):
    problem = setup.problem
    x = setup.x0.copy()
    trace = []
    t_end = None
    for t, gamma in zip(range(cfg.run.max_rounds + 1), setup.step_sizes):
        J = merit_J(x.mean(axis=0), problem)
        if not np.isfinite(J):
            raise DivergenceDetected(t)
        if J < cfg.run.stop_tol_J:
            t_end = t
        if t_end is not None or t == cfg.run.max_rounds:
            trace.append(_checked(_baseline_record(x, None, problem, t, gamma)))
            break
        step = cfg.algorithm.baseline_step_size(gamma)
        x_next = baseline_subgradient_round(x, setup.graph, step, problem, setup.weights)
        if t % cfg.run.metrics_stride == 0:
            trace.append(_checked(_baseline_record(x, x_next, problem, t, gamma)))
        x = x_next
    return trace, list(x), t_end


# ─── B-SONATA ────────────────────────────────────────────────────────────────

def _run_sonata(cfg, setup, verify):
    problem = setup.problem
    variant = cfg.algorithm.variant
    blocks = cfg.algorithm.blocks
    states = initial_states(problem, setup.x0, with_g_hat=variant == GHAT)
    s_bar = weighted_average_sbar(states)
    trace = []
    t_end = None
    for t, gamma in zip(range(cfg.run.max_rounds + 1), setup.step_sizes):
        J = merit_J(s_bar, problem)
        if not np.isfinite(J):
            raise DivergenceDetected(t)
        if J < cfg.run.stop_tol_J:
            t_end = t
        if t_end is not None or t == cfg.run.max_rounds:
            trace.append(_checked(metrics(states, s_bar, problem, t=t, block_count=blocks, gamma=gamma)))
            break
        result = run_round(variant, states, setup.graph, setup.weights, setup.schedule, gamma,
                           problem, setup.spec, t)
        if verify:
            verify_round(states, result, gamma, problem, setup.spec, variant, t)
        s_bar_next = weighted_average_sbar(result.states)
        if t % cfg.run.metrics_stride == 0:
            trace.append(_checked(metrics(
                states, s_bar, problem, t=t, block_count=blocks, gamma=gamma,
                delta_sum=result.delta_sum, s_bar_next=s_bar_next,
            )))
        states, s_bar = result.states, s_bar_next
    return trace, states, t_end


def run_experiment(cfg, verify=False):
    setup = build_setup(cfg)
    connectivity = algebraic_connectivity(setup.graph)
    logger.info(
        'run %s seed=%d N=%d m=%d B=%d lambda=%g theta=%g algebraic connectivity %.4g',
        cfg.algorithm.variant, cfg.seed, cfg.graph.n, cfg.problem.m, cfg.algorithm.blocks,
        cfg.problem.lam, cfg.problem.theta, connectivity,
    )
    if cfg.algorithm.variant == BASELINE:
        trace, states, t_end = _run_baseline(cfg, setup)
    else:
        trace, states, t_end = _run_sonata(cfg, setup, verify)

    if t_end is None:
        status = STATUS_MAX_ROUNDS
        logger.info('stopped at max_rounds=%d with J=%.3e', cfg.run.max_rounds, trace[-1].J)
    else:
        status = STATUS_CONVERGED
        logger.info('J below %g at round %d', cfg.run.stop_tol_J, t_end)
    return ExperimentResult(
        config=cfg,
        trace=trace,
        states=states,
        status=status,
        t_end=t_end,
        algebraic_connectivity=connectivity,
        stationarity_residual=stationarity_residual(network_average(cfg, states), setup.problem, setup.spec),
        problem=setup.problem,
        x_true=setup.x_true,
    )


# ─── Completion-time sweep ───────────────────────────────────────────────────

def _sweep_point(cfg):
    result = run_experiment(cfg)
    blocks = cfg.algorithm.blocks
    if result.t_end is None:
        return SweepRow(blocks=blocks, t_end=NOT_REACHED, t_end_per_B=float(NOT_REACHED)), result
    return SweepRow(blocks=blocks, t_end=result.t_end, t_end_per_B=result.t_end / blocks), result


def completion_time_sweep(cfg, block_values, tolerance=1e-3, threads=None, keep_results=False):
    """
    Completion time ``t_end`` per block count, ``-1`` when the tolerance was
    not reached. Points run on ``threads`` workers (``BSONATA_THREADS`` by
    default); rows come back in the order of ``block_values``.
    """
    configs = [
        parse_run_config(cfg.with_blocks(blocks).with_run(stop_tol_J=tolerance).to_dict())
        for blocks in block_values
    ]
    workers = threads or settings.BSONATA_THREADS
    logger.info('sweep over B=%s on %d thread(s)', list(block_values), workers)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        outcomes = list(pool.map(_sweep_point, configs))
    for row, _ in outcomes:
        logger.info('B=%d t_end=%d', row.blocks, row.t_end)
    rows = [row for row, _ in outcomes]
    if keep_results:
        return rows, [result for _, result in outcomes]
    return rows
