import math
import tempfile
from io import StringIO
from pathlib import Path
from unittest import mock

import numpy as np
from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase, TestCase, tag
from django.urls import reverse
from numpy.testing import assert_allclose, assert_array_equal
from rest_framework import status
from rest_framework.test import APITestCase

from core.diagnostics import MetricsRecord
from core.surrogate import PLAIN_LINEARIZATION
from graphs.topology import Digraph, gen_erdos_renyi
from graphs.weights import metropolis_weights
from problems.instance import make_sparse_regression
from problems.merit import stationarity_residual
from problems.penalties import PENALTY_L1
from .config import (
    BASELINE, BASELINE_STEP_RAW, BASELINE_STEP_SCALED, STREAM_LABELS, GraphConfig, ProblemConfig,
    AlgorithmConfig, RunSettings, RunConfig, parse_run_config, load_run_config, rng_streams, schedule_seed,
)
from .exceptions import ConfigError, DivergenceDetected, InvariantViolation
from .experiment import (
    build_setup, run_experiment, baseline_subgradient_round, completion_time_sweep, NOT_REACHED, SweepRow,
)
from .export import format_metrics_csv, write_metrics_csv, write_sweep_csv
from .models import ExperimentRun, MetricSample, STATUS_CONVERGED, STATUS_MAX_ROUNDS

HEADER = 't,message_exchanges,J,D,R,tracking_residual,V,gamma,delta_sum'

DESK_TOML = """\
seed = 11

[graph]
n = 6
p = 0.5

[problem]
m = 12
n_i = 10
lambda = 0.15
theta = 7.0
box = [-10.0, 10.0]

[algorithm]
variant = "atc"
B = 3

[run]
max_rounds = 25
metrics_stride = 10
stop_tol_J = 0.0
"""


def small_config(seed=11, max_rounds=25, stride=10, stop_tol=0.0, **algorithm):
    return RunConfig(
        seed=seed,
        graph=GraphConfig(n=6),
        problem=ProblemConfig(m=12, n_i=10),
        algorithm=AlgorithmConfig(**{'blocks': 3, **algorithm}),
        run=RunSettings(max_rounds=max_rounds, metrics_stride=stride, stop_tol_J=stop_tol),
    )


def desk_config(seed=0, max_rounds=15000, stop_tol=1e-3, **algorithm):
    """The desk instance: N=10, m=60, n_i=40, lambda=0.15, theta=7, tau=10."""
    return RunConfig(
        seed=seed,
        algorithm=AlgorithmConfig(**algorithm),
        run=RunSettings(max_rounds=max_rounds, metrics_stride=10, stop_tol_J=stop_tol),
    )


def record(t=0, **values):
    base = dict(message_exchanges=t / 3, J=0.5, D=0.25, R=0.125, tracking_residual=0.0,
                V=12.0, gamma=0.3, delta_sum=1.0 / 3.0)
    base.update(values)
    return MetricsRecord(t=t, **base)


# ─────────────────────────────────────────────
# Configuration
# ─────────────────────────────────────────────

class RunConfigTests(SimpleTestCase):

    def test_empty_document_gives_desk_defaults(self):
        cfg = parse_run_config({})
        self.assertEqual(cfg, RunConfig())
        self.assertEqual(cfg.problem.lam, 0.15)
        self.assertEqual(cfg.problem.theta, 7.0)
        self.assertEqual(cfg.algorithm.tau, 10.0)
        self.assertEqual(cfg.algorithm.gamma0, 0.3)
        self.assertEqual(cfg.algorithm.mu, 1e-3)
        self.assertEqual(cfg.algorithm.blocks, 3)

    def test_lambda_and_B_keys(self):
        cfg = parse_run_config({'problem': {'lambda': 0.2}, 'algorithm': {'B': 6}})
        self.assertEqual(cfg.problem.lam, 0.2)
        self.assertEqual(cfg.algorithm.blocks, 6)

    def test_baseline_step_key(self):
        self.assertEqual(parse_run_config({}).algorithm.baseline_step, BASELINE_STEP_SCALED)
        cfg = parse_run_config({'algorithm': {'variant': BASELINE, 'baseline_step': 'gamma'}})
        self.assertEqual(cfg.algorithm.baseline_step, BASELINE_STEP_RAW)
        self.assertAlmostEqual(cfg.algorithm.baseline_step_size(0.3), 0.3)
        self.assertAlmostEqual(AlgorithmConfig(tau=10.0).baseline_step_size(0.3), 0.03)
        with self.assertRaises(ConfigError) as cm:
            parse_run_config({'algorithm': {'baseline_step': 'half'}})
        self.assertIn('baseline_step', cm.exception.errors['algorithm'])

    def test_to_dict_parses_back(self):
        cfg = small_config(variant='cta', schedule_rule='shuffled_cyclic')
        self.assertEqual(parse_run_config(cfg.to_dict()), cfg)

    def test_unknown_top_level_key(self):
        with self.assertRaises(ConfigError) as cm:
            parse_run_config({'seeed': 1})
        self.assertIn('seeed', cm.exception.errors)

    def test_unknown_section_key(self):
        with self.assertRaises(ConfigError) as cm:
            parse_run_config({'graph': {'nodes': 5}})
        self.assertIn('nodes', cm.exception.errors['graph'])

    def test_closed_vocabularies(self):
        for document in (
            {'algorithm': {'variant': 'gossip'}},
            {'algorithm': {'schedule_rule': 'random'}},
            {'algorithm': {'surrogate': 'quadratic'}},
            {'problem': {'penalty': 'scad'}},
        ):
            with self.subTest(document=document), self.assertRaises(ConfigError):
                parse_run_config(document)

    def test_ranges(self):
        for document in (
            {'graph': {'p': 0.0}},
            {'graph': {'p': 1.5}},
            {'graph': {'n': 0}},
            {'problem': {'sparsity_frac': 1.0}},
            {'problem': {'lambda': -0.1}},
            {'problem': {'box': [1.0, -1.0]}},
            {'problem': {'box': [1.0]}},
            {'algorithm': {'gamma0': 0.0}},
            {'algorithm': {'mu': 0.0}},
            {'algorithm': {'tau': -1.0}},
            {'run': {'max_rounds': -1}},
            {'run': {'metrics_stride': 0}},
        ):
            with self.subTest(document=document), self.assertRaises(ConfigError):
                parse_run_config(document)

    def test_blocks_must_divide_m(self):
        with self.assertRaises(ConfigError) as cm:
            parse_run_config({'algorithm': {'B': 7}})
        self.assertIn('algorithm', cm.exception.errors)

    def test_mu_gamma_product_below_one(self):
        with self.assertRaises(ConfigError):
            parse_run_config({'algorithm': {'gamma0': 1.0, 'mu': 1.0}})

    def test_plain_surrogate_needs_convex_regularizer(self):
        with self.assertRaises(ConfigError):
            parse_run_config({'algorithm': {'surrogate': PLAIN_LINEARIZATION}})
        cfg = parse_run_config({'algorithm': {'surrogate': PLAIN_LINEARIZATION}, 'problem': {'penalty': 'l1'}})
        self.assertEqual(cfg.problem.penalty, PENALTY_L1)
        cfg = parse_run_config({'algorithm': {'surrogate': PLAIN_LINEARIZATION}, 'problem': {'lambda': 0.0}})
        self.assertEqual(cfg.problem.lam, 0.0)

    def test_load_from_toml(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / 'run.toml'
            path.write_text(DESK_TOML, encoding='utf-8')
            cfg = load_run_config(path)
        self.assertEqual(cfg, small_config())

    def test_malformed_toml(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / 'run.toml'
            path.write_text('seed = = 3\n', encoding='utf-8')
            with self.assertRaises(ConfigError):
                load_run_config(path)

    def test_missing_file(self):
        with self.assertRaises(ConfigError):
            load_run_config('/nonexistent/run.toml')

    def test_rng_streams_are_labelled_and_reproducible(self):
        first, second = rng_streams(5), rng_streams(5)
        self.assertEqual(set(first), {'graph', 'data', 'noise', 'init', 'schedule'})
        assert_array_equal(first['data'].random(4), second['data'].random(4))
        self.assertFalse(np.array_equal(rng_streams(5)['graph'].random(4), rng_streams(5)['data'].random(4)))

    def test_schedule_seed_draws_from_schedule_stream(self):
        expected = int(np.random.default_rng([5, STREAM_LABELS['schedule']]).integers(2 ** 31))
        self.assertEqual(schedule_seed(rng_streams(5)['schedule']), expected)
        setup = build_setup(small_config(seed=5, schedule_rule='shuffled_cyclic'))
        self.assertEqual(setup.schedule.seed, expected)


# ─────────────────────────────────────────────
# Experiment loop
# ─────────────────────────────────────────────

class ExperimentTests(SimpleTestCase):

    def test_zero_rounds_gives_initial_record(self):
        result = run_experiment(small_config(max_rounds=0))
        self.assertEqual(len(result.trace), 1)
        only = result.trace[0]
        self.assertEqual(only.t, 0)
        self.assertEqual(only.message_exchanges, 0.0)
        self.assertEqual(only.tracking_residual, 0.0)
        self.assertEqual(only.delta_sum, 0.0)
        self.assertEqual(only.gamma, 0.3)
        self.assertEqual(result.status, STATUS_MAX_ROUNDS)
        self.assertIsNone(result.t_end)

    def test_records_every_stride_and_the_last_round(self):
        result = run_experiment(small_config(max_rounds=25, stride=10))
        self.assertEqual([r.t for r in result.trace], [0, 10, 20, 25])
        self.assertEqual([r.message_exchanges for r in result.trace], [0.0, 10 / 3, 20 / 3, 25 / 3])
        self.assertTrue(all(r.is_finite() for r in result.trace))
        self.assertEqual(result.final.delta_sum, 0.0)
        self.assertGreater(result.trace[1].delta_sum, 0.0)

    def test_same_config_gives_identical_csv(self):
        cfg = small_config(variant='cta', schedule_rule='shuffled_cyclic')
        self.assertEqual(
            format_metrics_csv(run_experiment(cfg).trace),
            format_metrics_csv(run_experiment(cfg).trace),
        )

    def test_instance_does_not_depend_on_blocks(self):
        one = build_setup(small_config(blocks=1))
        three = build_setup(small_config(blocks=3))
        self.assertEqual(one.graph, three.graph)
        for d1, d3 in zip(one.problem.D, three.problem.D):
            assert_array_equal(d1, d3)
        for b1, b3 in zip(one.problem.b, three.problem.b):
            assert_array_equal(b1, b3)
        assert_array_equal(one.x0, three.x0)
        assert_array_equal(one.x_true, three.x_true)

    def test_loose_tolerance_stops_at_round_zero(self):
        result = run_experiment(small_config(stop_tol=1e6))
        self.assertEqual(result.status, STATUS_CONVERGED)
        self.assertEqual(result.t_end, 0)
        self.assertEqual(len(result.trace), 1)

    def test_every_variant_passes_verification(self):
        for variant in ('atc', 'cta', 'ghat'):
            with self.subTest(variant=variant):
                result = run_experiment(small_config(variant=variant, max_rounds=40), verify=True)
                self.assertEqual(result.final.t, 40)

    def test_verification_stops_at_first_violation(self):
        with mock.patch('harness.verification.descent_check', return_value=False):
            with self.assertRaises(InvariantViolation) as cm:
                run_experiment(small_config(), verify=True)
        self.assertEqual(cm.exception.name, 'descent inequality')
        self.assertEqual(cm.exception.t, 0)

    def test_non_finite_merit_aborts(self):
        with mock.patch('harness.experiment.merit_J', return_value=math.nan):
            with self.assertRaises(DivergenceDetected) as cm:
                run_experiment(small_config())
        self.assertEqual(cm.exception.t, 0)

    def test_result_reports_connectivity_and_residual(self):
        result = run_experiment(small_config())
        self.assertGreater(result.algebraic_connectivity, 0.0)
        self.assertGreaterEqual(result.stationarity_residual, 0.0)
        self.assertEqual(result.s_bar.shape, (12,))


class BaselineTests(SimpleTestCase):

    def test_consensus_is_fixed_without_step(self):
        rng = np.random.default_rng(4)
        g = gen_erdos_renyi(5, 0.6, rng)
        problem, _ = make_sparse_regression(rng, 5, 6, 8, 0.5, 0.1, 0.15, 7.0, (-10.0, 10.0))
        x = np.tile(rng.uniform(-1, 1, 6), (5, 1))
        assert_allclose(baseline_subgradient_round(x, g, 0.0, problem), x, atol=1e-12)

    def test_single_agent_is_gradient_descent(self):
        rng = np.random.default_rng(5)
        g = Digraph.from_edges(1, [])
        problem, _ = make_sparse_regression(rng, 1, 6, 8, 0.5, 0.1, 0.0, 7.0, (-1e6, 1e6))
        x = rng.standard_normal((1, 6))
        expected = x[0] - 0.01 * problem.gradient(0, x[0])
        assert_allclose(baseline_subgradient_round(x, g, 0.01, problem)[0], expected, rtol=1e-12)

    def test_uses_given_weights(self):
        rng = np.random.default_rng(6)
        g = gen_erdos_renyi(4, 0.7, rng)
        problem, _ = make_sparse_regression(rng, 4, 6, 8, 0.5, 0.1, 0.15, 7.0, (-10.0, 10.0))
        x = rng.standard_normal((4, 6))
        assert_array_equal(
            baseline_subgradient_round(x, g, 0.1, problem),
            baseline_subgradient_round(x, g, 0.1, problem, metropolis_weights(g)),
        )

    def test_baseline_run_counts_full_vector_messages(self):
        result = run_experiment(small_config(variant=BASELINE, max_rounds=20))
        self.assertEqual([r.message_exchanges for r in result.trace], [0.0, 10.0, 20.0])
        self.assertTrue(all(r.R == 0.0 for r in result.trace))
        self.assertEqual(len(result.states), 6)

    def test_step_rule_follows_config(self):
        for rule, expected in ((BASELINE_STEP_SCALED, 0.03), (BASELINE_STEP_RAW, 0.3)):
            with self.subTest(rule=rule):
                cfg = small_config(variant=BASELINE, max_rounds=1, baseline_step=rule)
                with mock.patch('harness.experiment.baseline_subgradient_round',
                                wraps=baseline_subgradient_round) as spy:
                    run_experiment(cfg)
                self.assertEqual(spy.call_count, 1)
                self.assertAlmostEqual(spy.call_args.args[2], expected)


class SweepTests(SimpleTestCase):

    def test_rows_follow_block_order_with_sentinel(self):
        rows = completion_time_sweep(small_config(max_rounds=5), [1, 3], tolerance=0.0, threads=1)
        self.assertEqual([row.blocks for row in rows], [1, 3])
        for row in rows:
            self.assertEqual(row.t_end, NOT_REACHED)
            self.assertEqual(row.t_end_per_B, -1.0)

    def test_reached_tolerance_is_normalized(self):
        rows = completion_time_sweep(small_config(max_rounds=5), [1, 3], tolerance=1e6, threads=1)
        self.assertEqual(rows, [SweepRow(1, 0, 0.0), SweepRow(3, 0, 0.0)])

    def test_thread_count_does_not_change_results(self):
        cfg = small_config(max_rounds=20)
        _, serial = completion_time_sweep(cfg, [1, 2, 3], tolerance=0.0, threads=1, keep_results=True)
        _, pooled = completion_time_sweep(cfg, [1, 2, 3], tolerance=0.0, threads=3, keep_results=True)
        for a, b in zip(serial, pooled):
            self.assertEqual(format_metrics_csv(a.trace), format_metrics_csv(b.trace))

    def test_blocks_must_divide_m(self):
        with self.assertRaises(ConfigError):
            completion_time_sweep(small_config(), [5], threads=1)


# ─────────────────────────────────────────────
# CSV export
# ─────────────────────────────────────────────

class ExportTests(SimpleTestCase):

    def test_empty_trace_is_header_only(self):
        self.assertEqual(format_metrics_csv([]), HEADER + '\n')

    def test_one_record_two_lines_with_lf(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / 'trace.csv'
            write_metrics_csv([record(t=3)], path)
            raw = path.read_bytes()
        self.assertNotIn(b'\r', raw)
        lines = raw.decode('utf-8').splitlines()
        self.assertEqual(len(lines), 2)
        self.assertEqual(lines[0], HEADER)

    def test_values_parse_back_exactly(self):
        rec = record(t=7, J=0.1 + 0.2, V=1e-300, delta_sum=math.pi)
        line = format_metrics_csv([rec]).splitlines()[1]
        cells = line.split(',')
        self.assertEqual(int(cells[0]), 7)
        self.assertEqual(tuple(float(c) for c in cells[1:]), rec.values()[1:])

    def test_sweep_table(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / 'sweep.csv'
            write_sweep_csv([SweepRow(1, 120, 120.0), SweepRow(6, -1, -1.0)], path)
            text = path.read_text(encoding='utf-8')
        self.assertEqual(text, 'B,t_end,t_end_per_B\n1,120,120.0\n6,-1,-1.0\n')


# ─────────────────────────────────────────────
# Persistence and API
# ─────────────────────────────────────────────

class ExperimentRunStorageTests(TestCase):

    def test_record_stores_run_and_trace(self):
        result = run_experiment(small_config(max_rounds=25))
        run = ExperimentRun.objects.record(result, name='small')
        self.assertEqual(run.variant, 'atc')
        self.assertEqual(run.blocks, 3)
        self.assertEqual(run.status, STATUS_MAX_ROUNDS)
        self.assertIsNone(run.t_end)
        self.assertEqual(run.rounds, 25)
        self.assertEqual(run.final_J, result.final.J)
        self.assertEqual(run.config, result.config.to_dict())
        samples = list(run.samples.all())
        self.assertEqual([s.t for s in samples], [0, 10, 20, 25])
        self.assertEqual(samples[1].J, result.trace[1].J)
        self.assertEqual(samples[1].delta_sum, result.trace[1].delta_sum)

    def test_stored_config_parses_back(self):
        result = run_experiment(small_config(max_rounds=0, variant='ghat'))
        run = ExperimentRun.objects.record(result)
        self.assertEqual(parse_run_config(run.config), result.config)

    def test_deleting_run_drops_samples(self):
        run = ExperimentRun.objects.record(run_experiment(small_config(max_rounds=10)))
        run.delete()
        self.assertEqual(MetricSample.objects.count(), 0)


class ExperimentRunAPITests(APITestCase):

    @classmethod
    def setUpTestData(cls):
        cls.atc = ExperimentRun.objects.record(run_experiment(small_config(max_rounds=25)))
        cls.cta = ExperimentRun.objects.record(run_experiment(small_config(max_rounds=10, variant='cta', blocks=2)))

    def test_list(self):
        response = self.client.get(reverse('run-list'))
        self.assertEqual(response.status_code, status.HTTP_200_OK)
        self.assertEqual(response.data['count'], 2)

    def test_filter_by_variant_and_blocks(self):
        response = self.client.get(reverse('run-list'), {'variant': 'cta'})
        self.assertEqual([r['id'] for r in response.data['results']], [self.cta.pk])
        response = self.client.get(reverse('run-list'), {'blocks': 3})
        self.assertEqual([r['id'] for r in response.data['results']], [self.atc.pk])
        response = self.client.get(reverse('run-list'), {'status': STATUS_CONVERGED})
        self.assertEqual(response.data['count'], 0)

    def test_detail(self):
        response = self.client.get(reverse('run-detail', args=[self.atc.pk]))
        self.assertEqual(response.status_code, status.HTTP_200_OK)
        self.assertEqual(response.data['variant'], 'atc')
        self.assertEqual(response.data['sample_count'], 4)

    def test_missing_run(self):
        response = self.client.get(reverse('run-detail', args=[9999]))
        self.assertEqual(response.status_code, status.HTTP_404_NOT_FOUND)
        response = self.client.get(reverse('run-metrics', args=[9999]))
        self.assertEqual(response.status_code, status.HTTP_404_NOT_FOUND)

    def test_metrics_in_round_order(self):
        response = self.client.get(reverse('run-metrics', args=[self.atc.pk]))
        self.assertEqual(response.status_code, status.HTTP_200_OK)
        self.assertEqual([s['t'] for s in response.data['results']], [0, 10, 20, 25])
        self.assertIn('tracking_residual', response.data['results'][0])


# ─────────────────────────────────────────────
# Management commands
# ─────────────────────────────────────────────

class CommandTests(TestCase):

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)
        self.config_path = Path(self.tmp.name) / 'run.toml'
        self.config_path.write_text(DESK_TOML, encoding='utf-8')

    def test_run_writes_csv(self):
        out_path = Path(self.tmp.name) / 'trace.csv'
        out = StringIO()
        call_command('run', '--config', str(self.config_path), '--out', str(out_path), stdout=out)
        lines = out_path.read_text(encoding='utf-8').splitlines()
        self.assertEqual(lines[0], HEADER)
        self.assertEqual(len(lines), 5)
        self.assertIn('max_rounds', out.getvalue())

    def test_run_prints_csv_without_out(self):
        out, err = StringIO(), StringIO()
        call_command('run', '--config', str(self.config_path), stdout=out, stderr=err)
        self.assertTrue(out.getvalue().startswith(HEADER + '\n'))
        self.assertIn('B=3', err.getvalue())

    def test_run_is_deterministic(self):
        paths = [Path(self.tmp.name) / f'trace{k}.csv' for k in range(2)]
        for path in paths:
            call_command('run', '--config', str(self.config_path), '--out', str(path), stdout=StringIO())
        self.assertEqual(paths[0].read_bytes(), paths[1].read_bytes())

    def test_run_with_verify_save_and_instance(self):
        instance_dir = Path(self.tmp.name) / 'instance'
        call_command('run', '--config', str(self.config_path), '--out', str(Path(self.tmp.name) / 't.csv'),
                     '--verify', '--save', '--instance-out', str(instance_dir), stdout=StringIO())
        self.assertEqual(ExperimentRun.objects.count(), 1)
        self.assertEqual(ExperimentRun.objects.get().samples.count(), 4)
        self.assertTrue((instance_dir / 'manifest.json').exists())
        self.assertTrue((instance_dir / 'arrays.npz').exists())

    def test_run_rejects_invalid_config(self):
        self.config_path.write_text('[graph]\nnodes = 4\n', encoding='utf-8')
        with self.assertRaises(CommandError):
            call_command('run', '--config', str(self.config_path), stdout=StringIO())

    def test_run_fails_on_violation(self):
        with mock.patch('harness.verification.descent_check', return_value=False):
            with self.assertRaises(CommandError):
                call_command('run', '--config', str(self.config_path), '--verify', stdout=StringIO())

    def test_sweep(self):
        out_path = Path(self.tmp.name) / 'sweep.csv'
        out = StringIO()
        call_command('sweep', '--config', str(self.config_path), '--blocks', '1,3',
                     '--out', str(out_path), '--tolerance', '0', '--save', stdout=out)
        self.assertEqual(out_path.read_text(encoding='utf-8'), 'B,t_end,t_end_per_B\n1,-1,-1.0\n3,-1,-1.0\n')
        self.assertEqual(ExperimentRun.objects.count(), 2)
        self.assertIn('0 reached', out.getvalue())

    def test_sweep_rejects_bad_blocks(self):
        with self.assertRaises(CommandError):
            call_command('sweep', '--config', str(self.config_path), '--blocks', '1,x',
                         '--out', str(Path(self.tmp.name) / 's.csv'))
        with self.assertRaises(CommandError):
            call_command('sweep', '--config', str(self.config_path), '--blocks', '5',
                         '--out', str(Path(self.tmp.name) / 's.csv'))


# ─────────────────────────────────────────────
# Desk-scale behaviour
# ─────────────────────────────────────────────

@tag('slow')
class DeskScaleTests(SimpleTestCase):

    def test_descent_inequality_holds_for_every_variant(self):
        for variant in ('atc', 'cta', 'ghat'):
            with self.subTest(variant=variant):
                result = run_experiment(desk_config(variant=variant, max_rounds=2000, stop_tol=0.0), verify=True)
                self.assertEqual(result.final.t, 2000)

    def test_lyapunov_value_and_residual_fall_over_desk_run(self):
        cfg = desk_config(max_rounds=2000, stop_tol=0.0)
        setup = build_setup(cfg)
        start_residual = stationarity_residual(setup.x0.mean(axis=0), setup.problem, setup.spec)
        result = run_experiment(cfg)
        self.assertEqual(result.final.t, 2000)
        self.assertLess(result.final.V, result.trace[0].V)
        self.assertLess(result.stationarity_residual, start_residual)

    def test_converges_within_message_budget(self):
        for blocks in (1, 3, 6):
            with self.subTest(blocks=blocks):
                result = run_experiment(desk_config(blocks=blocks, max_rounds=5000 * blocks, stop_tol=1e-4))
                first, final = result.trace[0], result.final
                self.assertEqual(result.status, STATUS_CONVERGED)
                self.assertLessEqual(final.message_exchanges, 5000)
                self.assertLess(final.J, 1e-3)
                self.assertLess(final.D, 1e-3)
                self.assertLess(final.R, 1e-3)
                self.assertLessEqual(final.J, first.J / 100)

    def test_desk_run_reaches_default_tolerance(self):
        result = run_experiment(desk_config())
        self.assertEqual(result.status, STATUS_CONVERGED)
        self.assertLess(result.t_end, 15000)

    def test_baseline_is_slower_per_message(self):
        sonata = run_experiment(desk_config(blocks=3, stop_tol=1e-2))
        self.assertEqual(sonata.status, STATUS_CONVERGED)
        budget = math.ceil(sonata.final.message_exchanges)
        baseline = run_experiment(desk_config(variant=BASELINE, max_rounds=budget, stop_tol=0.0))
        self.assertEqual(baseline.final.message_exchanges, budget)
        self.assertGreaterEqual(baseline.final.J, 5 * sonata.final.J)

    def test_more_blocks_need_fewer_full_exchanges(self):
        rows = completion_time_sweep(desk_config(max_rounds=40000), [1, 3, 6], tolerance=1e-3)
        self.assertTrue(all(row.t_end != NOT_REACHED for row in rows))
        self.assertEqual(rows[0].t_end_per_B, rows[0].t_end)
        self.assertLess(rows[-1].t_end_per_B, rows[0].t_end_per_B)

    def test_final_consensus_and_stationarity(self):
        for variant in ('atc', 'cta', 'ghat'):
            with self.subTest(variant=variant):
                result = run_experiment(desk_config(variant=variant, max_rounds=15000, stop_tol=1e-4))
                self.assertLess(result.final.D, 1e-3)
                self.assertLess(result.stationarity_residual, 1e-2)
                if variant == 'cta':
                    self.assertLess(result.final.J, 1e-2)
