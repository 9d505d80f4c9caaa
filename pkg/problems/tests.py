import json
import tempfile
from pathlib import Path

import numpy as np
from django.test import SimpleTestCase
from numpy.testing import assert_allclose, assert_array_equal

from core.surrogate import SurrogateSpec, DC_LINEARIZATION, PLAIN_LINEARIZATION
from .exceptions import DimensionError, SolverFailure, InstanceFormatError
from .instance import ProblemInstance, make_sparse_regression, closed_form_block_min
from .merit import merit_J, best_response_map_xhat, stationarity_residual
from .partition import BlockPartition
from .penalties import (
    PENALTY_L1, eta, r0, r0_minus, r0_minus_derivative, soft_threshold, box_project, oracle_prox_solve,
)
from .storage import save_instance, load_instance, MANIFEST_FILE

BOX = (-10.0, 10.0)


def desk_instance(seed=0, blocks=3, lam=0.15, box=BOX):
    rng = np.random.default_rng(seed)
    return make_sparse_regression(
        rng, 10, 60, 40, 0.8, 0.5, lam, 7.0, box, partition=BlockPartition.contiguous(60, blocks),
    )


def l1_instance(dimension, threshold, box):
    """One agent without data, so only the l1 weight and box matter."""
    return ProblemInstance(
        partition=BlockPartition.contiguous(dimension, 1),
        D=(np.zeros((1, dimension)),), b=(np.zeros(1),),
        box=box, lam=threshold, penalty=PENALTY_L1,
    )


class BlockPartitionTests(SimpleTestCase):

    def test_contiguous_chunks(self):
        p = BlockPartition.contiguous(6, 3)
        self.assertEqual(p.sizes, (2, 2, 2))
        assert_array_equal(p.coordinate_blocks, [0, 0, 1, 1, 2, 2])

    def test_uneven_sizes_are_supported(self):
        p = BlockPartition(index_sets=([0, 3], [1], [2, 4, 5]))
        self.assertEqual(p.dimension, 6)
        x = np.arange(6.0)
        assert_array_equal(p.join(p.split(x)), x)

    def test_overlap_or_gap_rejected(self):
        with self.assertRaises(ValueError):
            BlockPartition(index_sets=([0, 1], [1, 2]))
        with self.assertRaises(ValueError):
            BlockPartition(index_sets=([0], [2]))

    def test_too_many_blocks(self):
        with self.assertRaises(ValueError):
            BlockPartition.contiguous(2, 3)


class SparseRegressionTests(SimpleTestCase):

    def test_shapes(self):
        problem, x_true = desk_instance()
        self.assertEqual(problem.agent_count, 10)
        for d, b in zip(problem.D, problem.b):
            self.assertEqual(d.shape, (40, 60))
            self.assertEqual(b.shape, (40,))
        self.assertEqual(x_true.shape, (60,))

    def test_sparsity(self):
        rng = np.random.default_rng(1)
        _, x_true = make_sparse_regression(rng, 2, 400, 5, 0.8, 0.5, 0.15, 7.0, BOX)
        self.assertEqual(int(np.sum(x_true == 0)), 320)

    def test_rows_are_normalized(self):
        problem, _ = desk_instance()
        for d in problem.D:
            assert_allclose(np.linalg.norm(d, axis=1), 1.0, atol=1e-12)

    def test_noise_stream_leaves_data_alone(self):
        first, x1 = make_sparse_regression(np.random.default_rng(4), 3, 12, 6, 0.5, 0.5, 0.1, 7.0, BOX,
                                           noise_rng=np.random.default_rng(1))
        second, x2 = make_sparse_regression(np.random.default_rng(4), 3, 12, 6, 0.5, 0.5, 0.1, 7.0, BOX,
                                            noise_rng=np.random.default_rng(2))
        assert_array_equal(x1, x2)
        assert_array_equal(first.D[2], second.D[2])
        self.assertFalse(np.array_equal(first.b[2], second.b[2]))

    def test_partition_mismatch(self):
        with self.assertRaises(DimensionError):
            make_sparse_regression(np.random.default_rng(0), 2, 10, 3, 0.5, 0.1, 0.1, 7.0, BOX,
                                   partition=BlockPartition.contiguous(12, 2))

    def test_bad_data_shapes(self):
        with self.assertRaises(DimensionError):
            ProblemInstance(partition=BlockPartition.contiguous(3, 1), D=(np.zeros((2, 4)),), b=(np.zeros(2),))
        with self.assertRaises(DimensionError):
            ProblemInstance(partition=BlockPartition.contiguous(3, 1), D=(np.zeros((2, 3)),), b=(np.zeros(3),))

    def test_gradient_matches_finite_differences(self):
        problem, _ = desk_instance(seed=2)
        rng = np.random.default_rng(3)
        h = 1e-6
        for _ in range(20):
            agent = int(rng.integers(0, 10))
            x = rng.standard_normal(60)
            grad = problem.gradient(agent, x)
            numeric = np.empty(60)
            for k in range(60):
                e = np.zeros(60)
                e[k] = h
                numeric[k] = (problem.f_value(agent, x + e) - problem.f_value(agent, x - e)) / (2 * h)
            self.assertLessEqual(np.linalg.norm(grad - numeric) / np.linalg.norm(grad), 1e-5)

    def test_block_gradient_is_exact_restriction(self):
        problem, _ = desk_instance(seed=5)
        x = np.random.default_rng(0).standard_normal(60)
        for agent in (0, 4, 9):
            grad = problem.gradient(agent, x)
            for block, idx in enumerate(problem.partition.index_sets):
                assert_array_equal(problem.block_gradient(agent, x, block), grad[idx])


class PenaltyTests(SimpleTestCase):

    def test_eta(self):
        self.assertAlmostEqual(eta(7.0), 7.0 / np.log(8.0), places=14)
        self.assertAlmostEqual(eta(7.0), 3.36629, places=5)
        self.assertAlmostEqual(eta(np.e - 1), np.e - 1, places=12)
        self.assertAlmostEqual(eta(1e-8), 1.0, places=7)

    def test_theta_floor(self):
        with self.assertRaises(ValueError):
            eta(0.0)

    def test_concave_part_derivative(self):
        self.assertEqual(r0_minus_derivative(0.0, 7.0), 0.0)
        self.assertAlmostEqual(r0_minus_derivative(1.0, 7.0), 49.0 / (np.log(8.0) * 8.0), places=12)
        self.assertAlmostEqual(r0_minus_derivative(1.0, 7.0), 2.9455, places=4)
        far = r0_minus_derivative(1e6, 7.0)
        self.assertLess(far, eta(7.0))
        self.assertGreater(far, eta(7.0) - 1e-5)
        self.assertAlmostEqual(r0_minus_derivative(-2.0, 7.0), -r0_minus_derivative(2.0, 7.0))

    def test_dc_split(self):
        grid = np.linspace(-5, 5, 201)
        assert_allclose(r0(grid, 7.0), eta(7.0) * np.abs(grid) - r0_minus(grid, 7.0), atol=1e-14)
        self.assertEqual(r0_minus(0.0, 7.0), 0.0)
        midpoints = r0_minus((grid[:-2] + grid[2:]) / 2, 7.0)
        chords = (r0_minus(grid[:-2], 7.0) + r0_minus(grid[2:], 7.0)) / 2
        self.assertTrue(np.all(midpoints <= chords + 1e-12))

    def test_soft_threshold(self):
        self.assertEqual(soft_threshold(2.0, 1.0), 1.0)
        self.assertEqual(soft_threshold(-0.5, 1.0), 0.0)
        x = np.array([-3.0, 0.2, 7.5])
        assert_array_equal(soft_threshold(x, 0.0), x)
        with self.assertRaises(ValueError):
            soft_threshold(x, -1.0)

    def test_box_project(self):
        assert_array_equal(box_project(np.array([1.0, -2.0]), -10, 10), [1.0, -2.0])
        self.assertEqual(box_project(15.0, -10, 10), 10.0)
        self.assertEqual(box_project(-12.3, -10, 10), -10.0)


class OracleProxTests(SimpleTestCase):

    def test_plain_quadratic(self):
        q, x_c = np.array([2.0, -4.0]), np.array([1.0, 1.0])
        assert_allclose(oracle_prox_solve(q, x_c, 2.0, 0.0), x_c - q / 4.0, atol=1e-10)

    def test_zero_data(self):
        assert_allclose(oracle_prox_solve(np.zeros(3), np.zeros(3), 1.0, 0.5, BOX), np.zeros(3))

    def test_one_dimensional_kink(self):
        # Subgradient at 0 is 2 - 2 + [-0.5, 0.5], which contains 0.
        x = oracle_prox_solve(np.array([2.0]), np.array([1.0]), 1.0, 0.5, BOX)
        assert_allclose(x, [0.0], atol=1e-12)

    def test_solver_failure(self):
        with self.assertRaises(SolverFailure):
            oracle_prox_solve(np.array([5.0]), np.array([3.0]), 1.0, 0.1, BOX, max_iter=2)

    def test_closed_form_matches_oracle(self):
        rng = np.random.default_rng(99)
        for trial in range(100):
            dimension = int(rng.integers(1, 9))
            lower = -float(rng.uniform(0.5, 5.0))
            upper = float(rng.uniform(0.5, 5.0))
            lam_eta = float(rng.uniform(0.0, 3.0))
            tau = float(rng.uniform(0.5, 20.0))
            q = rng.normal(scale=5.0, size=dimension)
            x_c = rng.uniform(lower, upper, size=dimension)
            problem = l1_instance(dimension, lam_eta, (lower, upper))
            closed = closed_form_block_min(0, 0, x_c, q, tau, problem)
            oracle = oracle_prox_solve(q, x_c, tau / 2.0, lam_eta, (lower, upper))
            with self.subTest(trial=trial):
                self.assertLessEqual(np.abs(closed - oracle).max(), 1e-8)

    def test_dc_closed_form_matches_oracle_with_correction(self):
        problem, _ = desk_instance(seed=8)
        rng = np.random.default_rng(8)
        for agent in range(10):
            x_i = problem.project(rng.standard_normal(60))
            y_block = rng.standard_normal(20)
            block = agent % 3
            center = x_i[problem.partition.index_sets[block]]
            q = 10 * y_block - problem.concave_gradient(center)
            closed = closed_form_block_min(agent, block, x_i, y_block, 10.0, problem)
            oracle = oracle_prox_solve(q, center, 5.0, problem.threshold, problem.box)
            self.assertLessEqual(np.abs(closed - oracle).max(), 1e-8)


class ClosedFormTests(SimpleTestCase):

    def test_gradient_step_without_regularizer(self):
        problem, _ = desk_instance(lam=0.0, box=(-np.inf, np.inf))
        x_i = np.random.default_rng(1).standard_normal(60)
        y_block = np.linspace(-1, 1, 20)
        result = closed_form_block_min(3, 1, x_i, y_block, 10.0, problem)
        assert_allclose(result, x_i[20:40] - 10 * y_block / 10.0, atol=1e-14)

    def test_local_form_uses_own_block_gradient(self):
        problem, _ = desk_instance(lam=0.0, box=(-np.inf, np.inf))
        x_i = np.random.default_rng(2).standard_normal(60)
        result = closed_form_block_min(5, 0, x_i, None, 4.0, problem)
        assert_allclose(result, x_i[:20] - problem.block_gradient(5, x_i, 0) / 4.0, atol=1e-14)

    def test_result_is_inside_the_box(self):
        problem, _ = desk_instance(seed=3)
        rng = np.random.default_rng(3)
        for _ in range(20):
            x_i = problem.project(rng.normal(scale=20.0, size=60))
            result = closed_form_block_min(0, 2, x_i, rng.normal(scale=50.0, size=20), 10.0, problem)
            self.assertTrue(problem.is_feasible(result))


class MeritTests(SimpleTestCase):

    def least_squares_point(self, problem):
        stacked_d = np.vstack(problem.D)
        stacked_b = np.concatenate(problem.b)
        return np.linalg.lstsq(stacked_d, stacked_b, rcond=None)[0]

    def test_zero_at_least_squares_solution(self):
        problem, _ = desk_instance(lam=0.0, box=(-1e6, 1e6))
        self.assertLessEqual(merit_J(self.least_squares_point(problem), problem), 1e-8)

    def test_positive_at_random_point(self):
        problem, _ = desk_instance()
        self.assertGreater(merit_J(np.random.default_rng(0).standard_normal(60), problem), 0.0)

    def test_best_response_fixed_point(self):
        problem, _ = desk_instance(lam=0.0, box=(-np.inf, np.inf))
        w = self.least_squares_point(problem)
        for kind in (DC_LINEARIZATION, PLAIN_LINEARIZATION):
            spec = SurrogateSpec(tau=10.0, kind=kind)
            self.assertLessEqual(stationarity_residual(w, problem, spec), 1e-8)

    def test_best_response_moves_a_random_point(self):
        problem, _ = desk_instance()
        w = problem.project(np.random.default_rng(4).standard_normal(60))
        x_hat = best_response_map_xhat(w, problem, SurrogateSpec(tau=10.0))
        self.assertTrue(problem.is_feasible(x_hat))
        self.assertGreater(np.abs(x_hat - w).max(), 0.0)


class InstanceStorageTests(SimpleTestCase):

    def test_round_trip(self):
        problem, x_true = desk_instance(seed=6)
        with tempfile.TemporaryDirectory() as tmp:
            save_instance(problem, tmp, x_true=x_true)
            loaded, loaded_truth = load_instance(tmp)
        self.assertEqual(loaded.partition, problem.partition)
        self.assertEqual((loaded.lam, loaded.theta, loaded.penalty, loaded.box),
                         (problem.lam, problem.theta, problem.penalty, problem.box))
        for a, b in zip(loaded.D + loaded.b, problem.D + problem.b):
            assert_array_equal(a, b)
        assert_array_equal(loaded_truth, x_true)

    def test_unbounded_box_and_no_truth(self):
        problem, _ = desk_instance(box=(-np.inf, np.inf))
        with tempfile.TemporaryDirectory() as tmp:
            save_instance(problem, tmp)
            manifest = json.loads((Path(tmp) / MANIFEST_FILE).read_text())
            loaded, truth = load_instance(tmp)
        self.assertEqual(manifest['box'], [None, None])
        self.assertEqual(loaded.box, (-np.inf, np.inf))
        self.assertIsNone(truth)

    def test_wrong_version(self):
        problem, _ = desk_instance()
        with tempfile.TemporaryDirectory() as tmp:
            save_instance(problem, tmp)
            path = Path(tmp) / MANIFEST_FILE
            manifest = json.loads(path.read_text())
            manifest['version'] = 2
            path.write_text(json.dumps(manifest))
            with self.assertRaises(InstanceFormatError) as ctx:
                load_instance(tmp)
        self.assertIn('version', ctx.exception.errors)

    def test_missing_directory(self):
        with tempfile.TemporaryDirectory() as tmp:
            with self.assertRaises(InstanceFormatError):
                load_instance(Path(tmp) / 'absent')
