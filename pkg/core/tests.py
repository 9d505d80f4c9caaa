import numpy as np
from django.test import SimpleTestCase
from numpy.testing import assert_allclose, assert_array_equal

from graphs.topology import gen_erdos_renyi
from graphs.weights import base_weights
from problems.instance import make_sparse_regression
from problems.partition import BlockPartition
from problems.penalties import PENALTY_L1
from pushsum.protocol import block_weight_entries
from schedule.rules import BlockSchedule
from .diagnostics import (
    weighted_average_sbar, sigma_bar, lyapunov_V, descent_check, metrics, MetricsRecord,
)
from .exceptions import InvalidSchedule
from .rounds import (
    best_response_block, sonata_round, cta_round, blockwise_gradient_round, run_round, ATC, CTA, GHAT,
)
from .state import AgentState, initial_states, initialize_estimates
from .stepsize import step_size_next, StepSizeSchedule
from .surrogate import SurrogateSpec, PLAIN_LINEARIZATION, DC_LINEARIZATION

BOX = (-10.0, 10.0)
UNBOUNDED = (-np.inf, np.inf)


class Desk:
    """Graph, weights, schedule and instance of a small sparse regression."""

    def __init__(self, blocks=3, seed=0, lam=0.15, box=BOX, penalty='log', n=10):
        rng = np.random.default_rng(seed)
        self.g = gen_erdos_renyi(n, 0.5, rng)
        self.base = base_weights(self.g)
        self.sched = BlockSchedule(block_count=blocks)
        self.problem, self.x_true = make_sparse_regression(
            rng, n, 60, 40, 0.8, 0.5, lam, 7.0, box,
            partition=BlockPartition.contiguous(60, blocks), penalty=penalty,
        )
        self.x0 = initialize_estimates(self.problem, rng)

    def states(self, with_g_hat=False):
        return initial_states(self.problem, self.x0, with_g_hat=with_g_hat)

    def rounds(self, round_fn, states, count, spec=None, gamma0=0.3, mu=1e-3):
        """Yield ``(t, gamma, result)`` for ``count`` rounds."""
        spec = spec or SurrogateSpec(tau=10.0)
        gamma = gamma0
        for t in range(count):
            result = round_fn(states, self.g, self.base, self.sched, gamma, self.problem, spec, t)
            yield t, gamma, result
            states = result.states
            gamma = step_size_next(gamma, mu)


class StepSizeTests(SimpleTestCase):

    def test_desk_values(self):
        self.assertAlmostEqual(step_size_next(0.3, 1e-3), 0.29991, places=15)

    def test_zero_mu_keeps_gamma(self):
        self.assertEqual(step_size_next(0.3, 0.0), 0.3)

    def test_long_sequence_is_positive_and_nonincreasing(self):
        values = StepSizeSchedule(gamma0=0.3, mu=1e-3).sequence(10_000)
        self.assertTrue(np.all(values > 0))
        self.assertTrue(np.all(np.diff(values) <= 0))
        self.assertEqual(values[0], 0.3)

    def test_invalid_parameters(self):
        with self.assertRaises(InvalidSchedule):
            step_size_next(1.5, 1e-3)
        with self.assertRaises(InvalidSchedule):
            step_size_next(0.5, 2.0)
        with self.assertRaises(InvalidSchedule):
            StepSizeSchedule(gamma0=0.3, mu=0.0)


class SurrogateSpecTests(SimpleTestCase):

    def test_modulus_follows_the_quadratic(self):
        self.assertEqual(SurrogateSpec(tau=10.0, kind=PLAIN_LINEARIZATION).modulus(0), 20.0)
        self.assertEqual(SurrogateSpec(tau=10.0, kind=DC_LINEARIZATION).modulus(3), 10.0)
        self.assertEqual(SurrogateSpec(tau=(1.0, 2.0)).tau_for(1), 2.0)

    def test_invalid_specs(self):
        with self.assertRaises(ValueError):
            SurrogateSpec(tau=0.0)
        with self.assertRaises(ValueError):
            SurrogateSpec(tau=1.0, kind='newton')

    def test_plain_coefficient_is_the_tracked_gradient(self):
        n_y = np.array([1.0, -2.0])
        spec = SurrogateSpec(tau=1.0, kind=PLAIN_LINEARIZATION)
        assert_array_equal(spec.coefficient(n_y, np.array([5.0, 5.0])), n_y)


class BestResponseTests(SimpleTestCase):

    def test_unregularized_plain_step(self):
        desk = Desk(lam=0.0, box=UNBOUNDED)
        spec = SurrogateSpec(tau=10.0, kind=PLAIN_LINEARIZATION)
        x_i = desk.x0[2]
        y_block = np.linspace(-2, 2, 20)
        x_tilde, r_old, r_new = best_response_block(2, 1, x_i, y_block, spec, desk.problem)
        assert_allclose(x_tilde, x_i[20:40] - 10 * y_block / 20.0, atol=1e-14)
        self.assertEqual((r_old, r_new), (0.0, 0.0))

    def test_zero_tracker_stays_put(self):
        desk = Desk(lam=0.0, box=UNBOUNDED)
        x_tilde, _, _ = best_response_block(0, 0, desk.x0[0], np.zeros(20), SurrogateSpec(tau=3.0), desk.problem)
        assert_array_equal(x_tilde, desk.x0[0][:20])

    def test_matches_oracle_solver(self):
        desk = Desk()
        rng = np.random.default_rng(17)
        closed_spec = SurrogateSpec(tau=10.0)
        oracle_spec = SurrogateSpec(tau=10.0, use_oracle=True)
        for agent in range(10):
            y_block = rng.standard_normal(20)
            block = int(rng.integers(0, 3))
            closed = best_response_block(agent, block, desk.x0[agent], y_block, closed_spec, desk.problem)
            oracle = best_response_block(agent, block, desk.x0[agent], y_block, oracle_spec, desk.problem)
            self.assertLessEqual(np.abs(closed.x_tilde - oracle.x_tilde).max(), 1e-8)

    def test_plain_linearization_needs_convex_regularizer(self):
        desk = Desk()
        spec = SurrogateSpec(tau=10.0, kind=PLAIN_LINEARIZATION)
        with self.assertRaises(ValueError):
            best_response_block(0, 0, desk.x0[0], np.zeros(20), spec, desk.problem)
        l1 = Desk(penalty=PENALTY_L1)
        best_response_block(0, 0, l1.x0[0], np.zeros(20), spec, l1.problem)


class AveragesTests(SimpleTestCase):

    def state(self, phi, x):
        phi = np.array([phi])
        x = np.array([x])
        return AgentState(phi=phi, s=phi * x, sigma=np.zeros(1), grad_cache=np.zeros(1),
                          coordinate_blocks=np.zeros(1, dtype=np.int64))

    def test_unit_weights_identical_estimates(self):
        states = [self.state(1.0, 4.0) for _ in range(3)]
        assert_allclose(weighted_average_sbar(states), [4.0])

    def test_weighted_consensus_value(self):
        states = [self.state(0.5, 2.0), self.state(1.5, 2.0)]
        assert_allclose(weighted_average_sbar(states), [2.0])

    def test_weighted_average(self):
        states = [self.state(0.5, 0.0), self.state(1.5, 2.0)]
        assert_allclose(weighted_average_sbar(states), [1.5])


class LyapunovTests(SimpleTestCase):

    def test_without_regularizer(self):
        desk = Desk(lam=0.0)
        states = desk.states()
        s_bar = weighted_average_sbar(states)
        self.assertAlmostEqual(lyapunov_V(states, s_bar, desk.problem), desk.problem.total_value(s_bar))

    def test_common_point(self):
        desk = Desk()
        x = desk.problem.project(np.random.default_rng(1).standard_normal(60))
        states = initial_states(desk.problem, np.tile(x, (10, 1)))
        expected = desk.problem.total_value(x) + 10 * sum(
            desk.problem.regularizer(x[idx]) for idx in desk.problem.partition.index_sets
        )
        self.assertAlmostEqual(lyapunov_V(states, x, desk.problem), expected, places=9)


class DescentCheckTests(SimpleTestCase):

    def test_zero_step(self):
        self.assertTrue(descent_check(np.ones(3), np.zeros(3), 10.0, 1.0, 1.0, 10))

    def test_unconstrained_plain_step_is_tight(self):
        y = np.array([0.5, -1.0, 2.0])
        step = -10 * y / (2 * 4.0)
        self.assertTrue(descent_check(y, step, 4.0, 0.0, 0.0, 10))
        self.assertFalse(descent_check(y, -step, 4.0, 0.0, 0.0, 10))

    def test_dc_modulus_and_correction(self):
        y = np.array([0.5, -1.0])
        v = np.array([0.2, 0.1])
        step = -(10 * y - v) / 4.0
        self.assertTrue(descent_check(y, step, 4.0, 0.0, 0.0, 10, kind=DC_LINEARIZATION, correction=v))
        self.assertFalse(descent_check(y, step, 4.0, 0.0, 0.0, 10, kind=PLAIN_LINEARIZATION, correction=v))


class RoundTests(SimpleTestCase):

    def test_zero_step_keeps_common_estimates(self):
        desk = Desk()
        x = desk.problem.project(np.random.default_rng(5).standard_normal(60))
        states = initial_states(desk.problem, np.tile(x, (10, 1)))
        for round_fn in (sonata_round, cta_round):
            result = round_fn(states, desk.g, desk.base, desk.sched, 0.0, desk.problem, SurrogateSpec(tau=10.0), 0)
            for state in result.states:
                assert_allclose(state.x, x, rtol=1e-13, atol=1e-15)

    def test_round_result_records_one_step_per_agent(self):
        desk = Desk()
        result = sonata_round(desk.states(), desk.g, desk.base, desk.sched, 0.3, desk.problem,
                              SurrogateSpec(tau=10.0), 4)
        self.assertEqual([step.block for step in result.steps], list(result.selections))
        self.assertEqual(len(result.steps), 10)
        self.assertAlmostEqual(result.delta_sum, sum(np.linalg.norm(s.delta) for s in result.steps))

    def test_conservation_laws_for_every_variant(self):
        for variant, round_fn in ((ATC, sonata_round), (CTA, cta_round), (GHAT, blockwise_gradient_round)):
            desk = Desk(blocks=3, seed=1)
            states = desk.states(with_g_hat=variant == GHAT)
            for t, gamma, result in desk.rounds(round_fn, states, 60):
                with self.subTest(variant=variant, t=t):
                    phi = np.stack([s.phi for s in result.states])
                    self.assertLessEqual(np.abs(phi.sum(axis=0) - 10).max(), 1e-10)
                    self.assertGreater(phi.min(), 1e-6)
                    known = np.stack([s.grad_cache for s in result.states])
                    bound = 1e-8 * (1 + np.abs(known).max())
                    self.assertLessEqual(np.abs(sigma_bar(result.states) - known.mean(axis=0)).max(), bound)
                    # s_bar moves by the weighted sum of the local steps.
                    expected = np.zeros(60)
                    phi_before = np.stack([s.phi for s in states])
                    for step in result.steps:
                        idx = desk.problem.partition.index_sets[step.block]
                        weight = phi_before[step.agent, step.block]
                        if variant == CTA:
                            weight *= phi[step.agent, step.block]
                        expected[idx] += gamma * weight * step.delta / 10
                    moved = weighted_average_sbar(result.states) - weighted_average_sbar(states)
                    assert_allclose(moved, expected, rtol=1e-10, atol=1e-12)
                    for state in result.states:
                        if variant != CTA:
                            self.assertTrue(desk.problem.is_feasible(state.x))
                states = result.states

    def test_cta_adds_the_local_step_after_mixing_estimates(self):
        desk = Desk(blocks=3, seed=2, n=6)
        states = desk.states()
        for t, gamma, result in desk.rounds(cta_round, states, 3):
            states = result.states
        phi = np.stack([s.phi for s in states])
        self.assertGreater(np.abs(phi - 1).max(), 1e-3)
        x = np.stack([s.x for s in states])
        gamma = 0.25
        result = cta_round(states, desk.g, desk.base, desk.sched, gamma, desk.problem, SurrogateSpec(tau=10.0), 3)

        expected = np.empty_like(x)
        for block, idx in enumerate(desk.problem.partition.index_sets):
            a = block_weight_entries(desk.base, result.selections, block)
            mixed_phi = a @ phi[:, block]
            expected[:, idx] = (a @ (phi[:, [block]] * x[:, idx])) / mixed_phi[:, np.newaxis]
            for step in result.steps:
                if step.block == block:
                    expected[step.agent, idx] += gamma * phi[step.agent, block] * step.delta
        assert_allclose(np.stack([s.x for s in result.states]), expected, rtol=1e-10, atol=1e-12)

    def test_ghat_keeps_unselected_blocks(self):
        desk = Desk(blocks=3)
        states = desk.states(with_g_hat=True)
        result = blockwise_gradient_round(states, desk.g, desk.base, desk.sched, 0.3, desk.problem,
                                          SurrogateSpec(tau=10.0), 0)
        for agent, (before, after) in enumerate(zip(states, result.states)):
            selected = result.selections[agent]
            for block, idx in enumerate(desk.problem.partition.index_sets):
                if block == selected:
                    assert_array_equal(after.g_hat[idx],
                                       desk.problem.block_gradient(agent, after.x, block))
                else:
                    assert_array_equal(after.g_hat[idx], before.g_hat[idx])

    def test_ghat_needs_buffer(self):
        desk = Desk()
        with self.assertRaises(ValueError):
            blockwise_gradient_round(desk.states(), desk.g, desk.base, desk.sched, 0.3, desk.problem,
                                     SurrogateSpec(tau=10.0), 0)

    def test_unknown_variant(self):
        desk = Desk()
        with self.assertRaises(ValueError):
            run_round('gossip', desk.states(), desk.g, desk.base, desk.sched, 0.3, desk.problem,
                      SurrogateSpec(tau=10.0), 0)

    def test_single_block_ghat_equals_atc_bitwise(self):
        desk = Desk(blocks=1, seed=3)
        atc = list(desk.rounds(sonata_round, desk.states(), 100))
        ghat = list(desk.rounds(blockwise_gradient_round, desk.states(with_g_hat=True), 100))
        for (_, _, a), (_, _, b) in zip(atc, ghat):
            for left, right in zip(a.states, b.states):
                assert_array_equal(left.phi, right.phi)
                assert_array_equal(left.s, right.s)
                assert_array_equal(left.sigma, right.sigma)

    def test_single_block_cta_conserves_tracking(self):
        desk = Desk(blocks=1, seed=4)
        for t, gamma, result in desk.rounds(cta_round, desk.states(), 30):
            record = metrics(result.states, weighted_average_sbar(result.states), desk.problem)
            self.assertLessEqual(record.tracking_residual, 1e-8 * (1 + 100))

    def test_tracking_identity_on_long_atc_run(self):
        desk = Desk(blocks=5, seed=6)
        worst, scale = 0.0, 0.0
        for t, gamma, result in desk.rounds(sonata_round, desk.states(), 300):
            record = metrics(result.states, weighted_average_sbar(result.states), desk.problem)
            worst = max(worst, record.tracking_residual)
            scale = max(scale, np.abs(np.stack([s.grad_cache for s in result.states])).max())
        self.assertLessEqual(worst, 1e-8 * (1 + scale))


class MetricsTests(SimpleTestCase):

    def test_initial_tracking_residual_is_exactly_zero(self):
        desk = Desk()
        states = desk.states()
        record = metrics(states, weighted_average_sbar(states), desk.problem, t=0, block_count=3, gamma=0.3)
        self.assertEqual(record.tracking_residual, 0.0)
        self.assertEqual(record.message_exchanges, 0.0)
        self.assertTrue(record.is_finite())

    def test_consensus_state_has_no_disagreement(self):
        desk = Desk()
        x = desk.problem.project(np.random.default_rng(2).standard_normal(60))
        states = initial_states(desk.problem, np.tile(x, (10, 1)))
        shared = np.ones(60)
        states = [AgentState(phi=s.phi, s=s.s, sigma=shared, grad_cache=s.grad_cache,
                             coordinate_blocks=s.coordinate_blocks) for s in states]
        record = metrics(states, weighted_average_sbar(states), desk.problem)
        self.assertAlmostEqual(record.D, 0.0, places=12)
        self.assertAlmostEqual(record.R, 0.0, places=12)

    def test_message_exchanges(self):
        desk = Desk()
        states = desk.states()
        record = metrics(states, weighted_average_sbar(states), desk.problem, t=30, block_count=3)
        self.assertEqual(record.message_exchanges, 10.0)
        self.assertEqual(MetricsRecord.field_names()[0], 't')
