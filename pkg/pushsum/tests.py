from io import StringIO

import numpy as np
from django.core.management import call_command
from django.test import SimpleTestCase
from numpy.testing import assert_allclose, assert_array_equal

from graphs.topology import Digraph, gen_erdos_renyi
from graphs.weights import WeightMatrix, base_weights
from schedule.rules import BlockSchedule, selections
from .exceptions import DegenerateWeight
from .protocol import (
    PushSumState, SignalTracker, block_weights, pushsum_step, perturbed_pushsum_step,
    track_average_step, tracking_state, consensus_error,
)
from .simulation import (
    iterate_pushsum, iterate_tracking, constant_signal, drifting_signal, signal_average,
    demo_trackers, SIGNAL_DRIFTING,
)


def directed_cycle(n):
    return Digraph.from_edges(n, [(k, (k + 1) % n) for k in range(n)])


class BlockWeightsTests(SimpleTestCase):

    def setUp(self):
        self.g = gen_erdos_renyi(6, 0.5, np.random.default_rng(1))
        self.base = base_weights(self.g)

    def test_columns_follow_the_senders(self):
        chosen = np.array([0, 1, 0, 2, 1, 0])
        a = block_weights(self.base, chosen, 0)
        for j in range(6):
            if chosen[j] == 0:
                assert_array_equal(a.entries[:, j], self.base.entries[:, j])
            else:
                assert_array_equal(a.entries[:, j], np.eye(6)[:, j])

    def test_every_column_sums_to_one(self):
        rng = np.random.default_rng(4)
        for _ in range(20):
            chosen = rng.integers(0, 3, size=6)
            for block in range(3):
                self.assertTrue(block_weights(self.base, chosen, block).is_column_stochastic())


class PushSumStepTests(SimpleTestCase):

    def setUp(self):
        self.half = WeightMatrix(entries=np.full((2, 2), 0.5), kappa=0.5)

    def test_two_agents_hand_evaluated(self):
        state = PushSumState.start([np.array([[0.0], [2.0]])])
        after = pushsum_step(state, [self.half])
        assert_allclose(after.phi, [[1.0], [1.0]])
        assert_allclose(after.z[0], [[1.0], [1.0]])

    def test_identity_weights_leave_block_unchanged(self):
        state = PushSumState(phi=np.array([[0.5], [1.5]]), z=(np.array([[3.0, 1.0], [-2.0, 4.0]]),))
        after = pushsum_step(state, [WeightMatrix(entries=np.eye(2), kappa=1.0)])
        assert_array_equal(after.phi, state.phi)
        assert_array_equal(after.z[0], state.z[0])

    def test_mass_and_weighted_sum_are_conserved(self):
        rng = np.random.default_rng(8)
        g = gen_erdos_renyi(7, 0.4, rng, max_retries=500)
        base = base_weights(g)
        sched = BlockSchedule(block_count=3)
        state = PushSumState.start(rng.standard_normal((3, 7, 2)))
        sums = state.weighted_sums()
        for t, state in iterate_pushsum(base, sched, state, 200):
            self.assertLessEqual(np.abs(state.mass() - 7).max(), 1e-10)
            for block, total in enumerate(state.weighted_sums()):
                assert_allclose(total, sums[block], rtol=1e-10, atol=1e-12)

    def test_wrong_number_of_matrices(self):
        state = PushSumState.start(np.zeros((2, 2, 1)))
        with self.assertRaises(ValueError):
            pushsum_step(state, [self.half])

    def test_degenerate_weight_detected(self):
        state = PushSumState(phi=np.array([[1.0], [0.0]]), z=(np.zeros((2, 1)),))
        eye = WeightMatrix(entries=np.eye(2), kappa=1.0)
        with self.assertRaises(DegenerateWeight) as ctx:
            pushsum_step(state, [eye])
        self.assertEqual((ctx.exception.agent, ctx.exception.block), (1, 0))


class PerturbedPushSumTests(SimpleTestCase):

    def setUp(self):
        rng = np.random.default_rng(3)
        self.g = gen_erdos_renyi(5, 0.5, rng)
        self.base = base_weights(self.g)
        self.state = PushSumState.start(rng.standard_normal((2, 5, 3)))

    def weights(self, t):
        chosen = selections(BlockSchedule(block_count=2), t, 5)
        return [block_weights(self.base, chosen, block) for block in range(2)]

    def test_zero_perturbation_matches_plain_step(self):
        eps = [np.zeros((5, 3)), np.zeros((5, 3))]
        plain = pushsum_step(self.state, self.weights(0))
        perturbed = perturbed_pushsum_step(self.state, self.weights(0), eps)
        assert_array_equal(plain.phi, perturbed.phi)
        for a, b in zip(plain.z, perturbed.z):
            assert_array_equal(a, b)

    def test_constant_perturbation_shifts_average(self):
        rng = np.random.default_rng(6)
        a = rng.uniform(size=(4, 4))
        a /= a.sum(axis=0)
        weights = [WeightMatrix(entries=a, kappa=float(a.min()))]
        state = PushSumState.start([rng.standard_normal((4, 1))])
        for _ in range(5):
            before = state.weighted_sums()[0] / 4
            state = perturbed_pushsum_step(state, weights, [np.full((4, 1), 0.25)])
            assert_allclose(state.weighted_sums()[0] / 4, before + 0.25, rtol=1e-12, atol=1e-12)

    def test_vanishing_perturbation_reaches_consensus(self):
        base = base_weights(directed_cycle(3))
        state = PushSumState.start([np.array([[1.0], [-4.0], [9.0]])])
        errors = []
        for t in range(200):
            eps = [np.array([[1.0], [-1.0], [0.5]]) * 0.5 ** t]
            state = perturbed_pushsum_step(state, [base], eps)
            errors.append(consensus_error(state).max())
        self.assertLess(errors[100], 1e-6)
        self.assertLess(errors[-1], 1e-10)


class ConsensusTests(SimpleTestCase):

    def test_consensus_error_examples(self):
        equal = PushSumState.start([np.ones((3, 2))])
        assert_array_equal(consensus_error(equal), np.zeros(3))
        pair = PushSumState.start([np.array([[0.0], [2.0]])])
        assert_allclose(consensus_error(pair), [1.0, 1.0])

    def test_round_robin_converges_to_initial_average(self):
        rng = np.random.default_rng(7)
        g = gen_erdos_renyi(5, 0.5, rng)
        sched = BlockSchedule(block_count=3)
        z0 = rng.standard_normal((3, 5, 2))
        for t, state in iterate_pushsum(base_weights(g), sched, PushSumState.start(z0), 1000):
            pass
        self.assertLessEqual(consensus_error(state).max(), 1e-8)
        for block in range(3):
            assert_allclose(state.z[block], np.broadcast_to(z0[block].mean(axis=0), (5, 2)), atol=1e-8)

    def test_weights_stay_positive(self):
        rng = np.random.default_rng(12)
        for trial in range(5):
            n = int(rng.integers(3, 10))
            g = gen_erdos_renyi(n, 0.3, rng, max_retries=1000)
            sched = BlockSchedule(block_count=4, rule='shuffled_cyclic', seed=trial)
            floor = np.inf
            for t, state in iterate_pushsum(base_weights(g), sched, PushSumState.start(np.zeros((4, n, 1))), 300):
                floor = min(floor, state.phi.min())
            self.assertGreater(floor, 1e-6)


class TrackingTests(SimpleTestCase):

    def test_refresh_touches_only_the_selected_block(self):
        tracker = SignalTracker.start(lambda t: [np.array([t]), np.array([10.0 * t])])
        refreshed = tracker.refresh(1, 5)
        assert_array_equal(refreshed.u_hat[0], [0.0])
        assert_array_equal(refreshed.u_hat[1], [50.0])

    def test_constant_signals_reach_the_mean(self):
        rng = np.random.default_rng(21)
        g = gen_erdos_renyi(4, 0.6, rng)
        values = rng.standard_normal((4, 2, 3))
        trackers = [SignalTracker.start(constant_signal(v)) for v in values]
        for t, state, trackers in iterate_tracking(base_weights(g), BlockSchedule(block_count=2), trackers, 1000):
            pass
        for block in range(2):
            assert_allclose(state.z[block], np.broadcast_to(values[:, block].mean(axis=0), (4, 3)), atol=1e-8)

    def test_single_agent_follows_its_stale_signal(self):
        trackers = [SignalTracker.start(lambda t: [np.array([t]), np.array([-t])])]
        state = tracking_state(trackers)
        base = base_weights(Digraph.from_edges(1, []))
        sched = BlockSchedule(block_count=2)
        for t in range(6):
            chosen = selections(sched, t, 1)
            weights = [block_weights(base, chosen, block) for block in range(2)]
            state, trackers = track_average_step(state, trackers, chosen, weights, t)
            for block in range(2):
                assert_allclose(state.z[block][0], trackers[0].u_hat[block])

    def test_drifting_signals_are_tracked(self):
        rng = np.random.default_rng(5)
        g = gen_erdos_renyi(6, 0.5, rng)
        trackers = demo_trackers(rng, 6, 3, 2, SIGNAL_DRIFTING)
        for t, state, trackers in iterate_tracking(base_weights(g), BlockSchedule(block_count=3), trackers, 1000):
            pass
        target = signal_average(trackers, 1000)
        for z, mean in zip(state.z, target):
            self.assertLessEqual(np.abs(z - mean).max(), 1e-4)

    def test_drifting_signal_increments_shrink(self):
        signal = drifting_signal([np.zeros(1)], [np.ones(1)], rate=0.5)
        steps = [signal(t + 1)[0][0] - signal(t)[0][0] for t in range(4)]
        assert_allclose(steps, [0.5, 0.25, 0.125, 0.0625])


class PushSumDemoCommandTests(SimpleTestCase):

    def test_prints_round_and_error(self):
        out = StringIO()
        call_command('pushsum_demo', '--n', '5', '--blocks', '3', '--p', '0.5', '--seed', '7',
                     '--rounds', '400', '--rule', 'round_robin', stdout=out)
        lines = out.getvalue().splitlines()
        self.assertEqual(lines[0], 'round,error')
        self.assertEqual(len(lines), 402)
        last_round, last_error = lines[-1].split(',')
        self.assertEqual(last_round, '400')
        self.assertLess(float(last_error), float(lines[1].split(',')[1]))

    def test_tracking_mode(self):
        out = StringIO()
        call_command('pushsum_demo', '--n', '4', '--blocks', '2', '--p', '0.6', '--seed', '3',
                     '--rounds', '50', '--rule', 'shuffled_cyclic', '--signal', 'constant', stdout=out)
        self.assertEqual(len(out.getvalue().splitlines()), 52)
