import numpy as np
from django.test import SimpleTestCase
from numpy.testing import assert_array_equal

from graphs.topology import gen_erdos_renyi, verify_t_strong_connectivity
from .rules import (
    BlockSchedule, ROUND_ROBIN, SHUFFLED_CYCLIC, select_block, selections,
    selection_prefix, verify_essentially_cyclic,
)


class RoundRobinTests(SimpleTestCase):

    def test_single_block(self):
        s = BlockSchedule(block_count=1)
        self.assertEqual({select_block(s, 4, t) for t in range(20)}, {0})

    def test_cycles_through_blocks(self):
        s = BlockSchedule(block_count=3, offsets=(0,))
        self.assertEqual([select_block(s, 0, t) for t in range(4)], [0, 1, 2, 0])

    def test_default_offsets_spread_agents(self):
        s = BlockSchedule(block_count=3)
        assert_array_equal(selections(s, 0, 5), [0, 1, 2, 0, 1])
        self.assertEqual(s.period_bound, 3)

    def test_negative_round_rejected(self):
        with self.assertRaises(ValueError):
            select_block(BlockSchedule(block_count=2), 0, -1)

    def test_unknown_rule_rejected(self):
        with self.assertRaises(ValueError):
            BlockSchedule(block_count=2, rule='greedy')


class ShuffledCyclicTests(SimpleTestCase):

    def test_windows_of_length_five_cover_three_blocks(self):
        s = BlockSchedule(block_count=3, rule=SHUFFLED_CYCLIC, seed=42)
        for agent in range(4):
            prefix = selection_prefix(s, agent, 60)
            for start in range(len(prefix) - 4):
                self.assertEqual(set(prefix[start:start + 5]), {0, 1, 2})

    def test_deterministic_in_seed(self):
        first = BlockSchedule(block_count=4, rule=SHUFFLED_CYCLIC, seed=5)
        second = BlockSchedule(block_count=4, rule=SHUFFLED_CYCLIC, seed=5)
        self.assertEqual(selection_prefix(first, 2, 40), selection_prefix(second, 2, 40))

    def test_each_epoch_is_a_permutation(self):
        s = BlockSchedule(block_count=4, rule=SHUFFLED_CYCLIC, seed=1)
        prefix = selection_prefix(s, 0, 40)
        for epoch in range(10):
            self.assertEqual(sorted(prefix[4 * epoch:4 * epoch + 4]), [0, 1, 2, 3])

    def test_period_bound(self):
        self.assertEqual(BlockSchedule(block_count=4, rule=SHUFFLED_CYCLIC).period_bound, 7)
        self.assertEqual(BlockSchedule(block_count=1, rule=SHUFFLED_CYCLIC).period_bound, 1)


class VerifyEssentiallyCyclicTests(SimpleTestCase):

    def test_plain_cycle(self):
        self.assertTrue(verify_essentially_cyclic([0, 1, 2, 0, 1, 2], 3, 3))

    def test_repeated_block_breaks_the_window(self):
        self.assertFalse(verify_essentially_cyclic([0, 0, 1, 2], 3, 3))

    def test_shuffled_prefix(self):
        for blocks in (1, 2, 3, 5):
            s = BlockSchedule(block_count=blocks, rule=SHUFFLED_CYCLIC, seed=blocks)
            prefix = selection_prefix(s, 3, 100)
            self.assertTrue(verify_essentially_cyclic(prefix, 2 * blocks - 1, blocks))

    def test_short_prefix_rejected(self):
        with self.assertRaises(ValueError):
            verify_essentially_cyclic([0, 1], 3, 3)


class UnionConnectivityPropertyTests(SimpleTestCase):
    """Every block's union graph over a max-period window is strongly connected."""

    def test_random_schedules_on_random_graphs(self):
        rng = np.random.default_rng(2024)
        for trial in range(100):
            n = int(rng.integers(2, 9))
            blocks = int(rng.integers(1, 5))
            g = gen_erdos_renyi(n, float(rng.uniform(0.2, 0.8)), rng, max_retries=1000)
            if trial % 2:
                s = BlockSchedule(block_count=blocks, rule=SHUFFLED_CYCLIC, seed=trial)
            else:
                offsets = tuple(int(o) for o in rng.integers(0, blocks, size=n))
                s = BlockSchedule(block_count=blocks, rule=ROUND_ROBIN, offsets=offsets)
            window_length = s.period_bound
            for start in range(0, 12):
                window = np.array([selections(s, start + k, n) for k in range(window_length)])
                for block in range(blocks):
                    with self.subTest(trial=trial, start=start, block=block):
                        self.assertTrue(verify_t_strong_connectivity(g, window, block))
