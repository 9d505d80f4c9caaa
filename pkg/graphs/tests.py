import tempfile
from io import StringIO
from pathlib import Path

import numpy as np
from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase
from numpy.testing import assert_allclose, assert_array_equal

from harness.config import GraphConfig, RunConfig, rng_streams
from harness.experiment import build_setup
from .exceptions import RetriesExhausted, EdgeListError
from .topology import (
    Digraph, gen_erdos_renyi, is_strongly_connected, verify_t_strong_connectivity,
    induced_subgraph, algebraic_connectivity, format_edge_list, parse_edge_list,
    write_edge_list, read_edge_list,
)
from .weights import WeightMatrix, base_weights, metropolis_weights


def directed_cycle(n):
    return Digraph.from_edges(n, [(k, (k + 1) % n) for k in range(n)])


class DigraphTests(SimpleTestCase):

    def test_from_edges_adds_self_loops(self):
        g = Digraph.from_edges(3, [(0, 1)])
        self.assertEqual(g.edges, frozenset({(0, 0), (1, 1), (2, 2), (0, 1)}))

    def test_missing_self_loop_is_rejected(self):
        with self.assertRaises(ValueError):
            Digraph(node_count=2, edges=frozenset({(0, 0), (0, 1)}))

    def test_out_of_range_edge_is_rejected(self):
        with self.assertRaises(ValueError):
            Digraph.from_edges(2, [(0, 5)])

    def test_neighbour_sets(self):
        g = directed_cycle(3)
        self.assertEqual(g.in_neighbors(1), (0, 1))
        self.assertEqual(g.out_neighbors(1), (1, 2))
        assert_array_equal(g.out_degrees, [2, 2, 2])


class StrongConnectivityTests(SimpleTestCase):

    def test_single_node(self):
        self.assertTrue(is_strongly_connected(Digraph.from_edges(1, [])))

    def test_one_way_pair(self):
        self.assertFalse(is_strongly_connected(Digraph.from_edges(2, [(0, 1)])))

    def test_directed_cycle(self):
        self.assertTrue(is_strongly_connected(directed_cycle(3)))


class ErdosRenyiTests(SimpleTestCase):

    def test_single_node(self):
        g = gen_erdos_renyi(1, 0.5, np.random.default_rng(0))
        self.assertEqual(g.edges, frozenset({(0, 0)}))
        self.assertTrue(g.strongly_connected)

    def test_p_one_gives_complete_graph(self):
        g = gen_erdos_renyi(2, 1.0, np.random.default_rng(0))
        self.assertEqual(g.edges, frozenset({(0, 0), (1, 1), (0, 1), (1, 0)}))

    def test_sample_is_strongly_connected_and_symmetric(self):
        g = gen_erdos_renyi(5, 0.5, np.random.default_rng(7))
        self.assertTrue(is_strongly_connected(g))
        self.assertTrue(g.is_symmetric())

    def test_same_seed_same_edges(self):
        first = gen_erdos_renyi(8, 0.4, np.random.default_rng(11))
        second = gen_erdos_renyi(8, 0.4, np.random.default_rng(11))
        self.assertEqual(first.edges, second.edges)

    def test_retries_exhausted(self):
        # p this small never draws an edge.
        with self.assertRaises(RetriesExhausted) as ctx:
            gen_erdos_renyi(30, 1e-9, np.random.default_rng(0), max_retries=3)
        self.assertEqual(ctx.exception.attempts, 3)

    def test_bad_parameters(self):
        with self.assertRaises(ValueError):
            gen_erdos_renyi(0, 0.5, np.random.default_rng(0))
        with self.assertRaises(ValueError):
            gen_erdos_renyi(3, 0.0, np.random.default_rng(0))


class BaseWeightsTests(SimpleTestCase):

    def test_two_node_complete(self):
        w = base_weights(Digraph.from_edges(2, [(0, 1), (1, 0)]))
        assert_allclose(w.entries, np.full((2, 2), 0.5))
        self.assertEqual(w.kappa, 0.5)

    def test_single_node(self):
        assert_array_equal(base_weights(Digraph.from_edges(1, [])).entries, [[1.0]])

    def test_cycle_columns(self):
        w = base_weights(directed_cycle(3))
        for j in range(3):
            column = w.entries[:, j]
            assert_allclose(np.sort(column[column > 0]), [0.5, 0.5])

    def test_random_graphs_are_column_stochastic_and_matched(self):
        rng = np.random.default_rng(3)
        for n in (2, 5, 9, 14):
            g = gen_erdos_renyi(n, 0.3, rng, max_retries=500)
            w = base_weights(g)
            self.assertTrue(w.is_column_stochastic())
            self.assertTrue(w.matches(g))
            self.assertEqual(w.support.edges, g.edges)
            self.assertGreaterEqual(w.entries[w.entries > 0].min(), w.kappa)

    def test_entries_are_read_only(self):
        w = base_weights(directed_cycle(3))
        with self.assertRaises(ValueError):
            w.entries[0, 0] = 3.0

    def test_negative_weight_rejected(self):
        with self.assertRaises(ValueError):
            WeightMatrix(entries=np.array([[1.5, 0.0], [-0.5, 1.0]]), kappa=0.5)


class MetropolisWeightsTests(SimpleTestCase):

    def test_doubly_stochastic_and_symmetric(self):
        g = gen_erdos_renyi(7, 0.5, np.random.default_rng(5))
        w = metropolis_weights(g)
        self.assertTrue(w.is_column_stochastic())
        self.assertTrue(w.is_row_stochastic())
        assert_allclose(w.entries, w.entries.T)
        self.assertTrue(w.matches(g))

    def test_rejects_directed_graph(self):
        with self.assertRaises(ValueError):
            metropolis_weights(directed_cycle(3))


class TStrongConnectivityTests(SimpleTestCase):

    def setUp(self):
        self.g = gen_erdos_renyi(6, 0.5, np.random.default_rng(2))

    def test_everyone_selects_the_block(self):
        window = np.zeros((1, 6), dtype=int)
        self.assertTrue(verify_t_strong_connectivity(self.g, window, 0))

    def test_nobody_selects_the_block(self):
        window = np.ones((4, 6), dtype=int)
        self.assertFalse(verify_t_strong_connectivity(self.g, window, 0))

    def test_round_robin_window_of_length_b(self):
        blocks = 3
        offsets = np.arange(6) % blocks
        window = np.array([(t + offsets) % blocks for t in range(blocks)])
        for block in range(blocks):
            self.assertTrue(verify_t_strong_connectivity(self.g, window, block))

    def test_induced_subgraph_keeps_only_senders(self):
        g = directed_cycle(3)
        sub = induced_subgraph(g, [0, 1, 1], 0)
        self.assertEqual(sub.edges, frozenset({(0, 0), (1, 1), (2, 2), (0, 1)}))


class AlgebraicConnectivityTests(SimpleTestCase):

    def test_complete_graph(self):
        g = gen_erdos_renyi(4, 1.0, np.random.default_rng(0))
        self.assertAlmostEqual(algebraic_connectivity(g), 4.0)

    def test_path_of_three(self):
        g = Digraph.from_edges(3, [(0, 1), (1, 0), (1, 2), (2, 1)])
        self.assertAlmostEqual(algebraic_connectivity(g), 1.0)

    def test_single_node(self):
        self.assertEqual(algebraic_connectivity(Digraph.from_edges(1, [])), 0.0)


class EdgeListTests(SimpleTestCase):

    def test_format_is_one_indexed(self):
        text = format_edge_list(Digraph.from_edges(2, [(0, 1)]))
        self.assertEqual(text, '2\n1 1\n1 2\n2 2\n')

    def test_file_round_trip(self):
        g = gen_erdos_renyi(6, 0.5, np.random.default_rng(9))
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / 'graph.txt'
            write_edge_list(g, path)
            self.assertEqual(read_edge_list(path), g)

    def test_malformed_lines(self):
        for text in ('', '2\n1\n', '2\n1 x\n', '2\n1 3\n', 'two\n'):
            with self.subTest(text=text):
                with self.assertRaises(EdgeListError):
                    parse_edge_list(text)


class GenGraphCommandTests(SimpleTestCase):

    def test_prints_edge_list(self):
        out = StringIO()
        call_command('gen_graph', '--n', '5', '--p', '0.5', '--seed', '7', stdout=out)
        g = parse_edge_list(out.getvalue())
        self.assertEqual(g, gen_erdos_renyi(5, 0.5, rng_streams(7)['graph']))

    def test_matches_the_graph_of_a_run_with_the_same_seed(self):
        cfg = RunConfig(seed=3, graph=GraphConfig(n=8, p=0.4))
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / 'graph.txt'
            call_command('gen_graph', '--n', '8', '--p', '0.4', '--seed', '3', '--out', str(path), stdout=StringIO())
            self.assertEqual(read_edge_list(path), build_setup(cfg).graph)

    def test_bad_probability_is_a_command_error(self):
        with self.assertRaises(CommandError):
            call_command('gen_graph', '--n', '5', '--p', '1.5', '--seed', '7')
