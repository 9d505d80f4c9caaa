"""
Directed communication graphs.

A ``Digraph`` stores edges as ordered pairs ``(j, i)``: agent ``j`` can send
to agent ``i``. Agents are indexed ``0..N-1`` in memory and ``1..N`` in the
edge-list text format. Every graph carries all self-loops.
"""
import logging
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import networkx as nx
import numpy as np

from .exceptions import RetriesExhausted, EdgeListError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Digraph:
    node_count: int
    edges: frozenset

    def __post_init__(self):
        if self.node_count < 1:
            raise ValueError('a digraph needs at least one node')
        for j, i in self.edges:
            if not (0 <= j < self.node_count and 0 <= i < self.node_count):
                raise ValueError(f'edge ({j}, {i}) leaves the node range')
        missing = [i for i in range(self.node_count) if (i, i) not in self.edges]
        if missing:
            raise ValueError(f'self-loops missing for nodes {missing}')

    @classmethod
    def from_edges(cls, node_count, edges):
        """Build a digraph from ``(j, i)`` pairs, adding every self-loop."""
        pairs = {(int(j), int(i)) for j, i in edges}
        pairs.update((i, i) for i in range(node_count))
        return cls(node_count=node_count, edges=frozenset(pairs))

    def in_neighbors(self, i):
        return tuple(sorted(j for j, k in self.edges if k == i))

    def out_neighbors(self, j):
        return tuple(sorted(i for k, i in self.edges if k == j))

    @cached_property
    def out_degrees(self):
        """Out-degree of every node, self-loop included."""
        degrees = np.zeros(self.node_count, dtype=np.int64)
        for j, _ in self.edges:
            degrees[j] += 1
        degrees.setflags(write=False)
        return degrees

    @cached_property
    def adjacency(self):
        """0/1 matrix with ``adjacency[i, j] == 1`` iff ``(j, i)`` is an edge."""
        adj = np.zeros((self.node_count, self.node_count), dtype=np.int8)
        for j, i in self.edges:
            adj[i, j] = 1
        adj.setflags(write=False)
        return adj

    def is_symmetric(self):
        return all((i, j) in self.edges for j, i in self.edges)

    def to_networkx(self):
        graph = nx.DiGraph()
        graph.add_nodes_from(range(self.node_count))
        graph.add_edges_from(self.edges)
        return graph

    @cached_property
    def strongly_connected(self):
        return is_strongly_connected(self)


def is_strongly_connected(g):
    """True iff every node reaches every other node."""
    return nx.number_strongly_connected_components(g.to_networkx()) == 1


def gen_erdos_renyi(n, p, rng, max_retries=100):
    """
    Sample a symmetric Erdos-Renyi digraph with self-loops.

    Each unordered pair is kept with probability ``p`` and becomes two
    directed edges. Samples are redrawn until the graph is strongly
    connected.
    """
    if n < 1:
        raise ValueError('n must be at least 1')
    if not 0 < p <= 1:
        raise ValueError('p must lie in (0, 1]')
    if max_retries < 1:
        raise ValueError('max_retries must be at least 1')

    upper = np.triu_indices(n, k=1)
    for attempt in range(1, max_retries + 1):
        keep = rng.random(len(upper[0])) < p
        rows, cols = upper[0][keep], upper[1][keep]
        edges = list(zip(rows, cols)) + list(zip(cols, rows))
        g = Digraph.from_edges(n, edges)
        if g.strongly_connected:
            logger.debug('ER graph n=%d p=%s accepted on attempt %d', n, p, attempt)
            return g
        logger.debug('ER graph n=%d p=%s rejected on attempt %d', n, p, attempt)
    raise RetriesExhausted(n, p, max_retries)


def induced_subgraph(g, selections, block):
    """Subgraph of edges whose sender selected ``block`` this round, plus self-loops."""
    selections = np.asarray(selections)
    kept = [(j, i) for j, i in g.edges if selections[j] == block]
    return Digraph.from_edges(g.node_count, kept)


def verify_t_strong_connectivity(g, selections, block):
    """
    Check that the union of the block-induced subgraphs over a window is
    strongly connected.

    ``selections`` has one row per round of the window and one column per
    agent.
    """
    window = np.atleast_2d(np.asarray(selections))
    if window.shape[0] < 1:
        raise ValueError('the window must hold at least one round')
    senders = (window == block).any(axis=0)
    union = [(j, i) for j, i in g.edges if senders[j]]
    return is_strongly_connected(Digraph.from_edges(g.node_count, union))


def algebraic_connectivity(g):
    """Second-smallest Laplacian eigenvalue of the symmetrized graph, 0 for one node."""
    if g.node_count == 1:
        return 0.0
    undirected = nx.Graph()
    undirected.add_nodes_from(range(g.node_count))
    undirected.add_edges_from((j, i) for j, i in g.edges if j != i)
    spectrum = np.sort(nx.laplacian_spectrum(undirected))
    return float(spectrum[1])


# ─── Edge-list text format ───────────────────────────────────────────────────
# First line: N. Then one "j i" line per edge, 1-indexed, self-loops included.

def format_edge_list(g):
    lines = [str(g.node_count)]
    lines.extend(f'{j + 1} {i + 1}' for j, i in sorted(g.edges))
    return '\n'.join(lines) + '\n'


def write_edge_list(g, path):
    Path(path).write_text(format_edge_list(g), encoding='utf-8')


def parse_edge_list(text):
    rows = [line.split() for line in text.splitlines() if line.strip()]
    if not rows:
        raise EdgeListError('edge list is empty')
    try:
        (n,) = rows[0]
        n = int(n)
        edges = []
        for number, row in enumerate(rows[1:], start=2):
            if len(row) != 2:
                raise EdgeListError(f'line {number}: expected "j i", got {" ".join(row)!r}')
            j, i = int(row[0]) - 1, int(row[1]) - 1
            edges.append((j, i))
        return Digraph.from_edges(n, edges)
    except EdgeListError:
        raise
    except ValueError as exc:
        raise EdgeListError(str(exc)) from exc


def read_edge_list(path):
    return parse_edge_list(Path(path).read_text(encoding='utf-8'))
