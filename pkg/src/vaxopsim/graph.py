"""Small-world contact networks and betweenness centrality.

Graphs are stored in CSR form (indptr/indices) with sorted neighbor lists,
shared read-only between the opinion and disease stages.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .errors import ConfigurationError


@dataclass(frozen=True)
class Graph:
    """Static undirected contact network.

    indices[indptr[i]:indptr[i+1]] is the sorted neighbor list of node i.
    Invariants: symmetric, no self-loops, no duplicate edges.
    """

    node_count: int
    indptr: np.ndarray
    indices: np.ndarray
    edge_count: int

    def neighbors(self, i: int) -> np.ndarray:
        return self.indices[self.indptr[i] : self.indptr[i + 1]]

    @property
    def degrees(self) -> np.ndarray:
        return np.diff(self.indptr)

    @classmethod
    def from_adjacency(cls, adjacency: list[set[int]]) -> "Graph":
        n = len(adjacency)
        degrees = np.fromiter((len(a) for a in adjacency), dtype=np.int64, count=n)
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(degrees, out=indptr[1:])
        indices = np.empty(indptr[-1], dtype=np.int32)
        for i, nbrs in enumerate(adjacency):
            indices[indptr[i] : indptr[i + 1]] = sorted(nbrs)
        return cls(
            node_count=n,
            indptr=indptr,
            indices=indices,
            edge_count=int(indptr[-1]) // 2,
        )

    @classmethod
    def from_edges(cls, n: int, edges) -> "Graph":
        adjacency: list[set[int]] = [set() for _ in range(n)]
        for i, j in edges:
            if i == j:
                raise ValueError(f"self-loop at node {i}")
            adjacency[i].add(j)
            adjacency[j].add(i)
        return cls.from_adjacency(adjacency)

    def to_edgelist(self, path) -> None:
        """Dump as text, one 'i j' pair per line (each undirected edge once)."""
        with open(path, "w") as fh:
            for i in range(self.node_count):
                for j in self.neighbors(i):
                    if i < j:
                        fh.write(f"{i} {j}\n")


def generate_watts_strogatz(
    n: int, mean_degree: int, rewire_prob: float, rng: np.random.Generator
) -> Graph:
    """Generate a Watts-Strogatz small-world graph.

    Original formulation: start from a ring lattice where each node connects
    to mean_degree/2 nearest neighbors on each side, then visit each clockwise
    lattice edge lane by lane and, with probability rewire_prob, replace its
    far endpoint with a uniform random node, rejecting self-loops and existing
    edges. Edge count n*mean_degree/2 is preserved exactly.

    The Bernoulli rewire decision is drawn for every lattice edge even when
    rewire_prob is 0, so a given stream yields comparable graphs across
    rewire_prob sweeps.
    """
    if n <= 0:
        raise ConfigurationError(f"node count must be positive, got {n}")
    if mean_degree <= 0 or mean_degree % 2 != 0:
        raise ConfigurationError(f"mean degree must be a positive even integer, got {mean_degree}")
    if mean_degree >= n:
        raise ConfigurationError(f"mean degree {mean_degree} must be smaller than node count {n}")
    if not 0.0 <= rewire_prob <= 1.0:
        raise ConfigurationError(f"rewire probability must lie in [0, 1], got {rewire_prob}")

    half_k = mean_degree // 2
    adjacency: list[set[int]] = [set() for _ in range(n)]
    for i in range(n):
        for j in range(1, half_k + 1):
            adjacency[i].add((i + j) % n)
            adjacency[(i + j) % n].add(i)

    for lane in range(1, half_k + 1):
        for i in range(n):
            u = rng.random()  # drawn unconditionally, see docstring
            if u >= rewire_prob:
                continue
            if len(adjacency[i]) >= n - 1:
                continue  # no valid target exists, leave the edge unrewired
            old = (i + lane) % n
            while True:
                target = int(rng.integers(n))
                if target != i and target not in adjacency[i]:
                    break
            adjacency[i].discard(old)
            adjacency[old].discard(i)
            adjacency[i].add(target)
            adjacency[target].add(i)

    graph = Graph.from_adjacency(adjacency)
    expected = n * mean_degree // 2
    assert graph.edge_count == expected, (graph.edge_count, expected)
    return graph


@njit(cache=True)
def _brandes_kernel(indptr, indices, n):  # pragma: no cover (exercised via betweenness)
    bc = np.zeros(n, dtype=np.float64)
    dist = np.empty(n, dtype=np.int32)
    sigma = np.empty(n, dtype=np.float64)
    delta = np.empty(n, dtype=np.float64)
    order = np.empty(n, dtype=np.int32)
    for s in range(n):
        for i in range(n):
            dist[i] = -1
            sigma[i] = 0.0
            delta[i] = 0.0
        dist[s] = 0
        sigma[s] = 1.0
        head = 0
        tail = 0
        order[tail] = s
        tail += 1
        while head < tail:
            v = order[head]
            head += 1
            dv = dist[v]
            for e in range(indptr[v], indptr[v + 1]):
                w = indices[e]
                if dist[w] < 0:
                    dist[w] = dv + 1
                    order[tail] = w
                    tail += 1
                if dist[w] == dv + 1:
                    sigma[w] += sigma[v]
        # Dependency accumulation in reverse BFS order; a neighbor v of w is a
        # predecessor on a shortest path exactly when dist[v] == dist[w] - 1.
        for idx in range(tail - 1, 0, -1):
            w = order[idx]
            dw = dist[w]
            coeff = (1.0 + delta[w]) / sigma[w]
            for e in range(indptr[w], indptr[w + 1]):
                v = indices[e]
                if dist[v] == dw - 1:
                    delta[v] += sigma[v] * coeff
            bc[w] += delta[w]
    return bc


def betweenness(graph: Graph) -> np.ndarray:
    """Unnormalized betweenness counts over unordered node pairs.

    Brandes single-source accumulation; the raw double-counted total is
    halved so each undirected pair contributes once. Disconnected pairs
    contribute nothing. Deterministic for a given graph.
    """
    raw = _brandes_kernel(graph.indptr, graph.indices, graph.node_count)
    return raw * 0.5
