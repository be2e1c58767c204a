"""Weighted undirected graphs and their spectral machinery.

A graph is a symmetric nonnegative weight matrix with zero diagonal.
Edges are the unordered pairs with positive weight; for incidence
purposes each edge is oriented from the smaller to the larger index so
the factorization L = B D B^T is reproducible bit-for-bit.

Connectivity is decided by traversal; the spectral criterion
(lambda_2 > 0) is kept as a cross-check because eigenvalue tolerances
get delicate on near-disconnected weighted graphs.
"""

from __future__ import annotations

import heapq
import json
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class WeightedGraph:
    n: int
    weights: np.ndarray

    def __post_init__(self):
        w = np.array(self.weights, dtype=float)
        if w.shape != (self.n, self.n):
            raise ValueError(f"weight matrix must be {self.n}x{self.n}")
        if np.any(w < 0):
            raise ValueError("weights must be nonnegative")
        if not np.allclose(w, w.T, atol=0.0):
            raise ValueError("weight matrix must be symmetric")
        if np.any(np.diag(w) != 0):
            raise ValueError("diagonal weights must be zero")
        w.flags.writeable = False
        object.__setattr__(self, "weights", w)


@dataclass(frozen=True)
class OrientedEdges:
    """Edges (source, sink, weight) with canonical orientation source < sink."""

    pairs: tuple[tuple[int, int, float], ...]

    def __len__(self) -> int:
        return len(self.pairs)

    @property
    def sources(self) -> np.ndarray:
        return np.array([i for i, _, _ in self.pairs], dtype=int)

    @property
    def sinks(self) -> np.ndarray:
        return np.array([j for _, j, _ in self.pairs], dtype=int)

    @property
    def edge_weights(self) -> np.ndarray:
        return np.array([w for _, _, w in self.pairs], dtype=float)


def from_edges(n: int, edges) -> WeightedGraph:
    """Build a graph from (i, j, weight) triples (zero-indexed)."""
    w = np.zeros((n, n))
    for i, j, weight in edges:
        if i == j:
            raise ValueError("self-loops are not allowed")
        w[i, j] = weight
        w[j, i] = weight
    return WeightedGraph(n, w)


def degree(graph: WeightedGraph, i: int) -> float:
    """Weighted degree: row sum of the weight matrix."""
    if not 0 <= i < graph.n:
        raise IndexError(f"node {i} out of range for n={graph.n}")
    return float(graph.weights[i].sum())


def oriented_edges(graph: WeightedGraph) -> OrientedEdges:
    ii, jj = np.nonzero(np.triu(graph.weights, k=1))
    return OrientedEdges(
        tuple((int(i), int(j), float(graph.weights[i, j])) for i, j in zip(ii, jj))
    )


def laplacian(graph: WeightedGraph) -> np.ndarray:
    w = graph.weights
    return np.diag(w.sum(axis=1)) - w


def incidence(graph: WeightedGraph) -> tuple[np.ndarray, np.ndarray]:
    """Incidence matrix B (n x |E|) and diagonal edge-weight matrix D."""
    edges = oriented_edges(graph)
    B = np.zeros((graph.n, len(edges)))
    for e, (i, j, _) in enumerate(edges.pairs):
        B[i, e] = 1.0
        B[j, e] = -1.0
    D = np.diag(edges.edge_weights) if len(edges) else np.zeros((0, 0))
    return B, D


def lambda2(graph: WeightedGraph) -> float:
    """Algebraic connectivity: second-smallest Laplacian eigenvalue."""
    if graph.n < 2:
        raise ValueError("lambda2 requires at least two nodes")
    return float(np.linalg.eigvalsh(laplacian(graph))[1])


def _adjacency_lists(graph: WeightedGraph) -> list[list[int]]:
    out: list[list[int]] = [[] for _ in range(graph.n)]
    for i, j, _ in oriented_edges(graph).pairs:
        out[i].append(j)
        out[j].append(i)
    return out


def is_connected(graph: WeightedGraph) -> bool:
    if graph.n <= 1:
        return True
    adj = _adjacency_lists(graph)
    seen = [False] * graph.n
    stack = [0]
    seen[0] = True
    count = 1
    while stack:
        u = stack.pop()
        for v in adj[u]:
            if not seen[v]:
                seen[v] = True
                count += 1
                stack.append(v)
    return count == graph.n


def is_tree(graph: WeightedGraph) -> bool:
    return is_connected(graph) and len(oriented_edges(graph)) == graph.n - 1


def leaves(graph: WeightedGraph) -> list[int]:
    """Nodes incident to exactly one edge (edge count, not weight)."""
    adj = _adjacency_lists(graph)
    return [i for i, nb in enumerate(adj) if len(nb) == 1]


# ---------------------------------------------------------------------------
# generators


def line(n: int) -> WeightedGraph:
    return from_edges(n, [(i, i + 1, 1.0) for i in range(n - 1)])


def star(n: int) -> WeightedGraph:
    """Hub node 0 connected to the n-1 spokes."""
    return from_edges(n, [(0, i, 1.0) for i in range(1, n)])


def cycle(n: int) -> WeightedGraph:
    if n < 3:
        raise ValueError("a cycle needs at least three nodes")
    return from_edges(n, [(i, (i + 1) % n, 1.0) for i in range(n)])


def complete(n: int) -> WeightedGraph:
    return from_edges(n, [(i, j, 1.0) for i in range(n) for j in range(i + 1, n)])


def random_tree(n: int, rng: np.random.Generator) -> WeightedGraph:
    """Uniform over labeled trees via a random Pruefer sequence."""
    if n == 1:
        return WeightedGraph(1, np.zeros((1, 1)))
    if n == 2:
        return from_edges(2, [(0, 1, 1.0)])
    seq = rng.integers(0, n, size=n - 2)
    deg = np.ones(n, dtype=int)
    for s in seq:
        deg[s] += 1
    edges = []
    heap = [i for i in range(n) if deg[i] == 1]
    heapq.heapify(heap)
    for s in seq:
        leaf = heapq.heappop(heap)
        edges.append((min(leaf, int(s)), max(leaf, int(s)), 1.0))
        deg[s] -= 1
        if deg[s] == 1:
            heapq.heappush(heap, int(s))
    u, v = heapq.heappop(heap), heapq.heappop(heap)
    edges.append((min(u, v), max(u, v), 1.0))
    return from_edges(n, edges)


def erdos_renyi(n: int, p: float, rng: np.random.Generator) -> WeightedGraph:
    if not 0.0 <= p <= 1.0:
        raise ValueError("edge probability must lie in [0, 1]")
    edges = [
        (i, j, 1.0)
        for i in range(n)
        for j in range(i + 1, n)
        if rng.uniform() < p
    ]
    return from_edges(n, edges)


def randomize_weights(
    graph: WeightedGraph, rng: np.random.Generator, low: float = 0.5, high: float = 1.5
) -> WeightedGraph:
    """Replace unit weights with uniform draws, keeping the edge set."""
    pairs = [(i, j, float(rng.uniform(low, high))) for i, j, _ in oriented_edges(graph).pairs]
    return from_edges(graph.n, pairs)


# ---------------------------------------------------------------------------
# JSON interchange: {"n": ..., "edges": [[i, j, weight], ...]}, zero-indexed


def graph_to_dict(graph: WeightedGraph) -> dict:
    return {
        "n": graph.n,
        "edges": [[i, j, w] for i, j, w in oriented_edges(graph).pairs],
    }


def graph_from_dict(data: dict) -> WeightedGraph:
    return from_edges(int(data["n"]), [(int(i), int(j), float(w)) for i, j, w in data["edges"]])


def load_graph(path) -> WeightedGraph:
    with open(path, "r", encoding="utf-8") as fh:
        return graph_from_dict(json.load(fh))


def save_graph(graph: WeightedGraph, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(graph_to_dict(graph), fh, indent=2)
