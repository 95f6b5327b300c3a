"""Structural-entropy partitions of the broker's known graph.

Entropy is measured in bits.  For a cluster t with degree volume ``d_t``
and ``g_t`` cut edges, ``d_t - g_t`` is twice its internal edge count.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np


@dataclass(frozen=True, eq=False)
class Partition:
    cluster_of: np.ndarray
    T: int
    d: np.ndarray  # degree volume per cluster
    g: np.ndarray  # cut edges per cluster
    total_edges: int

    @classmethod
    def from_assignment(cls, graph, cluster_of, T=None) -> "Partition":
        cluster_of = np.asarray(cluster_of, dtype=np.int64)
        if len(cluster_of) != graph.n:
            raise ValueError("assignment length != node count")
        if T is None:
            T = int(cluster_of.max()) + 1
        deg = graph.degrees()
        d = np.bincount(cluster_of, weights=deg, minlength=T).astype(np.int64)
        cu, cv = cluster_of[graph.edges[:, 0]], cluster_of[graph.edges[:, 1]]
        cut = cu != cv
        g = (np.bincount(cu[cut], minlength=T) + np.bincount(cv[cut], minlength=T)).astype(np.int64)
        return cls(cluster_of, int(T), d, g, graph.edge_count)

    def members(self, t: int) -> np.ndarray:
        return np.flatnonzero(self.cluster_of == t)

    def sizes(self) -> np.ndarray:
        return np.bincount(self.cluster_of, minlength=self.T)

    def relabel(self) -> np.ndarray:
        """Assignment with clusters renumbered by first appearance."""
        _, first = np.unique(self.cluster_of, return_index=True)
        order = np.argsort(first)
        remap = np.empty(self.T, dtype=np.int64)
        remap[np.unique(self.cluster_of)[order]] = np.arange(len(order))
        return remap[self.cluster_of]


def _term(inner, vol, two_m):
    """``inner * log2(vol / 2|E|)`` with the ``vol == 0`` term taken as 0."""
    inner = np.asarray(inner, dtype=float)
    vol = np.asarray(vol, dtype=float)
    safe = np.where(vol > 0, vol, 1.0)
    return np.where(vol > 0, inner * np.log2(safe / two_m), 0.0)


def entropy_from_volumes(d, g, total_edges) -> float:
    if total_edges <= 0:
        raise ValueError("structural entropy is undefined for a graph with no edges")
    two_m = 2.0 * total_edges
    return float(-np.sum(_term(np.asarray(d) - np.asarray(g), d, two_m)) / two_m)


def structural_entropy(graph, partition: Partition) -> float:
    """Two-level structural entropy of ``graph`` relative to ``partition``."""
    if graph.edge_count == 0:
        raise ValueError("structural entropy is undefined for a graph with no edges")
    if len(partition.cluster_of) != graph.n:
        raise ValueError("partition does not cover the graph")
    return entropy_from_volumes(partition.d, partition.g, graph.edge_count)


def _csr(graph):
    a = graph.adjacency()
    return a.indptr, a.indices


def _local_moves(indptr, indices, deg, cluster_of, T, two_m, rng, max_sweeps):
    """Greedy single-node moves; returns sweeps used.

    ``inner`` tracks ``d_t - g_t`` so each move is O(deg + T).  Moves that
    would empty a cluster are never taken.
    """
    n = len(deg)
    vol = np.bincount(cluster_of, weights=deg, minlength=T).astype(float)
    inner = np.zeros(T)
    for v in range(n):
        nb = indices[indptr[v]:indptr[v + 1]]
        inner[cluster_of[v]] += np.count_nonzero(cluster_of[nb] == cluster_of[v])
    size = np.bincount(cluster_of, minlength=T)
    base_terms = _term(inner, vol, two_m)

    sweeps = 0
    for _ in range(max_sweeps):
        sweeps += 1
        moved = False
        for v in rng.permutation(n):
            dv = deg[v]
            a = cluster_of[v]
            if dv == 0 or size[a] == 1:
                continue
            k = np.bincount(cluster_of[indices[indptr[v]:indptr[v + 1]]], minlength=T)
            leave = _term(inner[a] - 2 * k[a], vol[a] - dv, two_m) - base_terms[a]
            join = _term(inner + 2 * k, vol + dv, two_m) - base_terms
            # entropy = -sum(terms) / 2|E|, so the gain is minus the term change
            gain = -(leave + join) / two_m
            gain[a] = 0.0
            b = int(np.argmax(gain))
            if gain[b] <= 1e-12:
                continue
            inner[a] -= 2 * k[a]
            vol[a] -= dv
            inner[b] += 2 * k[b]
            vol[b] += dv
            size[a] -= 1
            size[b] += 1
            cluster_of[v] = b
            base_terms[[a, b]] = _term(inner[[a, b]], vol[[a, b]], two_m)
            moved = True
        if not moved:
            break
    return sweeps


def greedy_entropy_clustering(graph, target_clusters, seed=0, max_sweeps=50, restarts=10) -> Partition:
    """Local-move structural-entropy maximisation with seeded restarts.

    Each restart starts from a random balanced assignment.  The best
    result is picked by entropy, earliest restart on ties.
    """
    T = int(target_clusters)
    if T < 1:
        raise ValueError("target_clusters must be >= 1")
    if T > graph.n:
        raise ValueError(f"cannot split {graph.n} nodes into {T} clusters")
    if T == 1:
        return Partition.from_assignment(graph, np.zeros(graph.n, dtype=np.int64), 1)
    if graph.edge_count == 0:
        return Partition.from_assignment(graph, initial_assignment(graph.n, T, seed), T)
    indptr, indices = _csr(graph)
    deg = graph.degrees().astype(float)
    two_m = 2.0 * graph.edge_count
    best, best_h = None, -math.inf
    for r in range(max(1, restarts)):
        rng = np.random.default_rng([seed, r])
        cluster_of = _balanced(graph.n, T, rng)
        _local_moves(indptr, indices, deg, cluster_of, T, two_m, rng, max_sweeps)
        part = Partition.from_assignment(graph, cluster_of, T)
        h = structural_entropy(graph, part)
        if h > best_h + 1e-12:
            best, best_h = part, h
    return best


def _balanced(n, T, rng):
    cluster_of = np.empty(n, dtype=np.int64)
    cluster_of[rng.permutation(n)] = np.arange(n) % T
    return cluster_of


def initial_assignment(n, T, seed, restart=0) -> np.ndarray:
    """The balanced random start used by restart ``restart``."""
    return _balanced(n, T, np.random.default_rng([seed, restart]))


def choose_cluster_count(graph, max_clusters, seed=0, **kwargs) -> Partition:
    """Sweep T over ``2..max_clusters`` and keep the highest-entropy result."""
    best, best_h = None, -math.inf
    for T in range(2, max(2, max_clusters) + 1):
        part = greedy_entropy_clustering(graph, T, seed=seed, **kwargs)
        h = structural_entropy(graph, part)
        if h > best_h + 1e-12:
            best, best_h = part, h
    return best


def write_partition(partition: Partition, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for v, t in enumerate(partition.cluster_of):
            fh.write(f"{v}\t{t}\n")


def read_partition(graph, path) -> Partition:
    pairs = np.loadtxt(Path(path), dtype=np.int64, ndmin=2)
    cluster_of = np.full(graph.n, -1, dtype=np.int64)
    cluster_of[pairs[:, 0]] = pairs[:, 1]
    if np.any(cluster_of < 0):
        raise ValueError(f"{path}: partition does not cover every node")
    return Partition.from_assignment(graph, cluster_of)
