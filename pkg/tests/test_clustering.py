import itertools

import numpy as np
import pytest

from simt.clustering import (Partition, choose_cluster_count, greedy_entropy_clustering,
                             initial_assignment, read_partition, structural_entropy,
                             write_partition)
from simt.graph import VisibleGraph, canonical_edges


def vg(n, pairs):
    return VisibleGraph(n, canonical_edges(pairs, n))


CYCLE4 = vg(4, [(0, 1), (1, 2), (2, 3), (3, 0)])


def random_graph(rng, n, p):
    iu, ju = np.triu_indices(n, k=1)
    hit = rng.random(len(iu)) < p
    return vg(n, np.column_stack([iu[hit], ju[hit]]))


def brute_volumes(graph, cluster_of, T):
    d, g = np.zeros(T, int), np.zeros(T, int)
    for u, v in graph.edges.tolist():
        d[cluster_of[u]] += 1
        d[cluster_of[v]] += 1
        if cluster_of[u] != cluster_of[v]:
            g[cluster_of[u]] += 1
            g[cluster_of[v]] += 1
    return d, g


def test_entropy_worked_values():
    assert structural_entropy(vg(3, [(0, 1), (1, 2), (0, 2)]),
                              Partition.from_assignment(vg(3, [(0, 1), (1, 2), (0, 2)]), [0, 0, 0])) == 0.0
    assert structural_entropy(CYCLE4, Partition.from_assignment(CYCLE4, [0, 0, 1, 1])) == 0.5
    assert structural_entropy(CYCLE4, Partition.from_assignment(CYCLE4, [0, 1, 2, 3])) == 0.0


def test_entropy_needs_edges():
    g = vg(3, [])
    with pytest.raises(ValueError):
        structural_entropy(g, Partition.from_assignment(g, [0, 1, 1]))


def test_empty_cluster_contributes_zero():
    p = Partition.from_assignment(CYCLE4, [0, 0, 1, 1], T=3)
    assert structural_entropy(CYCLE4, p) == 0.5


def test_cached_volumes_match_recount():
    rng = np.random.default_rng(0)
    for trial in range(30):
        g = random_graph(rng, int(rng.integers(5, 40)), 0.2)
        if g.edge_count == 0:
            continue
        part = greedy_entropy_clustering(g, 3, seed=trial, restarts=2)
        d, gg = brute_volumes(g, part.cluster_of, part.T)
        assert np.array_equal(part.d, d) and np.array_equal(part.g, gg)
        assert part.d.sum() == 2 * g.edge_count
        assert np.all(part.g <= part.d)


def test_recovers_disjoint_cliques():
    pairs = list(itertools.combinations(range(4), 2)) + list(itertools.combinations(range(4, 8), 2))
    g = vg(8, pairs)
    part = greedy_entropy_clustering(g, 2, seed=0)
    assert len(set(part.cluster_of[:4])) == 1 and len(set(part.cluster_of[4:])) == 1
    assert part.cluster_of[0] != part.cluster_of[4]


def test_single_cluster_is_trivial():
    part = greedy_entropy_clustering(CYCLE4, 1)
    assert part.T == 1 and structural_entropy(CYCLE4, part) == 0.0


def test_too_many_clusters():
    with pytest.raises(ValueError):
        greedy_entropy_clustering(CYCLE4, 5)


def test_never_worse_than_start_and_no_empty_clusters():
    rng = np.random.default_rng(1)
    for trial in range(20):
        g = random_graph(rng, 30, 0.15)
        part = greedy_entropy_clustering(g, 4, seed=trial, restarts=1)
        start = Partition.from_assignment(g, initial_assignment(g.n, 4, trial, 0), 4)
        assert structural_entropy(g, part) >= structural_entropy(g, start) - 1e-12
        assert np.all(part.sizes() > 0)


def test_deterministic_per_seed():
    g = random_graph(np.random.default_rng(2), 40, 0.1)
    a = greedy_entropy_clustering(g, 3, seed=5)
    b = greedy_entropy_clustering(g, 3, seed=5)
    assert np.array_equal(a.cluster_of, b.cluster_of)


def exhaustive_best(g):
    best = -np.inf
    for bits in range(1, 2 ** (g.n - 1)):
        assign = np.array([(bits >> i) & 1 for i in range(g.n)])
        best = max(best, structural_entropy(g, Partition.from_assignment(g, assign, 2)))
    return best


def test_matches_exhaustive_optimum_on_small_graphs():
    rng = np.random.default_rng(3)
    hits = trials = 0
    while trials < 100:
        g = random_graph(rng, int(rng.integers(4, 9)), 0.45)
        if g.edge_count == 0:
            continue
        part = greedy_entropy_clustering(g, 2, seed=trials, restarts=20)
        hits += structural_entropy(g, part) >= exhaustive_best(g) - 1e-12
        trials += 1
    assert hits >= 95


def test_partition_file_round_trip(tmp_path):
    part = Partition.from_assignment(CYCLE4, [1, 1, 0, 0])
    write_partition(part, tmp_path / "p.txt")
    assert (tmp_path / "p.txt").read_text().splitlines()[0] == "0\t1"
    back = read_partition(CYCLE4, tmp_path / "p.txt")
    assert np.array_equal(back.cluster_of, part.cluster_of)


def test_choose_cluster_count_returns_best_entropy():
    pairs = [p for block in range(3) for p in itertools.combinations(range(4 * block, 4 * block + 4), 2)]
    pairs += [(3, 4), (7, 8)]
    g = vg(12, pairs)
    part = choose_cluster_count(g, 5, seed=0)
    for T in range(2, 6):
        assert structural_entropy(g, part) >= structural_entropy(
            g, greedy_entropy_clustering(g, T, seed=0)) - 1e-12
