import math

import numpy as np
import pytest

from simt.clustering import Partition
from simt.graph import VisibleGraph, canonical_edges
from simt.importance import (ConvergenceError, blend_alpha, degree_centrality, importance_scores,
                             marginal_entropies, marginal_entropy, marginal_entropy_oracle,
                             pagerank, pagerank_dense, rank_scores)


def vg(n, pairs):
    return VisibleGraph(n, canonical_edges(pairs, n))


CYCLE4 = vg(4, [(0, 1), (1, 2), (2, 3), (3, 0)])


def random_instance(rng):
    n = int(rng.integers(3, 51))
    iu, ju = np.triu_indices(n, k=1)
    hit = rng.random(len(iu)) < rng.uniform(0.05, 0.5)
    g = vg(n, np.column_stack([iu[hit], ju[hit]]))
    T = int(rng.integers(1, min(6, n) + 1))
    return g, Partition.from_assignment(g, rng.integers(0, T, size=n), T)


def test_cycle_marginal_entropy():
    part = Partition.from_assignment(CYCLE4, [0, 0, 1, 1])
    assert marginal_entropy(CYCLE4, part, 0) == 1.0
    # moving node 0 out: H drops from 0.5 to 0.25
    assert marginal_entropy_oracle(CYCLE4, part, 0) == pytest.approx(0.25, abs=1e-15)


def test_isolated_node_has_zero_entropy():
    g = vg(4, [(0, 1), (1, 2), (0, 2)])
    part = Partition.from_assignment(g, [0, 0, 1, 1])
    eps, degenerate = marginal_entropies(g, part)
    # cluster {2, 3} holds one cut edge and no internal edge: degenerate
    assert degenerate.tolist() == [False, False, True, True]
    assert eps[3] == 0.0
    assert marginal_entropy_oracle(g, part, 3) == 0.0


def test_single_cluster_is_degenerate():
    eps, degenerate = marginal_entropies(CYCLE4, Partition.from_assignment(CYCLE4, [0, 0, 0, 0]))
    assert degenerate.all() and not eps.any()


def test_closed_form_matches_oracle_with_corrected_sign():
    # epsilon times the cluster's signed entropy term equals H_P - H_P'
    rng = np.random.default_rng(0)
    checked = 0
    for _ in range(200):
        g, part = random_instance(rng)
        if g.edge_count == 0:
            continue
        eps, degenerate = marginal_entropies(g, part)
        two_m = 2 * g.edge_count
        for v in np.flatnonzero(~degenerate):
            t = part.cluster_of[v]
            inner, d_t = part.d[t] - part.g[t], part.d[t]
            lhs = eps[v] * inner * math.log2(d_t / two_m)
            assert lhs == pytest.approx(-two_m * marginal_entropy_oracle(g, part, v), abs=1e-10)
            checked += 1
    assert checked > 1000


def test_log_base_does_not_matter():
    rng = np.random.default_rng(4)
    g, part = random_instance(rng)
    eps, degenerate = marginal_entropies(g, part)
    two_m = 2 * g.edge_count
    for v in np.flatnonzero(~degenerate)[:5]:
        t = part.cluster_of[v]
        inner, d_t, d_v = part.d[t] - part.g[t], part.d[t], g.degrees()[v]
        n_vt = sum(part.cluster_of[u] == t for u in g.neighbors()[v])
        num = inner * math.log(d_t / (d_t - d_v)) + 2 * n_vt * math.log((d_t - d_v) / two_m)
        assert eps[v] == pytest.approx(num / (inner * math.log(d_t / two_m)), rel=1e-12)


def test_pagerank_small_cases():
    assert np.allclose(pagerank(vg(2, [(0, 1)]), gamma=0.3), [0.5, 0.5], atol=1e-12)
    assert np.allclose(pagerank(CYCLE4), 0.25, atol=1e-12)
    star = vg(5, [(0, i) for i in range(1, 5)])
    assert np.allclose(pagerank(star), pagerank_dense(star), atol=1e-8)


def test_pagerank_dangling_nodes_keep_teleport_only():
    g = vg(3, [(0, 1)])
    rho = pagerank(g)
    assert rho[2] == pytest.approx(0.15 / 3)
    assert rho.sum() < 1


def test_pagerank_matches_dense_solve_on_random_graphs():
    rng = np.random.default_rng(5)
    for _ in range(30):
        g, _ = random_instance(rng)
        rho = pagerank(g)
        assert np.abs(rho - pagerank_dense(g)).max() <= 1e-8


def test_pagerank_convergence_error():
    with pytest.raises(ConvergenceError) as err:
        pagerank(vg(5, [(0, i) for i in range(1, 5)]), max_iter=2)
    assert err.value.residual > 0


def test_degree_centrality():
    assert degree_centrality(vg(3, [(0, 1), (0, 2)])).tolist() == [1.0, 0.5, 0.5]


def test_blend_alpha():
    assert blend_alpha(0, 10, 1.0, 3) == 0.5
    assert blend_alpha(10, 10, 1.0, 1) == 0.25
    assert blend_alpha(1e9, 10, 1.0, 1) < 1e-8
    a = [blend_alpha(b, 100, 1.0, 2) for b in (10, 50, 100)]
    assert a[0] > a[1] > a[2] > 0
    assert blend_alpha(50, 100, 1.0, 1) > blend_alpha(50, 100, 1.0, 3)
    with pytest.raises(ValueError):
        blend_alpha(1, 10, 0.0, 1)


def test_rank_scores_worked_cluster():
    part = Partition.from_assignment(vg(3, [(0, 1), (1, 2)]), [0, 0, 0])
    info = rank_scores(part, np.array([0.1, 0.2, 0.3]), descending=False)
    rep = rank_scores(part, np.array([0.1, 0.2, 0.3]), descending=True)
    phi = 0.5 * rep + 0.5 * info
    assert np.allclose(phi, [2 / 3, 2 / 3, 2 / 3])
    assert info.tolist() == [1.0, 2 / 3, 1 / 3]


def test_rank_ties_break_by_node_id():
    part = Partition.from_assignment(vg(3, [(0, 1)]), [0, 0, 0])
    assert rank_scores(part, np.zeros(3), descending=True).tolist() == [1.0, 2 / 3, 1 / 3]


def test_scores_are_rank_invariant_and_permutations_per_cluster():
    rng = np.random.default_rng(6)
    g, part = random_instance(rng)
    while g.edge_count == 0:
        g, part = random_instance(rng)
    s = importance_scores(g, part, budget=20)
    for t in range(part.T):
        m = part.members(t)
        if len(m):
            expected = np.arange(1, len(m) + 1) / len(m)
            assert np.allclose(np.sort(s.rep_score[m]), expected)
            assert np.allclose(np.sort(s.info_score[m]), expected)
    assert np.allclose(s.phi, (1 - s.alpha) * s.rep_score + s.alpha * s.info_score)
    assert np.all(s.phi > 0) and 0 < s.alpha <= 0.5
    doubled = rank_scores(part, 2 * s.centrality, descending=True)
    assert np.array_equal(doubled, s.rep_score)
    cubed = rank_scores(part, s.epsilon ** 3, descending=False)
    assert np.array_equal(cubed, s.info_score)


def test_singleton_cluster_scores_one():
    g = vg(3, [(0, 1), (1, 2)])
    s = importance_scores(g, Partition.from_assignment(g, [0, 0, 1]), budget=5)
    assert s.phi[2] == 1.0 and s.info_score[2] == 1.0 and s.rep_score[2] == 1.0


def test_alpha_override():
    s = importance_scores(CYCLE4, Partition.from_assignment(CYCLE4, [0, 0, 1, 1]), 5, alpha=1.0)
    assert np.array_equal(s.phi, s.info_score)
