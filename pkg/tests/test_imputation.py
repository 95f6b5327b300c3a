import numpy as np
import pytest

from simt.auction import AuctionOutcome
from simt.graph import OwnershipMap, VisibleGraph, canonical_edges, normalized_adjacency
from simt.imputation import closed_form_imputation, edge_augmentation, feature_propagation


def vg(n, pairs):
    return VisibleGraph(n, canonical_edges(pairs, n))


def prop(g):
    return normalized_adjacency(g, "propagation")


def test_two_node_path():
    mask = np.array([True, False])
    out = feature_propagation(prop(vg(2, [(0, 1)])), [[1.0]], mask)
    assert out.converged and out.matrix[1, 0] == 1.0
    x_u, unreachable = closed_form_imputation(prop(vg(2, [(0, 1)])), [[1.0]], mask)
    assert x_u[0, 0] == 1.0 and not unreachable.any()


def test_all_selected_returns_input():
    X = np.arange(6.0).reshape(3, 2)
    out = feature_propagation(prop(vg(3, [(0, 1), (1, 2)])), X, np.ones(3, dtype=bool))
    assert np.array_equal(out.matrix, X) and out.iterations_used == 0


def test_cycle_with_opposite_nodes_selected():
    # on the 4-cycle both unselected nodes border nodes 0 and 2 only
    g = vg(4, [(0, 1), (1, 2), (2, 3), (3, 0)])
    mask = np.array([True, False, True, False])
    X_s = np.array([[1.0, 4.0], [3.0, 0.0]])
    x_u, _ = closed_form_imputation(prop(g), X_s, mask)
    assert np.allclose(x_u, [[2.0, 2.0], [2.0, 2.0]])


def test_unreachable_node_is_flagged_and_zero():
    g = vg(3, [(0, 1)])
    mask = np.array([True, False, False])
    x_u, unreachable = closed_form_imputation(prop(g), [[2.0]], mask)
    assert unreachable.tolist() == [False, True] and x_u[1, 0] == 0.0
    out = feature_propagation(prop(g), [[2.0]], mask)
    assert out.matrix[2, 0] == 0.0


def test_needs_a_purchased_node_and_propagation_mode():
    g = vg(2, [(0, 1)])
    with pytest.raises(ValueError):
        feature_propagation(prop(g), np.zeros((0, 1)), np.zeros(2, dtype=bool))
    with pytest.raises(ValueError):
        feature_propagation(normalized_adjacency(g, "gcn"), [[1.0]], np.array([True, False]))


def random_case(rng):
    n = int(rng.integers(4, 31))
    iu, ju = np.triu_indices(n, k=1)
    hit = rng.random(len(iu)) < rng.uniform(0.1, 0.4)
    g = vg(n, np.column_stack([iu[hit], ju[hit]]))
    mask = rng.random(n) < 0.4
    mask[rng.integers(n)] = True
    X = rng.standard_normal((n, 3))
    return g, mask, X


def test_iteration_matches_linear_solve_and_respects_bounds():
    rng = np.random.default_rng(0)
    for _ in range(50):
        g, mask, X = random_case(rng)
        a = prop(g)
        out = feature_propagation(a, X[mask], mask, tol=1e-12, max_iter=100_000)
        x_u, unreachable = closed_form_imputation(a, X[mask], mask)
        assert np.array_equal(out.matrix[mask], X[mask])
        assert np.abs(out.matrix[~mask] - x_u).max() <= 1e-6
        reach = ~unreachable
        if reach.any():
            # imputations are weighted averages scaled by degree ratios, so bound by magnitude
            bound = np.abs(X[mask]).max(axis=0) * np.sqrt(g.degrees().max() + 1)
            assert np.all(np.abs(x_u[reach]) <= bound + 1e-9)


def test_residual_is_non_increasing():
    rng = np.random.default_rng(1)
    g, mask, X = random_case(rng)
    residuals = [feature_propagation(prop(g), X[mask], mask, tol=0, max_iter=k).final_residual
                 for k in range(1, 30)]
    assert all(b <= a + 1e-12 for a, b in zip(residuals[1:], residuals[2:]))


def test_regular_graph_obeys_min_max_principle():
    # on a regular graph the normalised matrix is an average, so the maximum principle holds exactly
    n = 12
    g = vg(n, [(i, (i + 1) % n) for i in range(n)] + [(i, (i + 3) % n) for i in range(n)])
    rng = np.random.default_rng(2)
    mask = np.zeros(n, dtype=bool)
    mask[[0, 4, 9]] = True
    X_s = rng.standard_normal((3, 2))
    x_u, _ = closed_form_imputation(prop(g), X_s, mask)
    assert np.all(x_u >= X_s.min(axis=0) - 1e-12) and np.all(x_u <= X_s.max(axis=0) + 1e-12)


def test_edge_augmentation_invariants():
    rng = np.random.default_rng(3)
    n = 40
    own = OwnershipMap(np.arange(n) % 4, 4)
    iu, ju = np.triu_indices(n, k=1)
    hit = rng.random(len(iu)) < 0.3
    known = vg(n, np.column_stack([iu[hit], ju[hit]]))
    allocation = (rng.random(n) < 0.3).astype(np.int8)
    outcome = AuctionOutcome(allocation, allocation * 1.0)
    aug = edge_augmentation(known, own, outcome, seed=7)
    assert aug.density_used == pytest.approx(2 * known.edge_count / (n * (n - 1)))
    e = aug.added_edges
    assert len(e) > 0
    assert np.all(own.owner_of[e[:, 0]] == own.owner_of[e[:, 1]])
    assert not allocation[e.ravel()].any()
    assert not (set(map(tuple, e.tolist())) & known.edge_set())
    again = edge_augmentation(known, own, outcome, seed=7)
    assert np.array_equal(again.added_edges, e)


def test_complete_known_graph_gives_complete_owner_blocks():
    n = 6
    known = vg(n, [(i, j) for i in range(n) for j in range(i + 1, n)])
    own = OwnershipMap(np.array([0, 0, 0, 1, 1, 1]), 2)
    base = vg(n, [])
    aug = edge_augmentation(known, own, np.zeros(n, dtype=np.int8), seed=0, base=base)
    assert aug.density_used == 1.0
    assert sorted(map(tuple, aug.added_edges.tolist())) == [(0, 1), (0, 2), (1, 2), (3, 4), (3, 5), (4, 5)]


def test_owner_with_one_unselected_node_adds_nothing():
    n = 4
    known = vg(n, [(i, j) for i in range(n) for j in range(i + 1, n)])
    own = OwnershipMap(np.array([0, 0, 1, 1]), 2)
    alloc = np.array([1, 0, 1, 0], dtype=np.int8)
    assert len(edge_augmentation(known, own, alloc, seed=0, base=vg(n, [])).added_edges) == 0
