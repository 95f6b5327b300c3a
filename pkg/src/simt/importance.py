"""Per-node structural importance: marginal entropy ranks blended with centrality ranks."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .clustering import Partition, entropy_from_volumes


class ConvergenceError(RuntimeError):
    def __init__(self, message, residual):
        super().__init__(f"{message} (last residual {residual:.3e})")
        self.residual = residual


@dataclass(frozen=True, eq=False)
class ImportanceScores:
    epsilon: np.ndarray
    centrality: np.ndarray
    info_score: np.ndarray
    rep_score: np.ndarray
    alpha: float
    phi: np.ndarray
    degenerate: np.ndarray  # nodes whose cluster has no defined epsilon


def _within_cluster_counts(graph, partition):
    cu = partition.cluster_of[graph.edges[:, 0]]
    cv = partition.cluster_of[graph.edges[:, 1]]
    same = cu == cv
    return np.bincount(graph.edges[same].ravel(), minlength=graph.n)


def _degenerate_clusters(partition):
    two_m = 2 * partition.total_edges
    return (partition.d - partition.g == 0) | (partition.d == two_m)


def marginal_entropies(graph, partition: Partition):
    """Normalised marginal structural entropy of every node.

    Returns ``(epsilon, degenerate)``.  In clusters where the normaliser
    ``(d_t - g_t) * log(d_t / 2|E|)`` vanishes every node gets 0 and is
    flagged degenerate.
    """
    if graph.edge_count == 0:
        raise ValueError("marginal entropy needs at least one edge")
    two_m = 2.0 * graph.edge_count
    c = partition.cluster_of
    d_t = partition.d[c].astype(float)
    inner = (partition.d - partition.g)[c].astype(float)
    d_v = graph.degrees().astype(float)
    n_vt = _within_cluster_counts(graph, partition).astype(float)
    degenerate = _degenerate_clusters(partition)[c]
    eps = np.zeros(graph.n)
    ok = ~degenerate
    rest = d_t[ok] - d_v[ok]  # > 0 here: a node alone cannot make d_t - g_t positive
    num = inner[ok] * np.log2(d_t[ok] / rest) + 2 * n_vt[ok] * np.log2(rest / two_m)
    eps[ok] = num / (inner[ok] * np.log2(d_t[ok] / two_m))
    return eps, degenerate


def marginal_entropy(graph, partition: Partition, v: int) -> float:
    eps, _ = marginal_entropies(graph, partition)
    return float(eps[v])


def marginal_entropy_oracle(graph, partition: Partition, v: int) -> float:
    """``H_P - H_P'`` recomputed from scratch, where P' moves v to a new singleton."""
    moved = partition.cluster_of.copy()
    moved[v] = partition.T
    p2 = Partition.from_assignment(graph, moved, partition.T + 1)
    h = entropy_from_volumes(partition.d, partition.g, graph.edge_count)
    h2 = entropy_from_volumes(p2.d, p2.g, graph.edge_count)
    return h - h2


def pagerank(graph, gamma=0.85, tol=1e-10, max_iter=1000) -> np.ndarray:
    """Undirected PageRank by power iteration.

    Degree-0 nodes keep only the teleport share, so the vector sums to 1
    only when the graph has no isolated node.
    """
    n = graph.n
    if n < 1:
        raise ValueError("pagerank needs at least one node")
    if not 0 < gamma < 1:
        raise ValueError("damping must lie in (0, 1)")
    a = graph.adjacency()
    deg = np.asarray(a.sum(axis=1)).ravel()
    inv = np.divide(1.0, deg, out=np.zeros_like(deg), where=deg > 0)
    walk = (a @ sp.diags(inv)).tocsr()
    rho = np.full(n, 1.0 / n)
    teleport = (1.0 - gamma) / n
    residual = np.inf
    for _ in range(max_iter):
        nxt = gamma * (walk @ rho) + teleport
        residual = np.abs(nxt - rho).sum()
        rho = nxt
        if residual < tol:
            return rho
    raise ConvergenceError(f"pagerank did not converge in {max_iter} iterations", residual)


def pagerank_dense(graph, gamma=0.85) -> np.ndarray:
    """Direct solve of ``(I - gamma * A D^-1) rho = (1 - gamma) / n``."""
    n = graph.n
    a = graph.adjacency().toarray()
    deg = a.sum(axis=1)
    inv = np.divide(1.0, deg, out=np.zeros_like(deg), where=deg > 0)
    return np.linalg.solve(np.eye(n) - gamma * a * inv[None, :], np.full(n, (1 - gamma) / n))


def degree_centrality(graph) -> np.ndarray:
    n = graph.n
    return graph.degrees() / max(n - 1, 1)


def blend_alpha(budget, tradable_nodes, mean_valuation, clusters) -> float:
    """Weight on informativeness; shrinks as budget and cluster count grow."""
    if mean_valuation <= 0:
        raise ValueError("mean valuation must be positive")
    if tradable_nodes < 1 or clusters < 1 or budget < 0:
        raise ValueError("need tradable_nodes >= 1, clusters >= 1, budget >= 0")
    return 0.5 * (1.0 + budget / (tradable_nodes * mean_valuation)) ** (-clusters)


def rank_scores(partition: Partition, key: np.ndarray, descending: bool) -> np.ndarray:
    """Within each cluster, score ``(|C_t| - position) / |C_t|``; ties by node id."""
    n = len(key)
    ids = np.arange(n)
    primary = -key if descending else key
    order = np.lexsort((ids, primary, partition.cluster_of))
    sizes = partition.sizes()
    c_sorted = partition.cluster_of[order]
    starts = np.concatenate([[0], np.cumsum(sizes)[:-1]])
    pos = np.arange(n) - starts[c_sorted]
    scores = np.empty(n)
    scores[order] = (sizes[c_sorted] - pos) / sizes[c_sorted]
    return scores


def importance_scores(graph, partition, budget, mean_valuation=1.0, centrality="pagerank",
                      gamma=0.85, tradable_nodes=None, alpha=None) -> ImportanceScores:
    """Structural importance ``phi = (1 - alpha) * rep + alpha * info``.

    Lowest marginal entropy and highest centrality in a cluster score 1.
    ``alpha`` overrides the budget-driven blend weight when given.
    """
    eps, degenerate = marginal_entropies(graph, partition)
    if centrality == "pagerank":
        rho = pagerank(graph, gamma=gamma)
    elif centrality == "degree":
        rho = degree_centrality(graph).astype(float)
    else:
        raise ValueError(f"unknown centrality {centrality!r}")
    if alpha is None:
        n = graph.n if tradable_nodes is None else tradable_nodes
        alpha = blend_alpha(budget, n, mean_valuation, partition.T)
    info = rank_scores(partition, eps, descending=False)
    rep = rank_scores(partition, rho, descending=True)
    phi = (1.0 - alpha) * rep + alpha * info
    return ImportanceScores(eps, rho, info, rep, float(alpha), phi, degenerate)


def write_scores(scores: ImportanceScores, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for v in range(len(scores.phi)):
            fh.write(f"{v}\t{float(scores.epsilon[v])!r}\t{float(scores.centrality[v])!r}\t"
                     f"{float(scores.phi[v])!r}\n")
