"""Repairing procured data: feature propagation and ER edge augmentation."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.csgraph as csgraph
import scipy.sparse.linalg as spla

from .graph import VisibleGraph, canonical_edges


@dataclass(frozen=True, eq=False)
class ImputedFeatures:
    matrix: np.ndarray
    selected_mask: np.ndarray
    iterations_used: int
    final_residual: float
    converged: bool


@dataclass(frozen=True, eq=False)
class AugmentedGraph:
    base: VisibleGraph
    added_edges: np.ndarray
    density_used: float

    def merged(self) -> VisibleGraph:
        edges = np.concatenate([self.base.edges, self.added_edges])
        return VisibleGraph(self.base.n, canonical_edges(edges, self.base.n))


def feature_propagation(adjacency, X_s, selected_mask, tol=1e-6, max_iter=200) -> ImputedFeatures:
    """Diffuse purchased features to the other nodes.

    ``X_s`` holds the purchased rows in node order of ``selected_mask``.
    Each step multiplies by the propagation matrix and then restores the
    purchased rows; it stops when no entry moves by ``tol`` or more.
    """
    mask = np.asarray(selected_mask, dtype=bool)
    if not mask.any():
        raise ValueError("feature propagation needs at least one purchased node")
    if adjacency.mode != "propagation":
        raise ValueError("feature propagation expects the propagation normalisation")
    a = adjacency.matrix
    X_s = np.asarray(X_s, dtype=float)
    x = np.zeros((len(mask), X_s.shape[1]))
    x[mask] = X_s
    if mask.all():
        return ImputedFeatures(x, mask, 0, 0.0, True)
    residual = np.inf
    for it in range(1, max_iter + 1):
        nxt = a @ x
        nxt[mask] = X_s
        residual = float(np.abs(nxt - x).max())
        x = nxt
        if residual < tol:
            return ImputedFeatures(x, mask, it, residual, True)
    return ImputedFeatures(x, mask, max_iter, residual, False)


def closed_form_imputation(adjacency, X_s, selected_mask):
    """Steady state ``X_u = (I - A_uu)^-1 A_us X_s`` by a direct solve.

    Returns ``(X_u, unreachable)``: rows for the unselected nodes in node
    order, and a mask over those rows whose component holds no purchased
    node (left at zero).
    """
    mask = np.asarray(selected_mask, dtype=bool)
    a = adjacency.matrix.tocsr()
    s_idx, u_idx = np.flatnonzero(mask), np.flatnonzero(~mask)
    X_s = np.asarray(X_s, dtype=float)
    out = np.zeros((len(u_idx), X_s.shape[1]))
    if len(u_idx) == 0:
        return out, np.zeros(0, dtype=bool)
    # an unselected node is solvable iff its component reaches a purchased node
    n_comp, comp = csgraph.connected_components(a, directed=False)
    anchored = np.zeros(n_comp, dtype=bool)
    anchored[comp[s_idx]] = True
    reach = anchored[comp[u_idx]]
    if reach.any():
        u_ok = u_idx[reach]
        a_uu = a[u_ok][:, u_ok]
        a_us = a[u_ok][:, s_idx]
        lhs = (sp.identity(len(u_ok), format="csc") - a_uu).tocsc()
        rhs = a_us @ X_s
        sol = spla.spsolve(lhs, rhs)
        out[reach] = sol.reshape(len(u_ok), -1)
    return out, ~reach


def edge_augmentation(known, ownership, outcome, seed, base=None) -> AugmentedGraph:
    """Erdos-Renyi edges among each owner's unselected nodes.

    Edge probability is the density of ``known``.  Edges are added on top
    of ``base`` (default ``known``), skipping pairs already present.
    """
    n = known.n
    p = 2.0 * known.edge_count / (n * (n - 1)) if n > 1 else 0.0
    base = known if base is None else base
    allocation = np.asarray(getattr(outcome, "allocation", outcome))
    rng = np.random.default_rng(seed)
    existing = base.edge_set()
    added = []
    for i in range(ownership.owner_count):
        nodes = np.flatnonzero((ownership.owner_of == i) & (allocation == 0))
        if len(nodes) < 2:
            continue
        iu, ju = np.triu_indices(len(nodes), k=1)
        hit = rng.random(len(iu)) < p
        for u, v in zip(nodes[iu[hit]].tolist(), nodes[ju[hit]].tolist()):
            if (u, v) not in existing:
                added.append((u, v))
    added = np.asarray(added, dtype=np.int64).reshape(-1, 2)
    return AugmentedGraph(base, added, p)

