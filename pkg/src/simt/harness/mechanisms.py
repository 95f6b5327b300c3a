"""Purchasing strategies compared by the harness: the full mechanism, baselines, ablations."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..auction import AuctionOutcome, run_auction
from ..clustering import Partition
from ..graph import NON_TRADABLE
from ..importance import importance_scores


@dataclass(frozen=True)
class MechanismSpec:
    name: str
    scoring: str  # "structural", "uniform" or "random"
    clustered: bool = True
    alpha: float | None = None  # fixed blend weight; None derives it from the budget
    propagate: bool = True
    augment: bool = True


SPECS = {
    "simt": MechanismSpec("simt", "structural"),
    "greedy": MechanismSpec("greedy", "uniform", clustered=False, propagate=False),
    "greedy_p": MechanismSpec("greedy_p", "uniform", clustered=False),
    "random": MechanismSpec("random", "random", clustered=False),
    "no_cluster": MechanismSpec("no_cluster", "structural", clustered=False),
    "no_rep": MechanismSpec("no_rep", "structural", alpha=1.0),
    "no_info": MechanismSpec("no_info", "structural", alpha=0.0),
    "no_edge_aug": MechanismSpec("no_edge_aug", "structural", augment=False),
}


def single_cluster(graph) -> Partition:
    return Partition.from_assignment(graph, np.zeros(graph.n, dtype=np.int64), 1)


def random_purchase(valuations, ownership, budget, rng) -> AuctionOutcome:
    """Visit tradable nodes in random order, paying the report while the budget lasts."""
    theta = np.asarray(getattr(valuations, "theta", valuations), dtype=float)
    allocation = np.zeros(len(theta), dtype=np.int8)
    payment = np.zeros(len(theta))
    left = float(budget)
    for v in rng.permutation(np.flatnonzero(ownership.owner_of != NON_TRADABLE)):
        if theta[v] <= left:
            allocation[v] = 1
            payment[v] = theta[v]
            left -= theta[v]
    return AuctionOutcome(allocation, payment, [])


def buy(spec: MechanismSpec, known, partition, ownership, valuations, budget,
        rng=None, centrality="pagerank", gamma=0.85, mean_valuation=1.0) -> AuctionOutcome:
    """Decide which nodes to buy under ``spec``.

    ``partition`` is the clustering of the known graph; unclustered
    strategies ignore it and treat all nodes as one group.
    """
    if spec.scoring == "random":
        if rng is None:
            raise ValueError("random purchasing needs an rng")
        return random_purchase(valuations, ownership, budget, rng)
    part = partition if spec.clustered else single_cluster(known)
    if spec.scoring == "uniform":
        phi = np.ones(known.n)
    else:
        phi = importance_scores(known, part, budget, mean_valuation=mean_valuation,
                                centrality=centrality, gamma=gamma,
                                tradable_nodes=int(ownership.tradable.sum()),
                                alpha=spec.alpha).phi
    return run_auction(phi, valuations, part, ownership, budget)
