"""Budget-feasible reverse auction run independently inside each cluster.

Within a cluster with budget ``B`` the tradable nodes are ranked by
``phi / theta`` and the longest prefix ``k`` with
``theta_k <= phi_k / sum(phi_1..phi_k) * B`` is bought.  Each bought node
is paid ``min(B * phi_v / S_k, theta_w / phi_w * phi_v)`` where ``w`` is the
first node after the prefix whose owner sold nothing in this cluster.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .graph import NON_TRADABLE, OwnershipMap

THETA_UPPER = 2.0


@dataclass(frozen=True, eq=False)
class Valuations:
    theta: np.ndarray
    theta_upper: float = THETA_UPPER
    owner_uniform: bool = True

    def with_theta(self, theta) -> "Valuations":
        return Valuations(np.asarray(theta, dtype=float), self.theta_upper, self.owner_uniform)


@dataclass(frozen=True)
class ClusterAudit:
    cluster: int
    budget: float
    order: tuple  # tradable nodes, best ratio first
    k: int
    threshold_owner: int | None
    threshold_node: int | None

    @property
    def fallback(self) -> bool:
        return self.threshold_node is None


@dataclass(frozen=True, eq=False)
class AuctionOutcome:
    allocation: np.ndarray
    payment: np.ndarray
    audits: list = field(default_factory=list)

    @property
    def selected(self) -> np.ndarray:
        return np.flatnonzero(self.allocation)

    @property
    def total_payment(self) -> float:
        return float(self.payment.sum())


def generate_valuations(ownership: OwnershipMap, labels, sigma, seed,
                        mu_range=(0.8, 1.2), theta_upper=THETA_UPPER) -> Valuations:
    """Class-dependent truncated-normal draws, averaged per owner.

    Draws outside ``[0, theta_upper]`` are redrawn.  Non-tradable nodes keep
    their own draw.
    """
    if sigma < 0:
        raise ValueError("sigma must be non-negative")
    labels = np.asarray(labels)
    rng = np.random.default_rng(seed)
    mu = rng.uniform(mu_range[0], mu_range[1], size=int(labels.max()) + 1)
    loc = mu[labels]
    draws = rng.normal(loc, sigma)
    bad = (draws < 0) | (draws > theta_upper)
    while bad.any():
        draws[bad] = rng.normal(loc[bad], sigma)
        bad = (draws < 0) | (draws > theta_upper)
    theta = draws.copy()
    owned = ownership.tradable
    sums = np.bincount(ownership.owner_of[owned], weights=draws[owned], minlength=ownership.owner_count)
    means = sums / ownership.sizes()
    theta[owned] = means[ownership.owner_of[owned]]
    return Valuations(theta, theta_upper, True)


def _sort_key(phi, theta):
    def key(v):
        t = theta[v]
        return (0, 0.0, v) if t == 0 else (1, -phi[v] / t, v)
    return key


def cluster_auction(nodes, phi, theta, owner, budget):
    """Run one cluster's auction on plain sequences.

    Returns ``(order, k, payments, w)`` where ``payments`` maps bought nodes
    to their payment and ``w`` is the threshold node or None.
    """
    order = sorted(nodes, key=_sort_key(phi, theta))
    k = 0
    s = 0.0
    for pos, v in enumerate(order, 1):
        s += phi[v]
        if theta[v] <= phi[v] / s * budget:
            k = pos
    if k == 0:
        return order, 0, {}, None
    chosen = order[:k]
    s_k = math.fsum(phi[v] for v in chosen)
    sold = {owner[v] for v in chosen}
    w = next((v for v in order[k:] if owner[v] not in sold), None)
    pay = {}
    for v in chosen:
        share = budget * phi[v] / s_k
        pay[v] = share if w is None else min(share, theta[w] / phi[w] * phi[v])
    return order, k, pay, w


def _cluster_assignment(partition):
    if hasattr(partition, "cluster_of"):
        return np.asarray(partition.cluster_of, dtype=np.int64), int(partition.T)
    cluster_of = np.asarray(partition, dtype=np.int64)
    return cluster_of, int(cluster_of.max()) + 1 if len(cluster_of) else 0


def run_auction(scores, valuations, partition, ownership: OwnershipMap, budget,
                theta_upper=THETA_UPPER) -> AuctionOutcome:
    """Allocate and pay per cluster, each with an equal ``budget / T`` share.

    ``scores`` is an ``ImportanceScores`` or a plain phi vector;
    ``valuations`` a ``Valuations`` or a plain report vector.  Only tradable
    nodes take part; unspent shares are not redistributed.
    """
    phi = np.asarray(getattr(scores, "phi", scores), dtype=float)
    theta = np.asarray(getattr(valuations, "theta", valuations), dtype=float)
    cluster_of, T = _cluster_assignment(partition)
    n = len(phi)
    if len(theta) != n or len(cluster_of) != n or ownership.n != n:
        raise ValueError("scores, valuations, partition and ownership must cover the same nodes")
    if budget < 0:
        raise ValueError("budget must be non-negative")
    if np.any(theta < 0):
        raise ValueError("valuations must be non-negative")
    allocation = np.zeros(n, dtype=np.int8)
    payment = np.zeros(n)
    audits = []
    if T == 0:
        return AuctionOutcome(allocation, payment, audits)
    share = budget / T
    phi_l, theta_l, owner_l = phi.tolist(), theta.tolist(), ownership.owner_of.tolist()
    tradable = ownership.owner_of != NON_TRADABLE
    by_cluster = [[] for _ in range(T)]
    for v in np.flatnonzero(tradable).tolist():
        by_cluster[cluster_of[v]].append(v)
    for t, nodes in enumerate(by_cluster):
        if not nodes:
            continue
        order, k, pay, w = cluster_auction(nodes, phi_l, theta_l, owner_l, share)
        for v, p in pay.items():
            allocation[v] = 1
            payment[v] = p
        audits.append(ClusterAudit(t, share, tuple(order), k,
                                   None if w is None else owner_l[w], w))
    return AuctionOutcome(allocation, payment, audits)


def write_outcome(outcome: AuctionOutcome, path, phi, valuations, partition,
                  ownership: OwnershipMap) -> None:
    """One tab-separated record per node: id, owner, cluster, phi, theta, allocated, payment."""
    phi = np.asarray(getattr(phi, "phi", phi), dtype=float)
    theta = np.asarray(getattr(valuations, "theta", valuations), dtype=float)
    cluster_of, _ = _cluster_assignment(partition)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("node\towner\tcluster\tphi\ttheta\tallocated\tpayment\n")
        for v in range(len(phi)):
            fh.write(f"{v}\t{ownership.owner_of[v]}\t{cluster_of[v]}\t{float(phi[v])!r}\t"
                     f"{float(theta[v])!r}\t{outcome.allocation[v]}\t{float(outcome.payment[v])!r}\n")


def owner_utility(outcome: AuctionOutcome, true_valuations, owner, ownership: OwnershipMap) -> float:
    theta = np.asarray(getattr(true_valuations, "theta", true_valuations), dtype=float)
    mine = ownership.owner_of == owner
    return float(np.sum((outcome.payment[mine] - theta[mine]) * outcome.allocation[mine]))


def _utilities(outcome, theta, ownership):
    owned = ownership.tradable
    per_node = (outcome.payment - theta) * outcome.allocation
    return np.bincount(ownership.owner_of[owned], weights=per_node[owned],
                       minlength=ownership.owner_count)


# ---------------------------------------------------------------------------
# property checks

DEFAULT_MULTIPLIERS = (0.1, 0.25, 0.5, 0.9, 0.99, 1.01, 1.1, 2.0, 4.0, 10.0)
DEFAULT_OFFSETS = (-0.5, -0.1, -0.01, 0.01, 0.1, 0.5)


@dataclass(frozen=True)
class AuctionInstance:
    phi: np.ndarray
    partition: object  # Partition or cluster assignment vector
    ownership: OwnershipMap
    budget: float
    theta_upper: float = THETA_UPPER


@dataclass
class PropertyReport:
    ic: bool = True
    ir: bool = True
    bf: bool = True
    counterexamples: list = field(default_factory=list)
    deviations_checked: int = 0
    node_level_violations: int = 0

    @property
    def ok(self) -> bool:
        return self.ic and self.ir and self.bf

    def merge(self, other: "PropertyReport", keep=20) -> None:
        self.ic &= other.ic
        self.ir &= other.ir
        self.bf &= other.bf
        self.deviations_checked += other.deviations_checked
        self.node_level_violations += other.node_level_violations
        room = keep - len(self.counterexamples)
        if room > 0:
            self.counterexamples.extend(other.counterexamples[:room])


def _deviated_reports(value, multipliers, offsets):
    out = [value * m for m in multipliers]
    out += [max(0.0, value + d) for d in offsets]
    return out


def verify_mechanism(instance: AuctionInstance, true_valuations, deviation_grid=DEFAULT_MULTIPLIERS,
                     offsets=DEFAULT_OFFSETS, trials=None, seed=0, node_level=False,
                     ic_tol=1e-9) -> PropertyReport:
    """Check budget feasibility, individual rationality and truthfulness.

    IC is probed at the owner level: an owner scales or shifts the single
    value reported for all of its nodes, everyone else reports truthfully.
    ``trials`` caps how many owners are probed (sampled with ``seed``).
    With ``node_level`` each node of a probed owner is also deviated alone;
    those violations are counted but do not fail the report.
    """
    theta = np.asarray(getattr(true_valuations, "theta", true_valuations), dtype=float)
    own = instance.ownership
    report = PropertyReport()
    truthful = run_auction(instance.phi, theta, instance.partition, own, instance.budget,
                           instance.theta_upper)
    total = truthful.total_payment
    if total > instance.budget * (1 + 1e-12):
        report.bf = False
        report.counterexamples.append({"kind": "BF", "total": total, "budget": instance.budget})
    bought = truthful.allocation == 1
    short = bought & (truthful.payment < theta)
    if short.any():
        report.ir = False
        v = int(np.flatnonzero(short)[0])
        report.counterexamples.append({"kind": "IR", "node": v, "payment": truthful.payment[v],
                                       "theta": theta[v]})
    base_util = _utilities(truthful, theta, own)
    if np.any(base_util < -1e-12):
        report.ir = False

    owners = np.arange(own.owner_count)
    if trials is not None and trials < len(owners):
        owners = np.random.default_rng(seed).choice(owners, size=trials, replace=False)
    for i in owners.tolist():
        mine = np.flatnonzero(own.owner_of == i)
        value = float(theta[mine[0]])
        for report_value in _deviated_reports(value, deviation_grid, offsets):
            lied = theta.copy()
            lied[mine] = report_value
            out = run_auction(instance.phi, lied, instance.partition, own, instance.budget,
                              instance.theta_upper)
            gain = owner_utility(out, theta, i, own) - base_util[i]
            report.deviations_checked += 1
            if gain > ic_tol:
                report.ic = False
                report.counterexamples.append({"kind": "IC", "owner": i, "truth": value,
                                               "report": report_value, "gain": float(gain)})
        if node_level and len(mine) > 1:
            for v in mine.tolist():
                for report_value in _deviated_reports(float(theta[v]), deviation_grid, offsets):
                    lied = theta.copy()
                    lied[v] = report_value
                    out = run_auction(instance.phi, lied, instance.partition, own,
                                      instance.budget, instance.theta_upper)
                    if owner_utility(out, theta, i, own) - base_util[i] > ic_tol:
                        report.node_level_violations += 1
    return report


def random_instance(rng, max_nodes=30, max_clusters=3, max_budget=10.0, owners="single",
                    theta_upper=THETA_UPPER):
    """Draw a random auction instance and truthful valuations.

    ``owners="single"`` gives every node its own owner; ``"grouped"`` deals
    nodes to a random number of owners sharing one valuation each.
    """
    n = int(rng.integers(1, max_nodes + 1))
    T = int(rng.integers(1, min(max_clusters, n) + 1))
    cluster_of = rng.integers(0, T, size=n)
    phi = 1.0 - rng.random(n)  # (0, 1]
    budget = float(rng.uniform(0.0, max_budget))
    if owners == "single":
        owner_of = np.arange(n)
        o = n
    elif owners == "grouped":
        o = int(rng.integers(1, n + 1))
        owner_of = np.concatenate([np.arange(o), rng.integers(0, o, size=n - o)])
        rng.shuffle(owner_of)
    else:
        raise ValueError(f"unknown owner layout {owners!r}")
    own_theta = theta_upper * (1.0 - rng.random(o))  # (0, theta_upper]
    theta = own_theta[owner_of]
    ownership = OwnershipMap(owner_of.astype(np.int64), o)
    return AuctionInstance(phi, cluster_of, ownership, budget, theta_upper), theta


def property_suite(instances=10_000, seed=0, owners="single", owners_per_instance=3,
                   node_level=False, **kwargs) -> PropertyReport:
    """Run ``verify_mechanism`` over many random instances."""
    rng = np.random.default_rng(seed)
    total = PropertyReport()
    for trial in range(instances):
        inst, theta = random_instance(rng, owners=owners, **kwargs)
        rep = verify_mechanism(inst, theta, trials=owners_per_instance, seed=trial,
                               node_level=node_level)
        for c in rep.counterexamples:
            c["instance"] = trial
        total.merge(rep)
    return total
