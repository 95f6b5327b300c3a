"""End-to-end experiment: buy under each strategy, repair the data, train, score."""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

import numpy as np

from ..auction import generate_valuations
from ..clustering import greedy_entropy_clustering
from ..gnn import TrainConfig, evaluate, train
from ..graph import (AttributedGraph, generate_sbm, known_graph, load_graph, normalized_adjacency,
                     random_ownership, reveal_selected)
from ..imputation import edge_augmentation, feature_propagation
from .config import ExperimentConfig
from .mechanisms import SPECS, buy
from .report import ResultsTable, summarize

# stream tags for per-run generators
_TEST, _OWNERS, _VALUES, _CLUSTER, _AUGMENT, _RANDOM, _SPLIT, _INIT = range(8)


@dataclass(frozen=True)
class RunRecord:
    mechanism: str
    budget: float
    outer: int
    split: int
    macro_f1: float
    micro_f1: float
    accuracy: float
    bought: int
    payment: float
    empty: bool  # nothing bought; scored with the majority-class fallback
    converged: bool  # feature propagation reached tolerance


def prepare_dataset(config: ExperimentConfig) -> AttributedGraph:
    if config.dataset == "files":
        return load_graph(config.edge_path, config.feature_path, config.label_path)
    return generate_sbm(config.sbm_classes, config.sbm_nodes_per_class, config.sbm_p_in,
                        config.sbm_p_out, config.sbm_feature_dim, config.sbm_signal,
                        config.sbm_seed)


def _rng(config, outer, tag, *extra):
    return np.random.default_rng([config.seed, outer, tag, *extra])


def train_config(config: ExperimentConfig, seed: int) -> TrainConfig:
    return TrainConfig(epochs=config.epochs, learning_rate=config.learning_rate,
                       weight_decay=config.weight_decay,
                       contrastive_weight=config.contrastive_weight,
                       temperature=config.temperature, hidden_size=config.hidden_size,
                       optimizer=config.optimizer, seed=seed)


@dataclass(frozen=True)
class OuterSetup:
    """Everything fixed for one outer seed and shared by all strategies."""

    test_mask: np.ndarray
    ownership: object
    valuations: object
    known: object
    partition: object


def outer_setup(config: ExperimentConfig, graph: AttributedGraph, outer: int) -> OuterSetup:
    n = graph.n
    n_test = max(1, int(round(config.test_fraction * n)))
    test_idx = _rng(config, outer, _TEST).permutation(n)[:n_test]
    test_mask = np.zeros(n, dtype=bool)
    test_mask[test_idx] = True
    ownership = random_ownership(graph, config.owner_count, config.subgraph_size,
                                 seed=_rng(config, outer, _OWNERS), eligible=~test_mask)
    valuations = generate_valuations(ownership, graph.labels, config.sigma,
                                     seed=_rng(config, outer, _VALUES),
                                     theta_upper=config.theta_upper)
    known = known_graph(graph, ownership)
    clusters = config.clusters or graph.class_count
    seed = int(_rng(config, outer, _CLUSTER).integers(2**31))
    partition = greedy_entropy_clustering(known, clusters, seed=seed,
                                          max_sweeps=config.cluster_sweeps,
                                          restarts=config.cluster_restarts)
    return OuterSetup(test_mask, ownership, valuations, known, partition)


def _majority_metrics(labels, test_mask, class_count):
    from ..gnn import classification_metrics
    y = labels[test_mask]
    majority = Counter(y.tolist()).most_common(1)[0][0]
    return classification_metrics(y, np.full(len(y), majority), class_count)


def evaluate_purchase(config, graph, setup, spec, outcome, budget, outer):
    """Repair the purchased data and train ``split_runs`` models on it."""
    selected = outcome.selected
    bought, paid = len(selected), outcome.total_payment
    records = []
    if bought == 0:
        m = _majority_metrics(graph.labels, setup.test_mask, graph.class_count)
        for r in range(config.split_runs):
            records.append(RunRecord(spec.name, budget, outer, r, m.macro_f1, m.micro_f1,
                                     m.accuracy, 0, paid, True, True))
        return records

    revealed = reveal_selected(setup.known, graph, setup.ownership, selected)
    mask = np.zeros(graph.n, dtype=bool)
    mask[selected] = True
    converged = True
    if spec.propagate:
        imputed = feature_propagation(normalized_adjacency(revealed, "propagation"),
                                      graph.features[mask], mask,
                                      tol=config.propagation_tol,
                                      max_iter=config.propagation_max_iter)
        X = imputed.matrix
        converged = imputed.converged
    else:
        X = np.zeros_like(graph.features)
        X[mask] = graph.features[mask]
    if spec.augment:
        aug = edge_augmentation(setup.known, setup.ownership, outcome,
                                seed=_rng(config, outer, _AUGMENT), base=revealed)
        augmented = aug.merged()
    else:
        augmented = revealed
    a_orig = normalized_adjacency(revealed, "gcn")
    a_aug = a_orig if augmented is revealed else normalized_adjacency(augmented, "gcn")

    for r in range(config.split_runs):
        rng = _rng(config, outer, _SPLIT, r)
        order = rng.permutation(selected)
        n_train = max(1, int(round(config.train_fraction * bought)))
        train_idx, val_idx = order[:n_train], order[n_train:]
        seed = int(_rng(config, outer, _INIT, r).integers(2**31))
        model, _ = train(train_config(config, seed), a_orig, a_aug, X, graph.labels,
                         train_idx, val_idx, class_count=graph.class_count)
        m = evaluate(model, a_aug, X, graph.labels, setup.test_mask, graph.class_count)
        records.append(RunRecord(spec.name, budget, outer, r, m.macro_f1, m.micro_f1,
                                 m.accuracy, bought, paid, False, converged))
    return records


def run_outer(config: ExperimentConfig, graph: AttributedGraph, outer: int, progress=None):
    setup = outer_setup(config, graph, outer)
    records = []
    for name in config.mechanisms:
        spec = SPECS[name]
        for b_i, budget in enumerate(config.budgets):
            outcome = buy(spec, setup.known, setup.partition, setup.ownership, setup.valuations,
                          budget, rng=_rng(config, outer, _RANDOM, b_i),
                          centrality=config.centrality, gamma=config.gamma)
            records.extend(evaluate_purchase(config, graph, setup, spec, outcome, budget, outer))
            if progress:
                progress(f"outer {outer} {name} budget {budget:g}: bought {len(outcome.selected)}")
    return records


def run_experiment(config: ExperimentConfig, graph: AttributedGraph | None = None,
                   progress=None) -> ResultsTable:
    """Run every outer seed and summarise; identical configs give identical tables."""
    graph = prepare_dataset(config) if graph is None else graph
    records = []
    for outer in range(config.outer_runs):
        records.extend(run_outer(config, graph, outer, progress))
    return summarize(records, config.mechanisms, config.budgets)
