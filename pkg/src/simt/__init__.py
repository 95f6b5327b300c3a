"""Structure-aware procurement of graph data for GNN training."""
from .auction import AuctionOutcome, Valuations, generate_valuations, run_auction
from .clustering import Partition, greedy_entropy_clustering, structural_entropy
from .gnn import GcnModel, TrainConfig, evaluate, train
from .graph import (NON_TRADABLE, AttributedGraph, OwnershipMap, VisibleGraph, generate_sbm,
                    known_graph, load_graph, normalized_adjacency, random_ownership,
                    reveal_selected)
from .importance import ImportanceScores, importance_scores, marginal_entropies, pagerank
from .imputation import closed_form_imputation, edge_augmentation, feature_propagation

__all__ = [
    "AuctionOutcome", "Valuations", "generate_valuations", "run_auction",
    "Partition", "greedy_entropy_clustering", "structural_entropy",
    "GcnModel", "TrainConfig", "evaluate", "train",
    "NON_TRADABLE", "AttributedGraph", "OwnershipMap", "VisibleGraph", "generate_sbm",
    "known_graph", "load_graph", "normalized_adjacency", "random_ownership", "reveal_selected",
    "ImportanceScores", "importance_scores", "marginal_entropies", "pagerank",
    "closed_form_imputation", "edge_augmentation", "feature_propagation",
]
