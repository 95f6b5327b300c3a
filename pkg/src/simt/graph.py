"""Attributed graphs, data ownership and what the broker can see.

Graphs are undirected and stored as a sorted ``(k, 2)`` integer array of
unique pairs with ``u < v``.  Node ids are ``0..n-1``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp

NON_TRADABLE = -1


class GraphFormatError(ValueError):
    """A graph input file could not be parsed."""

    def __init__(self, path, lineno, message):
        self.path = str(path)
        self.lineno = lineno
        super().__init__(f"{path}:{lineno}: {message}")


class GraphValidationError(ValueError):
    pass


def canonical_edges(pairs, n: int) -> np.ndarray:
    """Sort and deduplicate undirected pairs; reject self-loops and bad ids."""
    arr = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    if arr.size == 0:
        return np.zeros((0, 2), dtype=np.int64)
    if arr.min() < 0 or arr.max() >= n:
        raise GraphValidationError(f"edge endpoint outside [0, {n})")
    if np.any(arr[:, 0] == arr[:, 1]):
        raise GraphValidationError("self-loop in edge list")
    arr = np.sort(arr, axis=1)
    return np.unique(arr, axis=0)


class _EdgeView:
    """Shared structural helpers for anything holding ``n`` and ``edges``."""

    n: int
    edges: np.ndarray

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    def degrees(self) -> np.ndarray:
        return np.bincount(self.edges.ravel(), minlength=self.n).astype(np.int64)

    def adjacency(self) -> sp.csr_matrix:
        u, v = self.edges[:, 0], self.edges[:, 1]
        data = np.ones(2 * len(u))
        a = sp.coo_matrix((data, (np.r_[u, v], np.r_[v, u])), shape=(self.n, self.n))
        return a.tocsr()

    def neighbors(self) -> list[np.ndarray]:
        a = self.adjacency()
        return [a.indices[a.indptr[i]:a.indptr[i + 1]] for i in range(self.n)]

    def edge_set(self) -> set[tuple[int, int]]:
        return {(int(u), int(v)) for u, v in self.edges}


@dataclass(frozen=True, eq=False)
class AttributedGraph(_EdgeView):
    n: int
    edges: np.ndarray
    features: np.ndarray
    labels: np.ndarray
    class_count: int

    def __post_init__(self):
        if self.n <= 0:
            raise GraphValidationError("graph must have at least one node")
        if self.features.shape[0] != self.n:
            raise GraphValidationError(
                f"feature rows ({self.features.shape[0]}) != node count ({self.n})")
        if self.labels.shape != (self.n,):
            raise GraphValidationError(
                f"label count ({len(self.labels)}) != node count ({self.n})")
        if len(self.labels) and (self.labels.min() < 0 or self.labels.max() >= self.class_count):
            raise GraphValidationError(f"label outside [0, {self.class_count})")

    @property
    def feature_dim(self) -> int:
        return self.features.shape[1]

    def structure(self) -> "VisibleGraph":
        return VisibleGraph(self.n, self.edges)


@dataclass(frozen=True, eq=False)
class VisibleGraph(_EdgeView):
    """Attribute-free structure, e.g. the subgraph the broker can observe."""

    n: int
    edges: np.ndarray

    def __eq__(self, other):
        if not isinstance(other, VisibleGraph):
            return NotImplemented
        return self.n == other.n and np.array_equal(self.edges, other.edges)


@dataclass(frozen=True, eq=False)
class OwnershipMap:
    """``owner_of[v]`` is the owner id of node v, or ``NON_TRADABLE``."""

    owner_of: np.ndarray
    owner_count: int

    def __post_init__(self):
        owned = self.owner_of[self.owner_of != NON_TRADABLE]
        if len(owned) and (owned.min() < 0 or owned.max() >= self.owner_count):
            raise GraphValidationError("owner id out of range")
        sizes = np.bincount(owned, minlength=self.owner_count)
        if np.any(sizes == 0):
            raise GraphValidationError("every owner must own at least one node")

    @property
    def n(self) -> int:
        return len(self.owner_of)

    @property
    def tradable(self) -> np.ndarray:
        return self.owner_of != NON_TRADABLE

    def nodes_of(self, owner: int) -> np.ndarray:
        return np.flatnonzero(self.owner_of == owner)

    def sizes(self) -> np.ndarray:
        return np.bincount(self.owner_of[self.tradable], minlength=self.owner_count)

    def visibility_key(self) -> np.ndarray:
        """Owner id per node, with every non-tradable node as its own owner."""
        key = self.owner_of.copy()
        loose = np.flatnonzero(key == NON_TRADABLE)
        key[loose] = self.owner_count + np.arange(len(loose))
        return key


@dataclass(frozen=True)
class NormalizedAdjacency:
    mode: str
    matrix: sp.csr_matrix = field(repr=False)


# ---------------------------------------------------------------------------
# ingestion

def _read_edges(path):
    pairs = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            text = line.split("#", 1)[0].strip()
            if not text:
                continue
            parts = text.split()
            if len(parts) != 2:
                raise GraphFormatError(path, lineno, f"expected 'u v', got {text!r}")
            try:
                u, v = int(parts[0]), int(parts[1])
            except ValueError:
                raise GraphFormatError(path, lineno, f"non-integer node id in {text!r}") from None
            if u < 0 or v < 0:
                raise GraphFormatError(path, lineno, "negative node id")
            if u == v:
                raise GraphFormatError(path, lineno, f"self-loop on node {u}")
            pairs.append((lineno, u, v))
    return pairs


def _read_features(path):
    rows = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            text = line.strip()
            if not text:
                continue
            try:
                rows.append([float(x) for x in text.split(",")])
            except ValueError:
                raise GraphFormatError(path, lineno, "non-numeric feature value") from None
            if len(rows[-1]) != len(rows[0]):
                raise GraphFormatError(
                    path, lineno, f"expected {len(rows[0])} values, got {len(rows[-1])}")
    return np.asarray(rows, dtype=np.float64)


def _read_labels(path):
    labels = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            text = line.strip()
            if not text:
                continue
            try:
                labels.append(int(text))
            except ValueError:
                raise GraphFormatError(path, lineno, f"non-integer label {text!r}") from None
            if labels[-1] < 0:
                raise GraphFormatError(path, lineno, "negative label")
    return np.asarray(labels, dtype=np.int64)


def load_graph(edge_path, feature_path, label_path, class_count=None) -> AttributedGraph:
    """Load an attributed graph from edge, feature and label text files.

    Directed input is folded to undirected pairs, so a file listing both
    ``u v`` and ``v u`` yields one edge.  ``class_count`` defaults to
    ``max(label) + 1``.
    """
    features = _read_features(feature_path)
    labels = _read_labels(label_path)
    n = len(labels)
    if features.shape[0] != n:
        raise GraphValidationError(
            f"{feature_path}: {features.shape[0]} feature rows for {n} labels")
    pairs = _read_edges(edge_path)
    for lineno, u, v in pairs:
        if u >= n or v >= n:
            raise GraphFormatError(edge_path, lineno, f"node id outside [0, {n})")
    edges = canonical_edges([(u, v) for _, u, v in pairs], n)
    if class_count is None:
        class_count = int(labels.max()) + 1 if n else 0
    return AttributedGraph(n, edges, features, labels, int(class_count))


def save_graph(graph: AttributedGraph, directory) -> tuple[Path, Path, Path]:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = directory / "edges.txt", directory / "features.csv", directory / "labels.txt"
    np.savetxt(paths[0], graph.edges, fmt="%d", delimiter="\t")
    np.savetxt(paths[1], graph.features, fmt="%.17g", delimiter=",")
    np.savetxt(paths[2], graph.labels, fmt="%d")
    return paths


# ---------------------------------------------------------------------------
# synthetic data

def generate_sbm(classes, nodes_per_class, p_in, p_out, feature_dim, signal, seed) -> AttributedGraph:
    """Planted-partition SBM with Gaussian class-conditional features.

    Class means sit on scaled basis vectors so any two are exactly
    ``signal`` apart; features add unit Gaussian noise.
    """
    if classes <= 0 or nodes_per_class <= 0:
        raise GraphValidationError("SBM needs at least one node")
    if not 0 <= p_out <= p_in <= 1:
        raise GraphValidationError("require 0 <= p_out <= p_in <= 1")
    if signal < 0:
        raise GraphValidationError("signal must be non-negative")
    if feature_dim < classes:
        raise GraphValidationError("feature_dim must be >= classes")
    rng = np.random.default_rng(seed)
    n = classes * nodes_per_class
    # shuffled so that node ids carry no class information
    labels = rng.permutation(np.repeat(np.arange(classes), nodes_per_class))
    members = [np.flatnonzero(labels == c) for c in range(classes)]
    blocks = []
    for a in range(classes):
        for b in range(a, classes):
            p = p_in if a == b else p_out
            hit = rng.random((nodes_per_class, nodes_per_class)) < p
            if a == b:
                hit = np.triu(hit, k=1)
            u, v = np.nonzero(hit)
            blocks.append(np.column_stack([members[a][u], members[b][v]]))
    edges = canonical_edges(np.concatenate(blocks), n)
    means = np.zeros((classes, feature_dim))
    means[np.arange(classes), np.arange(classes)] = signal / np.sqrt(2.0)
    features = means[labels] + rng.standard_normal((n, feature_dim))
    return AttributedGraph(n, edges, features, labels, classes)


def random_ownership(graph, owner_count, subgraph_size, seed, eligible=None) -> OwnershipMap:
    """Deal ``subgraph_size`` shuffled nodes to each of ``owner_count`` owners.

    Only ``eligible`` nodes (default: all) are dealt; the rest, and any
    leftovers, are marked ``NON_TRADABLE``.
    """
    n = graph.n
    pool = np.arange(n) if eligible is None else np.flatnonzero(np.asarray(eligible))
    if owner_count * subgraph_size > len(pool):
        raise GraphValidationError(
            f"{owner_count} owners x {subgraph_size} nodes exceeds {len(pool)} eligible nodes")
    if owner_count < 1 or subgraph_size < 1:
        raise GraphValidationError("owner_count and subgraph_size must be positive")
    rng = np.random.default_rng(seed)
    order = rng.permutation(pool)[: owner_count * subgraph_size]
    owner_of = np.full(n, NON_TRADABLE, dtype=np.int64)
    owner_of[order] = np.repeat(np.arange(owner_count), subgraph_size)
    return OwnershipMap(owner_of, owner_count)


# ---------------------------------------------------------------------------
# visibility

def _cross_owner_mask(edges, ownership):
    key = ownership.visibility_key()
    return key[edges[:, 0]] != key[edges[:, 1]]


def known_graph(graph, ownership) -> VisibleGraph:
    """Edges between different owners: what the broker sees before buying."""
    return VisibleGraph(graph.n, graph.edges[_cross_owner_mask(graph.edges, ownership)])


def reveal_selected(known, graph, ownership, selected) -> VisibleGraph:
    """Add the private edges sold along with the ``selected`` nodes."""
    sel = np.zeros(graph.n, dtype=bool)
    sel[np.asarray(list(selected) if isinstance(selected, (set, frozenset)) else selected,
                   dtype=np.int64)] = True
    e = graph.edges
    private = ~_cross_owner_mask(e, ownership)
    sold = private & (sel[e[:, 0]] | sel[e[:, 1]])
    merged = np.concatenate([known.edges, e[sold]])
    return VisibleGraph(graph.n, canonical_edges(merged, graph.n))


def selected_mask_from(selected, n) -> np.ndarray:
    mask = np.zeros(n, dtype=bool)
    mask[np.asarray(selected, dtype=np.int64)] = True
    return mask


# ---------------------------------------------------------------------------
# diagnostics

@dataclass(frozen=True)
class ClassEdgeProportions:
    intra: np.ndarray
    inter: np.ndarray
    no_edges: np.ndarray  # classes with no incident edge


def class_edge_proportions(graph) -> ClassEdgeProportions:
    """Per class, the share of incident edges staying inside the class.

    An edge between classes a and b counts once for each endpoint class.
    """
    C = graph.class_count
    la, lb = graph.labels[graph.edges[:, 0]], graph.labels[graph.edges[:, 1]]
    same = la == lb
    intra = np.bincount(la[same], minlength=C).astype(float)
    inter = (np.bincount(la[~same], minlength=C) + np.bincount(lb[~same], minlength=C)).astype(float)
    total = intra + inter
    empty = total == 0
    with np.errstate(invalid="ignore", divide="ignore"):
        fi = np.where(empty, 0.0, intra / total)
        fo = np.where(empty, 0.0, inter / total)
    return ClassEdgeProportions(fi, fo, empty)


def normalized_adjacency(edges, mode="propagation") -> NormalizedAdjacency:
    """Symmetric normalisation ``D^-1/2 A D^-1/2``.

    ``propagation`` uses A as-is (isolated nodes give zero rows);
    ``gcn`` uses ``A + I`` with degrees recomputed.
    """
    if mode == "gcn-renormalized":
        mode = "gcn"
    if mode not in ("propagation", "gcn"):
        raise ValueError(f"unknown normalisation mode {mode!r}")
    a = edges.adjacency().tocoo()
    if mode == "gcn":
        a = (a + sp.identity(edges.n, format="coo")).tocoo()
    deg = np.bincount(a.row, weights=a.data, minlength=edges.n)
    inv = np.zeros_like(deg)
    nz = deg > 0
    inv[nz] = 1.0 / np.sqrt(deg[nz])
    # one product per entry keeps the matrix bitwise symmetric
    data = a.data * (inv[a.row] * inv[a.col])
    m = sp.csr_matrix((data, (a.row, a.col)), shape=a.shape)
    m.sort_indices()
    return NormalizedAdjacency(mode, m)
