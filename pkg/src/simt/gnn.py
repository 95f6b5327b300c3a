"""Two-layer GCN in numpy with hand-written gradients.

``hidden = relu(A X W1)`` and ``logits = A hidden W2`` with ``A`` the
self-loop renormalised adjacency.  Training minimises cross-entropy on the
augmented view plus a weighted InfoNCE term tying the first-layer
embeddings of the original and augmented views.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

CHECKPOINT_MAGIC = "simt-gcn"
CHECKPOINT_VERSION = 1


class TrainingError(RuntimeError):
    pass


@dataclass
class GcnModel:
    W1: np.ndarray
    W2: np.ndarray

    @property
    def hidden_size(self) -> int:
        return self.W1.shape[1]

    @property
    def layer_count(self) -> int:
        return 2

    def copy(self) -> "GcnModel":
        return GcnModel(self.W1.copy(), self.W2.copy())


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 200
    learning_rate: float = 0.01
    weight_decay: float = 5e-4
    contrastive_weight: float = 1.0
    temperature: float = 0.5
    hidden_size: int = 32
    optimizer: str = "adam"
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.learning_rate < 0 or self.weight_decay < 0 or self.contrastive_weight < 0:
            raise ValueError("rates and weights must be non-negative")
        if self.temperature <= 0:
            raise ValueError("temperature must be positive")
        if self.optimizer not in ("adam", "sgd"):
            raise ValueError(f"unknown optimizer {self.optimizer!r}")


@dataclass(frozen=True)
class Metrics:
    macro_f1: float
    micro_f1: float
    accuracy: float


def glorot(rng, fan_in, fan_out):
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_in, fan_out))


def init_model(feature_dim, class_count, hidden_size=32, seed=0) -> GcnModel:
    rng = np.random.default_rng(seed)
    return GcnModel(glorot(rng, feature_dim, hidden_size), glorot(rng, hidden_size, class_count))


def _matrix(adjacency):
    return getattr(adjacency, "matrix", adjacency)


def gcn_forward(model: GcnModel, adjacency, X):
    """Return ``(hidden, logits)``."""
    a = _matrix(adjacency)
    X = np.asarray(X, dtype=float)
    if a.shape[0] != a.shape[1] or a.shape[1] != X.shape[0]:
        raise ValueError(f"adjacency {a.shape} does not match features {X.shape}")
    if X.shape[1] != model.W1.shape[0]:
        raise ValueError(f"feature dim {X.shape[1]} != W1 rows {model.W1.shape[0]}")
    hidden = np.maximum(a @ (X @ model.W1), 0.0)
    logits = a @ (hidden @ model.W2)
    return hidden, logits


def _log_softmax(z):
    z = z - z.max(axis=1, keepdims=True)
    return z - np.log(np.exp(z).sum(axis=1, keepdims=True))


def softmax(z):
    return np.exp(_log_softmax(z))


def cross_entropy(logits, labels, mask) -> float:
    idx = _as_index(mask, len(logits))
    if len(idx) == 0:
        raise ValueError("cross-entropy over an empty mask")
    lp = _log_softmax(np.asarray(logits, dtype=float)[idx])
    return float(-lp[np.arange(len(idx)), np.asarray(labels)[idx]].mean())


def contrastive_loss(H, H_aug, tau) -> float:
    """Mean InfoNCE loss pairing row v of ``H`` with row v of ``H_aug``."""
    if tau <= 0:
        raise ValueError("temperature must be positive")
    H, H_aug = np.asarray(H, dtype=float), np.asarray(H_aug, dtype=float)
    if H.shape != H_aug.shape:
        raise ValueError("views must have the same shape")
    lp = _log_softmax(H @ H_aug.T / tau)
    return float(-np.mean(np.diag(lp)))


def _as_index(mask, n):
    mask = np.asarray(mask)
    if mask.dtype == bool:
        if len(mask) != n:
            raise ValueError("mask length != node count")
        return np.flatnonzero(mask)
    return mask.astype(np.int64)


@dataclass
class _Views:
    """Precomputed products for one training problem."""

    a_aug: object
    a_orig: object
    ax_aug: np.ndarray
    ax_orig: np.ndarray | None
    labels: np.ndarray
    train_idx: np.ndarray


def make_views(a_aug, a_orig, X, labels, train_mask, with_original=True) -> _Views:
    a_aug, a_orig = _matrix(a_aug), _matrix(a_orig)
    X = np.asarray(X, dtype=float)
    return _Views(a_aug, a_orig, a_aug @ X, a_orig @ X if with_original else None,
                  np.asarray(labels), _as_index(train_mask, X.shape[0]))


def loss_and_grads(model: GcnModel, views: _Views, config: TrainConfig):
    """Total loss and its gradients with respect to W1 and W2."""
    W1, W2 = model.W1, model.W2
    z_aug = views.ax_aug @ W1
    h_aug = np.maximum(z_aug, 0.0)
    ah = views.a_aug @ h_aug
    logits = ah @ W2

    idx = views.train_idx
    y = views.labels[idx]
    lp = _log_softmax(logits[idx])
    l_class = -lp[np.arange(len(idx)), y].mean()
    d_logits = np.zeros_like(logits)
    p = np.exp(lp)
    p[np.arange(len(idx)), y] -= 1.0
    d_logits[idx] = p / len(idx)

    g_W2 = ah.T @ d_logits
    d_h_aug = views.a_aug.T @ (d_logits @ W2.T)
    g_W1 = np.zeros_like(W1)

    l_ctr = 0.0
    lam = config.contrastive_weight
    if lam > 0:
        z_orig = views.ax_orig @ W1
        h_orig = np.maximum(z_orig, 0.0)
        tau = config.temperature
        # softmax over similarities, built in place: this n x n block dominates the cost
        d_s = h_orig @ h_aug.T
        d_s *= 1.0 / tau
        d_s -= d_s.max(axis=1, keepdims=True)
        n = d_s.shape[0]
        diag = d_s[np.arange(n), np.arange(n)].copy()
        np.exp(d_s, out=d_s)
        row = d_s.sum(axis=1, keepdims=True)
        l_ctr = float(np.mean(np.log(row[:, 0]) - diag))
        d_s *= lam / (n * tau) / row
        d_s[np.arange(n), np.arange(n)] -= lam / (n * tau)
        d_h_orig = d_s @ h_aug
        d_h_aug += d_s.T @ h_orig
        g_W1 += views.ax_orig.T @ (d_h_orig * (z_orig > 0))

    g_W1 += views.ax_aug.T @ (d_h_aug * (z_aug > 0))
    wd = config.weight_decay
    l_reg = wd * (np.sum(W1 * W1) + np.sum(W2 * W2))
    g_W1 += 2 * wd * W1
    g_W2 += 2 * wd * W2
    total = l_class + lam * l_ctr + l_reg
    return float(total), {"W1": g_W1, "W2": g_W2}, {"class": float(l_class), "ctr": float(l_ctr)}


def _accuracy(logits, labels, idx):
    if len(idx) == 0:
        return float("nan")
    return float(np.mean(logits[idx].argmax(axis=1) == labels[idx]))


class _Adam:
    def __init__(self, lr, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr, self.b1, self.b2, self.eps = lr, beta1, beta2, eps
        self.m, self.v, self.t = {}, {}, 0

    def step(self, params, grads):
        self.t += 1
        for k, g in grads.items():
            m = self.m.get(k, 0.0) * self.b1 + (1 - self.b1) * g
            v = self.v.get(k, 0.0) * self.b2 + (1 - self.b2) * g * g
            self.m[k], self.v[k] = m, v
            m_hat = m / (1 - self.b1 ** self.t)
            v_hat = v / (1 - self.b2 ** self.t)
            params[k] -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


def train(config: TrainConfig, original_graph, augmented_graph, X, labels, train_mask, val_mask,
          class_count=None, model=None):
    """Full-batch training; returns ``(best_model, history)``.

    The graphs may be ``NormalizedAdjacency`` objects or sparse matrices in
    GCN normalisation.  The returned model is the snapshot with the best
    validation accuracy, ties going to the lower validation cross-entropy
    (training set if there is no validation set).
    """
    labels = np.asarray(labels)
    n = X.shape[0]
    train_idx = _as_index(train_mask, n)
    val_idx = _as_index(val_mask, n)
    if len(train_idx) == 0:
        raise ValueError("empty training mask")
    if np.intersect1d(train_idx, val_idx).size:
        raise ValueError("train and validation masks overlap")
    if class_count is None:
        class_count = int(labels[train_idx].max()) + 1
    if model is None:
        model = init_model(X.shape[1], class_count, config.hidden_size, config.seed)
    views = make_views(augmented_graph, original_graph, X, labels, train_idx,
                       with_original=config.contrastive_weight > 0)
    params = {"W1": model.W1.copy(), "W2": model.W2.copy()}
    adam = _Adam(config.learning_rate) if config.optimizer == "adam" else None
    select_idx = val_idx if len(val_idx) else train_idx
    best, best_key = GcnModel(params["W1"].copy(), params["W2"].copy()), (-1.0, -np.inf)
    history = []
    for epoch in range(config.epochs):
        current = GcnModel(params["W1"], params["W2"])
        loss, grads, parts = loss_and_grads(current, views, config)
        if not np.isfinite(loss):
            raise TrainingError(f"non-finite loss at epoch {epoch}: {parts}, "
                                f"|W1|={np.abs(params['W1']).max():.3g}, "
                                f"|W2|={np.abs(params['W2']).max():.3g}")
        logits = views.a_aug @ (np.maximum(views.ax_aug @ params["W1"], 0.0) @ params["W2"])
        val_acc = _accuracy(logits, labels, select_idx)
        val_loss = cross_entropy(logits, labels, select_idx)
        history.append({"epoch": epoch, "loss": loss, "class_loss": parts["class"],
                        "ctr_loss": parts["ctr"], "train_acc": _accuracy(logits, labels, train_idx),
                        "val_acc": val_acc, "val_loss": val_loss})
        # accuracy saturates early on small validation sets; lower loss breaks the tie
        if (val_acc, -val_loss) > best_key:
            best, best_key = GcnModel(params["W1"].copy(), params["W2"].copy()), (val_acc, -val_loss)
        if adam is not None:
            adam.step(params, grads)
        else:
            for k, g in grads.items():
                params[k] -= config.learning_rate * g
    return best, history


def predict(model, adjacency, X) -> np.ndarray:
    return gcn_forward(model, adjacency, X)[1].argmax(axis=1)


def classification_metrics(y_true, y_pred, class_count) -> Metrics:
    """Macro-F1 over all classes (F1 = 0 where undefined), micro-F1, accuracy."""
    y_true, y_pred = np.asarray(y_true), np.asarray(y_pred)
    if len(y_true) == 0:
        raise ValueError("no nodes to evaluate")
    f1 = np.zeros(class_count)
    for c in range(class_count):
        tp = np.sum((y_pred == c) & (y_true == c))
        fp = np.sum((y_pred == c) & (y_true != c))
        fn = np.sum((y_pred != c) & (y_true == c))
        denom = 2 * tp + fp + fn
        f1[c] = 2 * tp / denom if denom else 0.0
    acc = float(np.mean(y_true == y_pred))
    # micro-F1 equals accuracy for single-label multiclass
    return Metrics(float(f1.mean()), acc, acc)


def evaluate(model, adjacency, X, labels, test_mask, class_count=None) -> Metrics:
    idx = _as_index(test_mask, X.shape[0])
    labels = np.asarray(labels)
    if class_count is None:
        class_count = model.W2.shape[1]
    pred = predict(model, adjacency, X)
    return classification_metrics(labels[idx], pred[idx], class_count)


def save_model(model: GcnModel, path) -> None:
    """Text checkpoint: magic/version line, then per matrix a shape header and rows."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{CHECKPOINT_MAGIC} {CHECKPOINT_VERSION}\n")
        for name in ("W1", "W2"):
            w = getattr(model, name)
            fh.write(f"{name} {w.shape[0]} {w.shape[1]}\n")
            for row in w:
                fh.write(" ".join(repr(float(x)) for x in row) + "\n")


def load_model(path) -> GcnModel:
    with open(path, encoding="utf-8") as fh:
        magic, version = fh.readline().split()
        if magic != CHECKPOINT_MAGIC or int(version) != CHECKPOINT_VERSION:
            raise ValueError(f"{path}: not a {CHECKPOINT_MAGIC} v{CHECKPOINT_VERSION} checkpoint")
        mats = {}
        for _ in range(2):
            name, r, c = fh.readline().split()
            rows = [[float(x) for x in fh.readline().split()] for _ in range(int(r))]
            mats[name] = np.asarray(rows, dtype=float).reshape(int(r), int(c))
    return GcnModel(mats["W1"], mats["W2"])


def with_seed(config: TrainConfig, seed: int) -> TrainConfig:
    return replace(config, seed=seed)
