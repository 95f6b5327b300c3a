"""Experiment configuration and its flat ``key = value`` file format."""
from __future__ import annotations

from dataclasses import dataclass, fields, replace

MECHANISMS = ("simt", "greedy", "greedy_p", "random",
              "no_cluster", "no_rep", "no_info", "no_edge_aug")

PRESETS = {
    "desk": {"outer_runs": 3, "split_runs": 3},
    "paper": {"outer_runs": 10, "split_runs": 10},
}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    # dataset: "sbm" or "files"
    dataset: str = "sbm"
    edge_path: str = ""
    feature_path: str = ""
    label_path: str = ""
    sbm_classes: int = 5
    sbm_nodes_per_class: int = 200
    sbm_p_in: float = 0.05
    sbm_p_out: float = 0.002
    sbm_feature_dim: int = 16
    sbm_signal: float = 1.0
    sbm_seed: int = 7

    owner_count: int = 10
    subgraph_size: int = 80
    budgets: tuple = (50.0, 100.0, 150.0, 200.0, 250.0, 300.0)
    sigma: float = 0.1
    theta_upper: float = 2.0
    mechanisms: tuple = ("simt", "greedy", "greedy_p")
    centrality: str = "pagerank"
    gamma: float = 0.85
    clusters: int = 0  # 0: use the label cardinality
    cluster_restarts: int = 10
    cluster_sweeps: int = 50

    test_fraction: float = 0.15
    train_fraction: float = 0.8
    outer_runs: int = 3
    split_runs: int = 3
    seed: int = 0

    propagation_tol: float = 1e-6
    propagation_max_iter: int = 200
    epochs: int = 200
    learning_rate: float = 0.01
    weight_decay: float = 5e-4
    contrastive_weight: float = 1.0
    temperature: float = 0.5
    hidden_size: int = 32
    optimizer: str = "adam"

    def __post_init__(self):
        if self.dataset not in ("sbm", "files"):
            raise ConfigError(f"dataset must be 'sbm' or 'files', got {self.dataset!r}")
        if not self.budgets or any(b <= 0 for b in self.budgets):
            raise ConfigError("budgets must be a non-empty list of positive numbers")
        if self.outer_runs < 1 or self.split_runs < 1:
            raise ConfigError("run counts must be >= 1")
        unknown = set(self.mechanisms) - set(MECHANISMS)
        if unknown:
            raise ConfigError(f"unknown mechanisms: {sorted(unknown)}")
        if self.centrality not in ("pagerank", "degree"):
            raise ConfigError(f"unknown centrality {self.centrality!r}")
        if not 0 < self.test_fraction < 1 or not 0 < self.train_fraction <= 1:
            raise ConfigError("fractions must lie in (0, 1)")

    def with_preset(self, name: str) -> "ExperimentConfig":
        if name not in PRESETS:
            raise ConfigError(f"unknown preset {name!r}")
        return replace(self, **PRESETS[name])


def _convert(name, raw, default):
    try:
        if isinstance(default, tuple):
            items = [x.strip() for x in raw.split(",") if x.strip()]
            if name == "budgets":
                return tuple(float(x) for x in items)
            return tuple(items)
        if isinstance(default, bool):
            return raw.lower() in ("1", "true", "yes")
        if isinstance(default, int):
            return int(raw)
        if isinstance(default, float):
            return float(raw)
    except ValueError:
        raise ConfigError(f"bad value for {name}: {raw!r}") from None
    return raw


def parse_config(text: str, base: ExperimentConfig | None = None) -> ExperimentConfig:
    """Parse ``key = value`` lines; ``#`` starts a comment; lists are comma-separated."""
    base = base or ExperimentConfig()
    known = {f.name: getattr(base, f.name) for f in fields(ExperimentConfig)}
    updates = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, raw = (s.strip() for s in line.split("=", 1))
        if key not in known:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        updates[key] = _convert(key, raw, known[key])
    return replace(base, **updates)


def load_config(path, preset=None) -> ExperimentConfig:
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    base = ExperimentConfig().with_preset(preset) if preset else None
    return parse_config(text, base)


def dump_config(config: ExperimentConfig) -> str:
    lines = []
    for f in fields(config):
        value = getattr(config, f.name)
        if isinstance(value, tuple):
            value = ", ".join(f"{v:g}" if isinstance(v, float) else str(v) for v in value)
        lines.append(f"{f.name} = {value}")
    return "\n".join(lines) + "\n"
