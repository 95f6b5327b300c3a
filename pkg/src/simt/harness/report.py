"""Aggregated results, their tab-separated file format, text tables and figures.

Results file: one record per line, tab-separated, with a header line::

    mechanism  budget  metric  mean  std  n

``metric`` is one of ``METRICS``.  Accuracy-type metrics are fractions in
[0, 1]; ``contribution`` is mean accuracy in percent divided by the mean
number of bought nodes.  ``empty_runs`` and ``unconverged_runs`` count runs
that bought nothing or whose feature propagation hit the iteration cap.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

METRICS = ("macro_f1", "micro_f1", "accuracy", "bought", "payment", "contribution",
           "empty_runs", "unconverged_runs")
FIELDS = ("mechanism", "budget", "metric", "mean", "std", "n")
# baselines that need a learned graph autoencoder are not implemented
UNAVAILABLE_NOTE = "ASCV, ASCV(P): unavailable"


@dataclass(frozen=True)
class ResultRow:
    mechanism: str
    budget: float
    metric: str
    mean: float
    std: float
    n: int

    def line(self) -> str:
        return f"{self.mechanism}\t{self.budget!r}\t{self.metric}\t{self.mean!r}\t{self.std!r}\t{self.n}"


@dataclass
class ResultsTable:
    rows: list = field(default_factory=list)

    def get(self, mechanism, budget, metric) -> ResultRow:
        for row in self.rows:
            if row.mechanism == mechanism and row.budget == budget and row.metric == metric:
                return row
        raise KeyError((mechanism, budget, metric))

    def mean(self, mechanism, budget, metric) -> float:
        return self.get(mechanism, budget, metric).mean

    @property
    def mechanisms(self) -> list:
        return list(dict.fromkeys(r.mechanism for r in self.rows))

    @property
    def budgets(self) -> list:
        return sorted({r.budget for r in self.rows})

    def overall_contribution(self, mechanism) -> float:
        """Mean accuracy (%) over mean bought count, pooled across budgets."""
        acc = np.mean([self.mean(mechanism, b, "accuracy") for b in self.budgets])
        bought = np.mean([self.mean(mechanism, b, "bought") for b in self.budgets])
        return float(100.0 * acc / bought) if bought > 0 else 0.0

    def __eq__(self, other):
        return isinstance(other, ResultsTable) and self.rows == other.rows


def summarize(records, mechanisms, budgets) -> ResultsTable:
    table = ResultsTable()
    for name in mechanisms:
        for budget in budgets:
            runs = [r for r in records if r.mechanism == name and r.budget == budget]
            n = len(runs)
            if n == 0:
                continue
            stats = {}
            for metric in ("macro_f1", "micro_f1", "accuracy", "bought", "payment"):
                vals = np.array([getattr(r, metric) for r in runs], dtype=float)
                stats[metric] = (float(vals.mean()), float(vals.std()))
            acc, bought = stats["accuracy"][0], stats["bought"][0]
            stats["contribution"] = (100.0 * acc / bought if bought > 0 else 0.0, 0.0)
            stats["empty_runs"] = (float(sum(r.empty for r in runs)), 0.0)
            stats["unconverged_runs"] = (float(sum(not r.converged for r in runs)), 0.0)
            for metric in METRICS:
                mean, std = stats[metric]
                table.rows.append(ResultRow(name, float(budget), metric, mean, std, n))
    return table


def write_results(table: ResultsTable, path) -> Path:
    path = Path(path)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\t".join(FIELDS) + "\n")
        for row in table.rows:
            fh.write(row.line() + "\n")
    return path


def read_results(path) -> ResultsTable:
    table = ResultsTable()
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n").split("\t")
        if tuple(header) != FIELDS:
            raise ValueError(f"{path}: unexpected header {header}")
        for lineno, line in enumerate(fh, 2):
            parts = line.rstrip("\n").split("\t")
            if len(parts) != len(FIELDS):
                raise ValueError(f"{path}:{lineno}: expected {len(FIELDS)} fields")
            name, budget, metric, mean, std, n = parts
            table.rows.append(ResultRow(name, float(budget), metric, float(mean), float(std), int(n)))
    return table


def format_table(table: ResultsTable) -> str:
    """Budget-by-mechanism grid of macro/micro F1 (percent) plus contribution per node."""
    budgets = table.budgets
    head = ["mechanism"] + [f"B={b:g} {m}" for b in budgets for m in ("MaF1", "MiF1")] + ["contrib"]
    lines = [head]
    for name in table.mechanisms:
        row = [name]
        for b in budgets:
            for metric in ("macro_f1", "micro_f1"):
                r = table.get(name, b, metric)
                row.append(f"{100 * r.mean:.1f}±{100 * r.std:.1f}")
        row.append(f"{table.overall_contribution(name):.3f}")
        lines.append(row)
    widths = [max(len(line[i]) for line in lines) for i in range(len(head))]
    body = "\n".join("  ".join(cell.ljust(w) for cell, w in zip(line, widths)).rstrip()
                     for line in lines)
    return body + "\n" + UNAVAILABLE_NOTE + "\n"


def _pyplot():
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    return plt


def plot_accuracy(table: ResultsTable, path, metric="micro_f1") -> Path:
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6, 4))
    budgets = table.budgets
    for name in table.mechanisms:
        rows = [table.get(name, b, metric) for b in budgets]
        ax.errorbar(budgets, [100 * r.mean for r in rows], yerr=[100 * r.std for r in rows],
                    marker="o", capsize=3, label=name)
    ax.set_xlabel("budget")
    ax.set_ylabel(f"{metric} (%)")
    if table.rows:
        ax.legend()
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return Path(path)


def plot_class_edges(proportions, path) -> Path:
    plt = _pyplot()
    C = len(proportions.intra)
    fig, ax = plt.subplots(figsize=(6, 4))
    x = np.arange(C)
    ax.bar(x, proportions.intra, label="intra-class")
    ax.bar(x, proportions.inter, bottom=proportions.intra, label="inter-class")
    ax.set_xticks(x)
    ax.set_xlabel("class")
    ax.set_ylabel("share of incident edges")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return Path(path)


def emit_report(table: ResultsTable, out_dir, graph=None) -> dict:
    """Write results, a text table and figures into ``out_dir``; return their paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "results": write_results(table, out / "results.tsv"),
        "table": out / "table.txt",
        "accuracy_figure": plot_accuracy(table, out / "accuracy_vs_budget.png"),
    }
    paths["table"].write_text(format_table(table), encoding="utf-8")
    if graph is not None:
        from ..graph import class_edge_proportions
        paths["class_edges_figure"] = plot_class_edges(class_edge_proportions(graph),
                                                       out / "class_edges.png")
    return paths
