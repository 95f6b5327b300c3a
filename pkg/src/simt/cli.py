"""Command-line entry point: ``simt run|verify|cluster|score|report``."""
from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from .auction import property_suite
from .clustering import greedy_entropy_clustering, read_partition, structural_entropy, write_partition
from .harness.config import ConfigError, ExperimentConfig, dump_config, load_config
from .harness.experiment import prepare_dataset, run_experiment
from .harness.report import emit_report, format_table, read_results
from .importance import importance_scores, write_scores


def _config(args) -> ExperimentConfig:
    if getattr(args, "config", None):
        cfg = load_config(args.config, preset=args.preset)
    else:
        cfg = ExperimentConfig()
        if args.preset:
            cfg = cfg.with_preset(args.preset)
    if getattr(args, "edges", None):
        cfg = replace(cfg, dataset="files", edge_path=args.edges,
                      feature_path=args.features, label_path=args.labels)
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    return cfg


def _graph_source(parser):
    parser.add_argument("--config", help="experiment config naming the dataset")
    parser.add_argument("--edges", help="edge list file")
    parser.add_argument("--features", help="feature matrix file")
    parser.add_argument("--labels", help="label file")


def cmd_run(args) -> int:
    cfg = _config(args)
    out = Path(args.out or "simt-out")
    progress = None if args.quiet else (lambda msg: print(msg, file=sys.stderr, flush=True))
    graph = prepare_dataset(cfg)
    table = run_experiment(cfg, graph, progress=progress)
    paths = emit_report(table, out, graph=graph)
    (out / "config.txt").write_text(dump_config(cfg), encoding="utf-8")
    print(format_table(table), end="")
    print(f"wrote {paths['results']}")
    return 0


def cmd_verify(args) -> int:
    seed = 0 if args.seed is None else args.seed
    report = property_suite(args.instances, seed=seed, owners=args.owners)
    status = "ok" if report.ok else "FAILED"
    print(f"instances={args.instances} owners={args.owners} deviations={report.deviations_checked} "
          f"IC={report.ic} IR={report.ir} BF={report.bf} -> {status}")
    lines = [repr(c) for c in report.counterexamples]
    for line in lines[:5]:
        print("  " + line)
    if args.out:
        Path(args.out).write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")
    return 0 if report.ok else 2


def cmd_cluster(args) -> int:
    cfg = _config(args)
    graph = prepare_dataset(cfg)
    T = args.clusters or cfg.clusters or graph.class_count
    part = greedy_entropy_clustering(graph, T, seed=cfg.seed, max_sweeps=cfg.cluster_sweeps,
                                     restarts=cfg.cluster_restarts)
    print(f"clusters={T} entropy={structural_entropy(graph, part):.6f} "
          f"sizes={part.sizes().tolist()}")
    if args.out:
        write_partition(part, args.out)
    return 0


def cmd_score(args) -> int:
    cfg = _config(args)
    graph = prepare_dataset(cfg)
    if args.partition:
        part = read_partition(graph, args.partition)
    else:
        part = greedy_entropy_clustering(graph, cfg.clusters or graph.class_count, seed=cfg.seed,
                                         max_sweeps=cfg.cluster_sweeps,
                                         restarts=cfg.cluster_restarts)
    scores = importance_scores(graph, part, args.budget, centrality=cfg.centrality, gamma=cfg.gamma)
    print(f"alpha={scores.alpha:.6f} degenerate={int(scores.degenerate.sum())}")
    if args.out:
        write_scores(scores, args.out)
    return 0


def cmd_report(args) -> int:
    table = read_results(args.results)
    out = Path(args.out or Path(args.results).parent)
    emit_report(table, out)
    print(format_table(table), end="")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="simt", description=__doc__)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--out", default=None, help="output file or directory")
    common.add_argument("--preset", choices=("desk", "paper"), default=None)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", parents=[common], help="run an experiment from a config file")
    p.add_argument("config")
    p.add_argument("--quiet", action="store_true")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("verify", parents=[common], help="random-instance mechanism property checks")
    p.add_argument("--instances", type=int, default=10_000)
    p.add_argument("--owners", choices=("single", "grouped"), default="single")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("cluster", parents=[common], help="entropy clustering of a graph")
    _graph_source(p)
    p.add_argument("--clusters", type=int, default=0)
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("score", parents=[common], help="structural importance scores")
    _graph_source(p)
    p.add_argument("--budget", type=float, required=True)
    p.add_argument("--partition", help="partition file from 'simt cluster'")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("report", parents=[common], help="re-render table and figures from results")
    p.add_argument("results")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, OSError, ValueError) as exc:
        print(f"simt: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
