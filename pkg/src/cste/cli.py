"""Command-line entry point: one subcommand per pipeline stage plus the sweeps.

Every subcommand takes ``--config`` (JSON, see README) and ``--seed``, which
replaces all stage seeds with ones derived from a single master seed. Stage
subcommands read the previous stage's files and write their own, so a run can
be resumed or inspected at any point. Failures print ``error: [stage] ...`` to
stderr and exit with status 1.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from cste.domain import Topology, build_random_topology
from cste.embed import EmbeddingTable
from cste.experiment import (
    ExperimentConfig,
    StageError,
    evaluation_initiators,
    load_trust,
    make_embeddings,
    plan_tasks,
    run_pipeline,
    save_trust,
    sweep_plr,
    sweep_tfsr,
    write_artifacts,
    write_summary,
)
from cste.gnnet import train
from cste.netsim import load_records, persist_records, run_workload
from cste.trustgraph import InteractionGraph, build_graph

log = logging.getLogger("cste")


def _config(args) -> ExperimentConfig:
    cfg = ExperimentConfig.load(args.config) if args.config else ExperimentConfig()
    return cfg.with_seed(args.seed) if args.seed is not None else cfg


def cmd_topology(args, cfg):
    topo = build_random_topology(cfg.topology, cfg.seeds.topology)
    topo.save(args.out)
    print(f"{len(topo.devices)} devices, {len(topo.links)} links -> {args.out}")


def cmd_simulate(args, cfg):
    topo = Topology.load(args.topology)
    records = run_workload(topo, cfg.workload.n_tasks, cfg.workload.packets_per_task, cfg.seeds.workload)
    persist_records(records, args.out)
    print(f"{len(records)} records -> {args.out}")


def cmd_build_graph(args, cfg):
    topo = Topology.load(args.topology)
    graph = build_graph(load_records(args.records), cfg.trust.alpha1, cfg.trust.alpha2, topo)
    graph.save_edge_list(args.out)
    print(f"{len(graph.edges)} trust edges -> {args.out}")


def cmd_embed(args, cfg):
    graph = InteractionGraph.load_edge_list(args.graph, Topology.load(args.topology))
    emb = make_embeddings(graph, cfg)
    emb.save_csv(args.out)
    print(f"{len(emb.ids)} x {emb.dim} embeddings -> {args.out}")


def cmd_train(args, cfg):
    graph = InteractionGraph.load_edge_list(args.graph, Topology.load(args.topology))
    emb = EmbeddingTable.load_csv(args.embeddings)
    model, trust, metrics = train(graph, emb, cfg.gnn, cfg.seeds.train)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    model.save(out / "model.json")
    metrics.save_csv(out / "metrics.csv")
    save_trust(trust, out / "trust.csv")
    last = metrics.rows[-1]
    print(f"test acc {last['test_acc']:.3f} (majority {metrics.majority_baseline:.3f}) -> {out}")


def cmd_plan(args, cfg):
    topo = Topology.load(args.topology)
    trust = load_trust(args.trust, cfg.gnn.readout)
    initiators = [args.initiator] if args.initiator else evaluation_initiators(topo, cfg.eval.n_tasks, cfg.seeds.eval)
    outcomes = plan_tasks(topo, trust, cfg, initiators)
    write_summary(outcomes, args.out)
    for o in outcomes:
        if o.planner == "cste" and args.initiator:
            print(json.dumps(o.result.to_dict() if o.result else {"status": o.status}))
    print(f"{len(initiators)} tasks planned -> {args.out}")


def cmd_pipeline(args, cfg):
    res = run_pipeline(cfg)
    write_artifacts(res, cfg, Path(args.out_dir))
    for planner in ("cste", "greedy", "oracle_reduced"):
        mean, std = res.mean_avg_trust(planner)
        print(f"{planner:15s} mean avg trust {mean:.4f} (std {std:.4f})")


def cmd_sweep(fn):
    def run(args, cfg):
        for r in fn(cfg, args.out):
            print(", ".join(f"{k}={v:.4f}" if isinstance(v, float) else f"{k}={v}" for k, v in r.items()))

    return run


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file; omitted keys take defaults")
    common.add_argument("--seed", type=int, help="master seed overriding every seed in the config")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="cste", description="Trust evaluation and path planning for collaborative edge networks.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, fn, help_text, **files):
        p = sub.add_parser(name, parents=[common], help=help_text)
        for flag, desc in files.items():
            p.add_argument(f"--{flag.replace('_', '-')}", required=True, help=desc)
        p.set_defaults(func=fn)
        return p

    add("topology", cmd_topology, "generate a random topology", out="topology JSON to write")
    add("simulate", cmd_simulate, "run the task workload", topology="topology JSON", out="record CSV to write")
    add("build-graph", cmd_build_graph, "direct trust graph from records",
        topology="topology JSON", records="record CSV", out="edge-list CSV to write")
    add("embed", cmd_embed, "initial node embeddings", topology="topology JSON", graph="edge-list CSV",
        out="embedding CSV to write")
    add("train", cmd_train, "train the GNN and read out historical trust", topology="topology JSON",
        graph="edge-list CSV", embeddings="embedding CSV", out_dir="directory for model, metrics and trust")
    p = add("plan", cmd_plan, "plan evaluation tasks", topology="topology JSON", trust="trust CSV from train",
            out="summary CSV to write")
    p.add_argument("--initiator", help="plan a single task from this terminal and print the path")
    add("pipeline", cmd_pipeline, "run every stage and write all artifacts", out_dir="output directory")
    add("sweep-plr", cmd_sweep(sweep_plr), "packet loss sweep", out="sweep CSV to write")
    add("sweep-tfsr", cmd_sweep(sweep_tfsr), "forwarding success sweep", out="sweep CSV to write")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = _config(args)
    except Exception as exc:  # noqa: BLE001
        print(f"error: [config] {exc}", file=sys.stderr)
        return 1
    try:
        args.func(args, cfg)
    except StageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001
        print(f"error: [{args.command}] {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
