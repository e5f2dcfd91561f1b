"""End-to-end pipeline and the packet-loss / forwarding-success sweeps.

Configuration is a JSON document whose top-level sections mirror
:class:`ExperimentConfig`; any omitted key takes its default. See
``README.md`` for the full field list.
"""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Mapping

import numpy as np

from cste.domain import BITS_PER_MB, BehaviorProfile, Task, Topology, TopologyConfig, build_random_topology
from cste.embed import EmbeddingTable, WalkParams, gaussian_embeddings, init_embeddings
from cste.gnnet import GnnHyper, GnnModel, TrainedTrust, TrainMetrics, train
from cste.netsim import InteractionRecord, persist_records, run_workload
from cste.planner import (
    DEFAULT_ORACLE_CAP,
    NoTrustedEC,
    PathResult,
    TrustedTopology,
    astar_plan,
    brute_force_best,
    composite_trust,
    filter_trusted,
    greedy_plan,
)
from cste.restrust import CPU_ENERGY_EPS, RadioModel, resource_trust_map
from cste.trustgraph import InteractionGraph, build_graph

log = logging.getLogger(__name__)

PLANNERS = ("cste", "greedy", "oracle_reduced")
SUMMARY_HEADER = ["task", "initiator", "planner", "path_len", "avg_trust", "success", "status", "path"]


class StageError(RuntimeError):
    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"[{stage}] {cause}")
        self.stage = stage


@dataclass(frozen=True)
class WorkloadConfig:
    n_tasks: int = 5000
    packets_per_task: int = 1000


@dataclass(frozen=True)
class TrustConfig:
    alpha1: float = 0.6
    alpha2: float = 0.4


@dataclass(frozen=True)
class TaskConfig:
    c_des: float = 2339.0
    c_size: float = 50 * BITS_PER_MB
    c_tf: float = 0.4
    c_ec: float = 0.3


@dataclass(frozen=True)
class EvalConfig:
    n_tasks: int = 30
    oracle_cap: int = DEFAULT_ORACLE_CAP
    radio_e_elec: float = 50e-9
    radio_e_amp: float = 100e-12
    cpu_eps: float = CPU_ENERGY_EPS
    embedding: str = "node2vec"  # or "gaussian"


@dataclass(frozen=True)
class SweepConfig:
    plr_grid: tuple[float, ...] = tuple(round(0.02 * k, 2) for k in range(9))
    tfsr_grid: tuple[float, ...] = tuple(round(0.5 + 0.05 * k, 2) for k in range(11))
    affected_fraction: float = 2 / 3
    # trust readout used inside sweeps; the top-class probability measures
    # confidence and stays near 1 for confidently bad devices, hiding the trend
    readout: str | None = "expected"  # None keeps gnn.readout

    def __post_init__(self):
        for v in self.plr_grid + self.tfsr_grid + (self.affected_fraction,):
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"sweep value {v} outside [0, 1]")
        if self.readout not in (None, "max", "expected"):
            raise ValueError(f"unknown readout {self.readout!r}")


@dataclass(frozen=True)
class Seeds:
    topology: int = 42
    workload: int = 7
    embed: int = 11
    train: int = 13
    eval: int = 17
    sweep: int = 19

    @classmethod
    def from_master(cls, seed: int) -> "Seeds":
        ss = np.random.SeedSequence(seed).generate_state(6)
        return cls(*(int(s) for s in ss))


@dataclass(frozen=True)
class ExperimentConfig:
    topology: TopologyConfig = field(default_factory=TopologyConfig)
    workload: WorkloadConfig = field(default_factory=WorkloadConfig)
    trust: TrustConfig = field(default_factory=TrustConfig)
    walk: WalkParams = field(default_factory=WalkParams)
    gnn: GnnHyper = field(default_factory=GnnHyper)
    task: TaskConfig = field(default_factory=TaskConfig)
    eval: EvalConfig = field(default_factory=EvalConfig)
    sweep: SweepConfig = field(default_factory=SweepConfig)
    seeds: Seeds = field(default_factory=Seeds)

    @classmethod
    def from_dict(cls, doc: Mapping) -> "ExperimentConfig":
        unknown = set(doc) - {f.name for f in fields(cls)}
        if unknown:
            raise ValueError(f"unknown config sections: {sorted(unknown)}")
        kw = {}
        for f in fields(cls):
            if f.name in doc:
                section_cls = type(f.default_factory())
                sec = dict(doc[f.name])
                bad = set(sec) - {g.name for g in fields(section_cls)}
                if bad:
                    raise ValueError(f"unknown keys in [{f.name}]: {sorted(bad)}")
                kw[f.name] = section_cls(**{k: tuple(v) if isinstance(v, list) else v for k, v in sec.items()})
        return cls(**kw)

    @classmethod
    def load(cls, path: str | Path) -> "ExperimentConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def to_dict(self) -> dict:
        return {f.name: asdict(getattr(self, f.name)) for f in fields(self)}

    def with_seed(self, seed: int) -> "ExperimentConfig":
        return replace(self, seeds=Seeds.from_master(seed))


# -- stages ---------------------------------------------------------------------


def _stage(name, fn, *args, **kw):
    try:
        return fn(*args, **kw)
    except StageError:
        raise
    except Exception as exc:  # noqa: BLE001 - re-raised with the stage tag
        raise StageError(name, exc) from exc


def make_embeddings(graph: InteractionGraph, cfg: ExperimentConfig) -> EmbeddingTable:
    if cfg.eval.embedding == "gaussian":
        return gaussian_embeddings(graph.nodes, cfg.walk.dim, cfg.seeds.embed)
    if cfg.eval.embedding != "node2vec":
        raise ValueError(f"unknown embedding method {cfg.eval.embedding!r}")
    return init_embeddings(graph, cfg.walk, cfg.seeds.embed)


def evaluation_initiators(topology: Topology, n: int, seed: int) -> list[str]:
    """Terminals without a direct edge-device link, so every task needs relays."""
    far = [d.id for d in topology.terminals if not any(topology[x].is_edge for x in topology.neighbors(d.id))]
    pool = far or [d.id for d in topology.terminals]
    rng = np.random.default_rng(seed)
    return [pool[k] for k in rng.integers(len(pool), size=n)]


def reduced_instance(trusted: TrustedTopology, cap: int) -> TrustedTopology:
    """At most ``cap`` devices around the initiator, small enough for the exact oracle.

    Starts from a fewest-hop route to the nearest reachable edge device (when
    it fits) and fills up with devices in breadth-first order.
    """
    parent = {trusted.initiator: None}
    order = [trusted.initiator]
    k = 0
    while k < len(order):
        cur = order[k]
        k += 1
        if trusted.is_edge(cur):
            continue
        for n in trusted.neighbors(cur):
            if n not in parent:
                parent[n] = cur
                order.append(n)
    keep = []
    nearest = next((d for d in order if trusted.is_edge(d)), None)
    while nearest is not None:
        keep.append(nearest)
        nearest = parent[nearest]
    keep = keep[::-1] if len(keep) <= cap else [trusted.initiator]
    for d in order:
        if len(keep) >= cap:
            break
        if d not in keep:
            keep.append(d)
    sub = trusted.graph.subgraph(keep)
    return TrustedTopology(sub, trusted.initiator, {d: trusted.trust[d] for d in keep if d != trusted.initiator})


@dataclass
class PlanOutcome:
    task: int
    initiator: str
    planner: str
    result: PathResult | None
    status: str

    @property
    def avg_trust(self) -> float:
        return self.result.avg_trust if self.result else 0.0


def plan_tasks(
    topology: Topology, t_his: TrainedTrust, cfg: ExperimentConfig, initiators: list[str]
) -> list[PlanOutcome]:
    radio = RadioModel(cfg.eval.radio_e_elec, cfg.eval.radio_e_amp)
    out = []
    for k, init in enumerate(initiators):
        task = Task(init, **asdict(cfg.task))
        t_res = resource_trust_map(topology, task, radio, cfg.eval.cpu_eps)
        trust = {d: composite_trust(t_his[(init, d)], t_res[d]) for d in t_res}
        try:
            trusted = filter_trusted(topology, trust, task)
        except NoTrustedEC:
            out.extend(PlanOutcome(k, init, p, None, "no trusted EC") for p in PLANNERS)
            continue
        reduced = reduced_instance(trusted, cfg.eval.oracle_cap)
        for name, res in (
            ("cste", astar_plan(trusted)),
            ("greedy", greedy_plan(trusted)),
            ("oracle_reduced", brute_force_best(reduced, cap=cfg.eval.oracle_cap)),
        ):
            out.append(PlanOutcome(k, init, name, res, "ok" if res else "no path"))
    return out


@dataclass
class PipelineResult:
    topology: Topology
    records: list[InteractionRecord]
    graph: InteractionGraph
    embeddings: EmbeddingTable
    model: GnnModel
    trust: TrainedTrust
    metrics: TrainMetrics
    outcomes: list[PlanOutcome]

    def mean_avg_trust(self, planner: str) -> tuple[float, float]:
        vals = np.array([o.avg_trust for o in self.outcomes if o.planner == planner])
        return float(vals.mean()), float(vals.std())


def run_pipeline(
    cfg: ExperimentConfig, out_dir: str | Path | None = None, topology: Topology | None = None
) -> PipelineResult:
    """topology -> workload -> graph -> embeddings -> GNN -> resource trust -> filter -> plan."""
    s = cfg.seeds
    if topology is None:
        topology = _stage("topology", build_random_topology, cfg.topology, s.topology)
    records = _stage("simulate", run_workload, topology, cfg.workload.n_tasks, cfg.workload.packets_per_task, s.workload)
    graph = _stage("build-graph", build_graph, records, cfg.trust.alpha1, cfg.trust.alpha2, topology)
    emb = _stage("embed", make_embeddings, graph, cfg)
    model, t_his, metrics = _stage("train", train, graph, emb, cfg.gnn, s.train)
    initiators = evaluation_initiators(topology, cfg.eval.n_tasks, s.eval)
    outcomes = _stage("plan", plan_tasks, topology, t_his, cfg, initiators)
    result = PipelineResult(topology, records, graph, emb, model, t_his, metrics, outcomes)
    if out_dir is not None:
        _stage("write", write_artifacts, result, cfg, Path(out_dir))
    return result


def save_trust(trust: TrainedTrust, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["trustor", "trustee", "t_his"])
        for (u, v) in sorted(trust.t_his):
            w.writerow([u, v, repr(trust.t_his[(u, v)])])


def load_trust(path: str | Path, readout: str = "max") -> TrainedTrust:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        next(reader)
        return TrainedTrust({(u, v): float(t) for u, v, t in reader}, readout)


def write_summary(outcomes: list[PlanOutcome], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SUMMARY_HEADER)
        for o in outcomes:
            r = o.result
            w.writerow(
                [
                    o.task,
                    o.initiator,
                    o.planner,
                    len(r.path) - 1 if r else 0,
                    repr(o.avg_trust),
                    int(r is not None),
                    o.status,
                    " ".join(r.path) if r else "",
                ]
            )


def write_artifacts(result: PipelineResult, cfg: ExperimentConfig, out: Path) -> None:
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.json").write_text(json.dumps(cfg.to_dict(), indent=1) + "\n")
    result.topology.save(out / "topology.json")
    persist_records(result.records, out / "records.csv")
    result.graph.save_edge_list(out / "graph.csv")
    result.embeddings.save_csv(out / "embeddings.csv")
    result.model.save(out / "model.json")
    result.metrics.save_csv(out / "metrics.csv")
    save_trust(result.trust, out / "trust.csv")
    write_summary(result.outcomes, out / "summary.csv")


# -- sweeps ---------------------------------------------------------------------


def affected_terminals(topology: Topology, fraction: float, seed: int) -> list[str]:
    ids = [d.id for d in topology.terminals]
    k = int(round(fraction * len(ids)))
    rng = np.random.default_rng(seed)
    return sorted(ids[i] for i in rng.choice(len(ids), size=k, replace=False))


def inject(topology: Topology, devices: list[str], *, plr: float | None = None, tfsr: float | None = None) -> Topology:
    changed = {}
    for d in devices:
        b = topology[d].behavior
        changed[d] = BehaviorProfile(
            true_plr=b.true_plr if plr is None else plr,
            true_tfsr=b.true_tfsr if tfsr is None else tfsr,
            exec_success=b.exec_success,
        )
    return topology.with_behaviors(changed)


SWEEP_HEADER_TAIL = ["planner", "mean_avg_trust", "std"]


def _sweep(cfg: ExperimentConfig, variable: str, grid, out_csv: str | Path | None) -> list[dict]:
    if cfg.sweep.readout is not None:
        cfg = replace(cfg, gnn=replace(cfg.gnn, readout=cfg.sweep.readout))
    base = _stage("topology", build_random_topology, cfg.topology, cfg.seeds.topology)
    victims = affected_terminals(base, cfg.sweep.affected_fraction, cfg.seeds.sweep)
    rows = []
    for value in grid:
        log.info("%s sweep: %s = %.2f", variable, variable, value)
        topo = inject(base, victims, **{variable: value})
        res = run_pipeline(cfg, topology=topo)
        for planner in PLANNERS:
            mean, std = res.mean_avg_trust(planner)
            rows.append({variable: value, "planner": planner, "mean_avg_trust": mean, "std": std})
    if out_csv is not None:
        with open(out_csv, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow([variable] + SWEEP_HEADER_TAIL)
            for r in rows:
                w.writerow([repr(r[variable]), r["planner"], repr(r["mean_avg_trust"]), repr(r["std"])])
    return rows


def sweep_plr(cfg: ExperimentConfig, out_csv: str | Path | None = None) -> list[dict]:
    """Set the packet loss rate of the affected terminals to each grid value and rerun everything."""
    return _sweep(cfg, "plr", cfg.sweep.plr_grid, out_csv)


def sweep_tfsr(cfg: ExperimentConfig, out_csv: str | Path | None = None) -> list[dict]:
    """Same as :func:`sweep_plr` for the task forwarding success rate."""
    return _sweep(cfg, "tfsr", cfg.sweep.tfsr_grid, out_csv)
