"""Synthetic workload generator producing the historical interaction dataset.

Each task starts at a random terminal, travels along a loop-erased random walk
through terminal relays to a randomly chosen reachable edge device, and logs
one ``forward`` record per relay plus one ``compute`` record at the edge.
Routing is deliberately trust-agnostic.
"""

from __future__ import annotations

import csv
import enum
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

import numpy as np

from cste.domain import Topology

CSV_HEADER = ["task", "trustor", "trustee", "kind", "p_tot", "p_lost", "p_rec", "p_tra", "outcome"]


class RecordKind(str, enum.Enum):
    FORWARD = "forward"
    COMPUTE = "compute"


class RecordFormatError(ValueError):
    pass


@dataclass(frozen=True)
class InteractionRecord:
    """One logged interaction. Packet counters are 0 for compute records, outcome 0 for forwards."""

    task: int
    trustor: str
    trustee: str
    kind: RecordKind
    p_tot: int = 0
    p_lost: int = 0
    p_rec: int = 0
    p_tra: int = 0
    outcome: int = 0

    def __post_init__(self):
        if self.kind is RecordKind.FORWARD:
            if not 0 <= self.p_lost <= self.p_tot:
                raise ValueError(f"p_lost={self.p_lost} outside [0, p_tot={self.p_tot}]")
            if self.p_rec != self.p_tot - self.p_lost:
                raise ValueError(f"p_rec={self.p_rec} != p_tot - p_lost")
            if not 0 <= self.p_tra <= self.p_rec:
                raise ValueError(f"p_tra={self.p_tra} outside [0, p_rec={self.p_rec}]")
        elif self.outcome not in (0, 1):
            raise ValueError(f"outcome must be 0 or 1, got {self.outcome}")


def _reachable_edges(topology: Topology) -> dict[str, list[str]]:
    """Map each terminal to the edge devices it can reach via terminal relays."""
    out: dict[str, list[str]] = {}
    seen: set[str] = set()
    for t in topology.terminals:
        if t.id in seen:
            continue
        comp = {t.id}
        stack = [t.id]
        while stack:
            for n in topology.neighbors(stack.pop()):
                if n not in comp and not topology[n].is_edge:
                    comp.add(n)
                    stack.append(n)
        seen |= comp
        edges = sorted({n for c in comp for n in topology.neighbors(c) if topology[n].is_edge})
        for c in comp:
            out[c] = edges
    return out


def loop_erased_walk(topology: Topology, start: str, target: str, rng: np.random.Generator) -> list[str]:
    """Loop-erased random walk from ``start`` to ``target`` over terminals only."""
    path = [start]
    index = {start: 0}
    cur = start
    while cur != target:
        nbrs = [n for n in topology.neighbors(cur) if n == target or not topology[n].is_edge]
        cur = nbrs[rng.integers(len(nbrs))]
        if cur in index:
            cut = index[cur] + 1
            for dropped in path[cut:]:
                del index[dropped]
            del path[cut:]
        else:
            index[cur] = len(path)
            path.append(cur)
    return path


def run_workload(
    topology: Topology, n_tasks: int, packets_per_task: int = 1000, seed: int = 0
) -> list[InteractionRecord]:
    if n_tasks <= 0:
        raise ValueError("n_tasks must be positive")
    reach = _reachable_edges(topology)
    initiators = [t for t in sorted(reach) if reach[t]]
    if not initiators:
        raise RuntimeError("no terminal device can reach any edge device")

    rng = np.random.default_rng(seed)
    records: list[InteractionRecord] = []
    for task in range(n_tasks):
        init = initiators[rng.integers(len(initiators))]
        targets = reach[init]
        target = targets[rng.integers(len(targets))]
        path = loop_erased_walk(topology, init, target, rng)
        for prev, relay in zip(path[:-2], path[1:-1]):
            b = topology[relay].behavior
            lost = int(rng.binomial(packets_per_task, b.true_plr))
            rec = packets_per_task - lost
            tra = int(rng.binomial(rec, b.true_tfsr))
            records.append(
                InteractionRecord(task, prev, relay, RecordKind.FORWARD, packets_per_task, lost, rec, tra)
            )
        ok = int(rng.random() < topology[target].behavior.exec_success)
        records.append(InteractionRecord(task, init, target, RecordKind.COMPUTE, outcome=ok))
    return records


def persist_records(records: Iterable[InteractionRecord], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for r in records:
            if r.kind is RecordKind.FORWARD:
                w.writerow([r.task, r.trustor, r.trustee, r.kind.value, r.p_tot, r.p_lost, r.p_rec, r.p_tra, ""])
            else:
                w.writerow([r.task, r.trustor, r.trustee, r.kind.value, "", "", "", "", r.outcome])


def load_records(path: str | Path) -> list[InteractionRecord]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != CSV_HEADER:
            raise RecordFormatError(f"line 1: expected header {','.join(CSV_HEADER)}")
        out = []
        for lineno, row in enumerate(reader, start=2):
            try:
                if len(row) != len(CSV_HEADER):
                    raise ValueError(f"expected {len(CSV_HEADER)} fields, got {len(row)}")
                task, trustor, trustee, kind = int(row[0]), row[1], row[2], RecordKind(row[3])
                nums = [int(x) if x != "" else 0 for x in row[4:]]
                out.append(InteractionRecord(task, trustor, trustee, kind, *nums))
            except ValueError as exc:
                raise RecordFormatError(f"line {lineno}: {exc}") from None
        return out
