"""Direct trust from interaction records and the directed interaction graph.

Terminal-to-terminal edges carry forwarding trust, a weighted mix of the
link's packet-delivery ratio and the relay's forwarding success ratio.
Terminal-to-edge edges carry computing trust, the empirical success rate.
"""

from __future__ import annotations

import csv
import logging
import math
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from cste.domain import Topology
from cste.netsim import InteractionRecord, RecordKind

log = logging.getLogger(__name__)

DEFAULT_ALPHA = (0.6, 0.4)
DEFAULT_BINS = 10
EDGE_LIST_HEADER = ["trustor", "trustee", "direct_trust", "n_interactions"]


class NoInteractions(ValueError):
    pass


def plr_trust(records: Sequence[InteractionRecord]) -> float:
    """Mean packet-delivery ratio ``1 - p_lost / p_tot`` over forwarding records."""
    if not records:
        raise NoInteractions("no interactions")
    total = 0.0
    for r in records:
        if r.p_tot <= 0:
            raise ValueError(f"task {r.task}: p_tot must be positive")
        total += 1.0 - r.p_lost / r.p_tot
    return total / len(records)


def tfsr_trust(records: Sequence[InteractionRecord]) -> float:
    """Mean forwarding ratio ``p_tra / p_rec``; records with nothing received are skipped."""
    eligible = [r for r in records if r.p_rec > 0]
    if not eligible:
        raise NoInteractions("no record with received packets")
    return sum(r.p_tra / r.p_rec for r in eligible) / len(eligible)


def direct_trust_tf(t_plr: float, t_tfsr: float, alpha1: float = 0.6, alpha2: float = 0.4) -> float:
    if not (0.0 <= alpha1 <= 1.0 and 0.0 <= alpha2 <= 1.0) or abs(alpha1 + alpha2 - 1.0) > 1e-12:
        raise ValueError(f"weights must lie in [0, 1] and sum to 1, got ({alpha1}, {alpha2})")
    return alpha1 * t_plr + alpha2 * t_tfsr


def direct_trust_ec(records: Sequence[InteractionRecord]) -> float:
    if not records:
        raise NoInteractions("no interactions")
    return sum(r.outcome for r in records) / len(records)


@dataclass(frozen=True)
class TrustClass:
    bins: int
    class_index: int
    code: tuple[int, ...]


def code_length(bins: int) -> int:
    return max(1, math.ceil(math.log2(bins)))


def encode(class_index: int, bins: int) -> tuple[int, ...]:
    """LSB-first binary expansion of ``class_index`` on ``code_length(bins)`` bits."""
    return tuple((class_index >> k) & 1 for k in range(code_length(bins)))


def discretize(trust: float, bins: int = DEFAULT_BINS) -> TrustClass:
    if bins < 2:
        raise ValueError("need at least two bins")
    if not 0.0 <= trust <= 1.0:
        raise ValueError(f"trust {trust} outside [0, 1]")
    k = min(int(math.floor(trust * bins)), bins - 1)
    return TrustClass(bins, k, encode(k, bins))


@dataclass(frozen=True)
class TrustEdge:
    direct_trust: float
    n_interactions: int


@dataclass
class InteractionGraph:
    nodes: list[str]
    edge_nodes: frozenset[str]
    edges: dict[tuple[str, str], TrustEdge] = field(default_factory=dict)

    def in_neighbors(self, node: str) -> list[str]:
        return sorted(u for (u, v) in self.edges if v == node)

    def out_neighbors(self, node: str) -> list[str]:
        return sorted(v for (u, v) in self.edges if u == node)

    def out_degree(self, node: str) -> int:
        return sum(1 for (u, _) in self.edges if u == node)

    def sorted_edges(self) -> list[tuple[str, str]]:
        return sorted(self.edges)

    def save_edge_list(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(EDGE_LIST_HEADER)
            for (u, v) in self.sorted_edges():
                e = self.edges[(u, v)]
                w.writerow([u, v, repr(e.direct_trust), e.n_interactions])

    @classmethod
    def load_edge_list(cls, path: str | Path, topology: Topology) -> "InteractionGraph":
        g = cls(topology.ids, frozenset(d.id for d in topology.edge_devices))
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            if next(reader, None) != EDGE_LIST_HEADER:
                raise ValueError(f"{path}: bad edge-list header")
            for lineno, row in enumerate(reader, start=2):
                try:
                    u, v, t, n = row
                    g.edges[(u, v)] = TrustEdge(float(t), int(n))
                except ValueError as exc:
                    raise ValueError(f"{path} line {lineno}: {exc}") from None
        return g


def build_graph(
    records: Iterable[InteractionRecord],
    alpha1: float = 0.6,
    alpha2: float = 0.4,
    topology: Topology | None = None,
) -> InteractionGraph:
    """One edge per (trustor, trustee) pair with at least one record.

    Node set and device kinds come from ``topology`` when given, otherwise
    from the records (compute trustees are taken to be edge devices).
    """
    groups: dict[tuple[str, str], list[InteractionRecord]] = defaultdict(list)
    nodes: set[str] = set()
    edge_nodes: set[str] = set()
    for r in records:
        groups[(r.trustor, r.trustee)].append(r)
        nodes.update((r.trustor, r.trustee))
        if r.kind is RecordKind.COMPUTE:
            edge_nodes.add(r.trustee)
    if topology is not None:
        nodes = set(topology.ids)
        edge_nodes = {d.id for d in topology.edge_devices}

    g = InteractionGraph(sorted(nodes), frozenset(edge_nodes))
    for pair in sorted(groups):
        recs = sorted(groups[pair], key=lambda r: r.task)
        if pair[1] in edge_nodes:
            weight = direct_trust_ec(recs)
        else:
            try:
                t_tfsr = tfsr_trust(recs)
            except NoInteractions:
                log.warning("edge %s->%s: no packets received, TFSR set to 0", *pair)
                t_tfsr = 0.0
            weight = direct_trust_tf(plr_trust(recs), t_tfsr, alpha1, alpha2)
        g.edges[pair] = TrustEdge(weight, len({r.task for r in recs}))
    return g
