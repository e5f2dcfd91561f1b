"""Trusted-topology filtering and multi-hop path planning.

The objective is the mean composite trust of the devices a task visits after
leaving its initiator (relays plus the edge device). Edge devices only ever
appear as path endpoints.

Three planners share one interface:

* :func:`astar_plan` - one best-first agent per edge device searching back to
  the initiator, scored by ``f = f1 + f2`` (mean trust on the partial path +
  mean trust of the frontier device's neighbours). Each agent stops at its
  first complete path and the initiator keeps the best one.
* :func:`brute_force_best` - exhaustive enumeration, for small instances.
* :func:`greedy_plan` - hop to the most trusted neighbour, no backtracking.
"""

from __future__ import annotations

import heapq
import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

from cste.domain import Task, Topology

log = logging.getLogger(__name__)

DEFAULT_ORACLE_CAP = 14
TIE_TOL = 1e-12  # averages closer than this count as equal and fall back to id order


class NoTrustedEC(RuntimeError):
    pass


def composite_trust(t_his: float, t_res: int) -> float:
    if not 0.0 <= t_his <= 1.0 or t_res not in (0, 1):
        raise ValueError(f"expected t_his in [0, 1] and t_res in {{0, 1}}, got {t_his}, {t_res}")
    return t_his * t_res


@dataclass(frozen=True)
class TrustedTopology:
    graph: Topology
    initiator: str
    trust: Mapping[str, float]  # composite trust from the initiator's point of view

    def neighbors(self, device_id: str) -> tuple[str, ...]:
        return self.graph.neighbors(device_id)

    def is_edge(self, device_id: str) -> bool:
        return self.graph[device_id].is_edge

    @property
    def edge_ids(self) -> list[str]:
        return [d.id for d in self.graph.edge_devices]


@dataclass(frozen=True)
class PathResult:
    path: tuple[str, ...]
    per_device_trust: tuple[float, ...]
    avg_trust: float
    planner: str = ""

    @classmethod
    def from_path(cls, path, trust: Mapping[str, float], planner: str = "") -> "PathResult":
        per = tuple(float(trust[d]) for d in path[1:])
        return cls(tuple(path), per, sum(per) / len(per), planner)

    def to_dict(self) -> dict:
        return {
            "planner": self.planner,
            "path": list(self.path),
            "per_device_trust": list(self.per_device_trust),
            "avg_trust": self.avg_trust,
        }

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1) + "\n")


def filter_trusted(topology: Topology, trust: Mapping[str, float], task: Task) -> TrustedTopology:
    """Keep the initiator, terminals with trust >= c_tf and edge devices with trust >= c_ec."""
    keep = [task.initiator]
    for d in topology.devices:
        if d.id == task.initiator:
            continue
        threshold = task.c_ec if d.is_edge else task.c_tf
        if trust[d.id] >= threshold:
            keep.append(d.id)
    sub = topology.subgraph(keep)
    if not sub.edge_devices:
        raise NoTrustedEC(f"no edge device meets c_ec={task.c_ec}")
    return TrustedTopology(sub, task.initiator, {k: float(trust[k]) for k in keep if k != task.initiator})


def neighbor_estimate(trusted: TrustedTopology, device_id: str) -> float:
    """Mean trust of a device's trusted neighbours (the initiator has no trust value and is skipped)."""
    vals = [trusted.trust[n] for n in trusted.neighbors(device_id) if n != trusted.initiator]
    return sum(vals) / len(vals) if vals else 0.0


def _agent(trusted: TrustedTopology, start: str, closed: str, max_expansions: int) -> tuple[str, ...] | None:
    """Best-first search from edge device ``start`` back to the initiator.

    ``f = f1 + f2``: f1 is the mean trust of the partial path, f2 the
    neighbour estimate of its frontier device (0 once the initiator is
    reached). ``closed`` selects duplicate detection: ``"state"`` expands each
    (device, hop count) pair once, ``"node"`` each device once, ``"none"``
    keeps every simple path alive (exponential on dense topologies).
    """
    if closed not in ("state", "node", "none"):
        raise ValueError(f"unknown closed-set mode {closed!r}")
    target, trust = trusted.initiator, trusted.trust
    f2 = {d: neighbor_estimate(trusted, d) for d in trusted.graph.ids if d != target}

    # entries: (-f, hops, path, trust sum); ties prefer shorter paths, then smaller ids
    queue = [(-(trust[start] + f2[start]), 1, (start,), trust[start])]
    expanded: set = set()
    expansions = 0
    while queue:
        _, hops, path, total = heapq.heappop(queue)
        cur = path[-1]
        if cur == target:
            return path
        if closed != "none":
            key = (cur, hops) if closed == "state" else cur
            if key in expanded:
                continue
            expanded.add(key)
        expansions += 1
        if expansions > max_expansions:
            log.warning("agent %s gave up after %d expansions", start, max_expansions)
            return None
        for nbr in trusted.neighbors(cur):
            if nbr in path or (trusted.is_edge(nbr) and nbr != target):
                continue
            if nbr == target:
                f = total / hops
                new_total = total
            else:
                new_total = total + trust[nbr]
                f = new_total / (hops + 1) + f2[nbr]
            heapq.heappush(queue, (-f, hops + 1, path + (nbr,), new_total))
    return None


def _best(results: list[PathResult]) -> PathResult | None:
    if not results:
        return None
    return min(results, key=lambda r: (-r.avg_trust, r.path))


def astar_plan(
    trusted: TrustedTopology, initiator: str | None = None, closed: str = "state", max_expansions: int = 100_000
) -> PathResult | None:
    initiator = initiator or trusted.initiator
    if initiator != trusted.initiator:
        raise ValueError("initiator does not match the trusted topology")
    results = []
    for ec in trusted.edge_ids:
        found = _agent(trusted, ec, closed, max_expansions)
        if found is not None:
            results.append(PathResult.from_path(found[::-1], trusted.trust, "cste"))
    return _best(results)


def brute_force_best(trusted: TrustedTopology, initiator: str | None = None, cap: int = DEFAULT_ORACLE_CAP) -> PathResult | None:
    """Exact optimum over all simple initiator-to-edge-device paths.

    Depth-first enumeration with a sound bound: a partial path with trust sum
    ``s`` over ``k`` devices can at best reach ``(s + top_r) / (k + r)``, where
    ``top_r`` sums the ``r`` most trusted unvisited devices. Branches whose
    bound is strictly below the incumbent are cut, so the result (including
    the id-order tie-break) equals plain enumeration. A branch that can at
    most tie is kept only while its prefix could still sort first.
    """
    initiator = initiator or trusted.initiator
    if len(trusted.graph.devices) > cap:
        raise ValueError(f"trusted topology has {len(trusted.graph.devices)} nodes, oracle cap is {cap}")
    trust = trusted.trust
    ids = trusted.graph.ids
    edge = {d: trusted.is_edge(d) for d in ids}
    # most trusted neighbours first so a strong incumbent appears early
    nbrs = {d: sorted(trusted.neighbors(d), key=lambda n: (-trust.get(n, 2.0), n)) for d in ids}
    by_trust = sorted((d for d in ids if d != initiator), key=lambda d: -trust[d])
    best: tuple[float, tuple[str, ...]] | None = None  # (avg, path)

    def bound(visited: set, total: float, k: int) -> float:
        out, s, r = -1.0, total, 0
        for d in by_trust:
            if d not in visited:
                s += trust[d]
                r += 1
                if s / (k + r) > out:
                    out = s / (k + r)
        return out

    def extend(path: list[str], visited: set, total: float):
        nonlocal best
        k = len(path) - 1
        if best is not None:
            b = bound(visited, total, k)
            if b < best[0] - TIE_TOL:
                return
            if b <= best[0] + TIE_TOL and tuple(path) > best[1][: len(path)]:
                return
        for nbr in nbrs[path[-1]]:
            if nbr in visited:
                continue
            t = total + trust[nbr]
            if edge[nbr]:
                avg, cand = t / (k + 1), tuple(path) + (nbr,)
                if best is None or avg > best[0] + TIE_TOL or (avg >= best[0] - TIE_TOL and cand < best[1]):
                    best = (avg, cand)
            else:
                path.append(nbr)
                visited.add(nbr)
                extend(path, visited, t)
                visited.discard(nbr)
                path.pop()

    extend([initiator], {initiator}, 0.0)
    return None if best is None else PathResult.from_path(best[1], trust, "oracle")


def greedy_plan(trusted: TrustedTopology, initiator: str | None = None) -> PathResult | None:
    initiator = initiator or trusted.initiator
    trust = trusted.trust
    path = [initiator]
    while True:
        options = [n for n in trusted.neighbors(path[-1]) if n not in path]
        ecs = [n for n in options if trusted.is_edge(n)]
        pool = ecs or options
        if not pool:
            return None
        nxt = min(pool, key=lambda n: (-trust[n], n))
        path.append(nxt)
        if trusted.is_edge(nxt):
            return PathResult.from_path(path, trust, "greedy")
