"""Devices, tasks and the physical network topology.

Terminal devices (ids ``a00``, ``a01``, ...) initiate and relay tasks; edge
computing devices (ids ``b00``, ...) execute them. Topologies are 2D random
geometric graphs: two devices are linked when they lie within the connection
radius of each other.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

BITS_PER_MB = 8_000_000


class TopologyError(RuntimeError):
    pass


class DeviceKind(str, enum.Enum):
    TERMINAL = "terminal"
    EDGE = "edge"


@dataclass(frozen=True)
class BehaviorProfile:
    """Ground-truth behaviour the simulator samples interactions from."""

    true_plr: float = 0.0
    true_tfsr: float = 1.0
    exec_success: float = 1.0

    def __post_init__(self):
        for name in ("true_plr", "true_tfsr", "exec_success"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v}")


@dataclass(frozen=True)
class Device:
    id: str
    kind: DeviceKind
    position: tuple[float, float]
    cpu_freq: float = 0.0  # GHz, edge devices only
    energy_avail: float = 0.0  # J
    storage_avail: float = 0.0  # bits
    idle: bool = True
    behavior: BehaviorProfile = field(default_factory=BehaviorProfile)

    def __post_init__(self):
        if self.energy_avail < 0 or self.storage_avail < 0:
            raise ValueError(f"{self.id}: energy and storage must be non-negative")
        if self.kind is DeviceKind.EDGE and not self.cpu_freq > 0:
            raise ValueError(f"{self.id}: edge devices need cpu_freq > 0")

    @property
    def is_edge(self) -> bool:
        return self.kind is DeviceKind.EDGE


@dataclass(frozen=True)
class Task:
    """A computation task: (processing density, size, TF threshold, EC threshold).

    Thresholds above 1 are accepted and simply mean that no device qualifies.
    """

    initiator: str
    c_des: float = 2339.0  # cycles/bit
    c_size: float = 50 * BITS_PER_MB  # bits
    c_tf: float = 0.4
    c_ec: float = 0.3

    def __post_init__(self):
        if not self.c_des > 0 or not self.c_size > 0:
            raise ValueError("c_des and c_size must be positive")
        if self.c_tf < 0 or self.c_ec < 0:
            raise ValueError("trust thresholds must be non-negative")


def _link(u: str, v: str) -> tuple[str, str]:
    return (u, v) if u < v else (v, u)


@dataclass(frozen=True)
class Topology:
    devices: tuple[Device, ...]
    links: frozenset[tuple[str, str]]

    def __post_init__(self):
        ids = {d.id for d in self.devices}
        if len(ids) != len(self.devices):
            raise ValueError("duplicate device ids")
        for u, v in self.links:
            if u == v:
                raise ValueError(f"self-link on {u}")
            if u not in ids or v not in ids:
                raise ValueError(f"link ({u}, {v}) references an unknown device")
        object.__setattr__(self, "_by_id", {d.id: d for d in self.devices})
        adj: dict[str, list[str]] = {d.id: [] for d in self.devices}
        for u, v in self.links:
            adj[u].append(v)
            adj[v].append(u)
        object.__setattr__(self, "_adj", {k: tuple(sorted(v)) for k, v in adj.items()})

    def __getitem__(self, device_id: str) -> Device:
        return self._by_id[device_id]

    def __contains__(self, device_id: str) -> bool:
        return device_id in self._by_id

    @property
    def ids(self) -> list[str]:
        return [d.id for d in self.devices]

    @property
    def terminals(self) -> list[Device]:
        return [d for d in self.devices if d.kind is DeviceKind.TERMINAL]

    @property
    def edge_devices(self) -> list[Device]:
        return [d for d in self.devices if d.kind is DeviceKind.EDGE]

    def neighbors(self, device_id: str) -> tuple[str, ...]:
        return self._adj[device_id]

    def distance(self, u: str, v: str) -> float:
        (x1, y1), (x2, y2) = self[u].position, self[v].position
        return math.hypot(x1 - x2, y1 - y2)

    def max_link_distance(self, device_id: str) -> float:
        return max((self.distance(device_id, n) for n in self.neighbors(device_id)), default=0.0)

    def is_connected(self) -> bool:
        if not self.devices:
            return True
        start = self.devices[0].id
        seen = {start}
        stack = [start]
        while stack:
            for n in self.neighbors(stack.pop()):
                if n not in seen:
                    seen.add(n)
                    stack.append(n)
        return len(seen) == len(self.devices)

    def subgraph(self, keep: Iterable[str]) -> "Topology":
        keep = set(keep)
        return Topology(
            tuple(d for d in self.devices if d.id in keep),
            frozenset(l for l in self.links if l[0] in keep and l[1] in keep),
        )

    def with_behaviors(self, behaviors: Mapping[str, BehaviorProfile]) -> "Topology":
        devices = tuple(
            replace(d, behavior=behaviors[d.id]) if d.id in behaviors else d for d in self.devices
        )
        return Topology(devices, self.links)

    # -- serialization -----------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "devices": [
                {
                    "id": d.id,
                    "kind": d.kind.value,
                    "x": d.position[0],
                    "y": d.position[1],
                    "cpu_freq": d.cpu_freq,
                    "energy_avail": d.energy_avail,
                    "storage_avail": d.storage_avail,
                    "idle": d.idle,
                    "behavior": {
                        "true_plr": d.behavior.true_plr,
                        "true_tfsr": d.behavior.true_tfsr,
                        "exec_success": d.behavior.exec_success,
                    },
                }
                for d in self.devices
            ],
            "links": [list(l) for l in sorted(self.links)],
        }

    @classmethod
    def from_dict(cls, doc: Mapping) -> "Topology":
        devices = tuple(
            Device(
                id=d["id"],
                kind=DeviceKind(d["kind"]),
                position=(float(d["x"]), float(d["y"])),
                cpu_freq=float(d["cpu_freq"]),
                energy_avail=float(d["energy_avail"]),
                storage_avail=float(d["storage_avail"]),
                idle=bool(d["idle"]),
                behavior=BehaviorProfile(**d["behavior"]),
            )
            for d in doc["devices"]
        )
        return cls(devices, frozenset(_link(u, v) for u, v in doc["links"]))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "Topology":
        return cls.from_dict(json.loads(Path(path).read_text()))


@dataclass(frozen=True)
class TopologyConfig:
    n_terminals: int = 50
    n_edge: int = 10
    width: float = 500.0  # m
    height: float = 500.0  # m
    radius: float = 150.0  # m
    max_retries: int = 200
    # behaviour ranges, sampled uniformly per device
    plr_range: tuple[float, float] = (0.0, 0.1)
    tfsr_range: tuple[float, float] = (0.6, 1.0)
    exec_range: tuple[float, float] = (0.5, 1.0)
    # resource ranges
    idle_prob: float = 0.9
    terminal_energy_range: tuple[float, float] = (500.0, 5000.0)  # J
    edge_energy_range: tuple[float, float] = (100.0, 1000.0)  # J
    storage_range: tuple[float, float] = (2e8, 8e9)  # bits
    cpu_range: tuple[float, float] = (2.0, 3.5)  # GHz

    @classmethod
    def from_dict(cls, doc: Mapping) -> "TopologyConfig":
        kw = {k: tuple(v) if isinstance(v, list) else v for k, v in doc.items()}
        return cls(**kw)


def _device_ids(prefix: str, n: int) -> list[str]:
    width = max(2, len(str(max(n - 1, 0))))
    return [f"{prefix}{i:0{width}d}" for i in range(n)]


def build_random_topology(config: TopologyConfig = TopologyConfig(), seed: int = 0) -> Topology:
    """Place devices uniformly in the area and link every pair within ``radius``.

    Placements are redrawn until the graph is connected; raises
    :class:`TopologyError` after ``config.max_retries`` attempts.
    """
    rng = np.random.default_rng(seed)
    n_t, n_e = config.n_terminals, config.n_edge
    if n_t < 1 or n_e < 1:
        raise ValueError("need at least one terminal and one edge device")
    ids = _device_ids("a", n_t) + _device_ids("b", n_e)
    n = n_t + n_e

    # attributes are drawn once so only placement varies across retries
    plr = rng.uniform(*config.plr_range, n_t)
    tfsr = rng.uniform(*config.tfsr_range, n_t)
    exe = rng.uniform(*config.exec_range, n_e)
    idle = rng.random(n) < config.idle_prob
    energy = np.concatenate(
        [rng.uniform(*config.terminal_energy_range, n_t), rng.uniform(*config.edge_energy_range, n_e)]
    )
    storage = rng.uniform(*config.storage_range, n)
    cpu = rng.uniform(*config.cpu_range, n_e)

    for _ in range(config.max_retries):
        pos = rng.uniform((0.0, 0.0), (config.width, config.height), size=(n, 2))
        diff = pos[:, None, :] - pos[None, :, :]
        dist = np.sqrt((diff**2).sum(-1))
        iu, ju = np.nonzero(np.triu(dist <= config.radius, k=1))
        devices = []
        for k, dev_id in enumerate(ids):
            edge = k >= n_t
            devices.append(
                Device(
                    id=dev_id,
                    kind=DeviceKind.EDGE if edge else DeviceKind.TERMINAL,
                    position=(float(pos[k, 0]), float(pos[k, 1])),
                    cpu_freq=float(cpu[k - n_t]) if edge else 0.0,
                    energy_avail=float(energy[k]),
                    storage_avail=float(storage[k]),
                    idle=bool(idle[k]),
                    behavior=BehaviorProfile(exec_success=float(exe[k - n_t]))
                    if edge
                    else BehaviorProfile(true_plr=float(plr[k]), true_tfsr=float(tfsr[k])),
                )
            )
        topo = Topology(tuple(devices), frozenset(_link(ids[i], ids[j]) for i, j in zip(iu, ju)))
        if topo.is_connected():
            return topo
    raise TopologyError(f"no connected placement found after {config.max_retries} attempts")
