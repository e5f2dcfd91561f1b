"""Task-specific resource trust: binary idle, storage and energy gates.

Relays pay the first-order radio cost of receiving and re-transmitting the
task. Edge devices pay ``eps * f**2 * c_des * c_size`` to execute it, with
the CPU frequency ``f`` expressed in GHz.
"""

from __future__ import annotations

from dataclasses import dataclass

from cste.domain import Device, Task, Topology

CPU_ENERGY_EPS = 1e-11


@dataclass(frozen=True)
class RadioModel:
    e_elec: float = 50e-9  # J/bit
    e_amp: float = 100e-12  # J/bit/m^2

    def __post_init__(self):
        if not (self.e_elec > 0 and self.e_amp > 0):
            raise ValueError("radio constants must be positive")

    def rx_energy(self, bits: float) -> float:
        return self.e_elec * bits

    def tx_energy(self, bits: float, distance: float) -> float:
        return self.e_elec * bits + self.e_amp * bits * distance**2


def execution_energy(device: Device, task: Task, eps: float = CPU_ENERGY_EPS) -> float:
    return eps * device.cpu_freq**2 * task.c_des * task.c_size


def resource_trust_tf(device: Device, task: Task, next_hop_distance: float, radio: RadioModel = RadioModel()) -> int:
    if next_hop_distance < 0:
        raise ValueError("distance must be non-negative")
    needed = radio.rx_energy(task.c_size) + radio.tx_energy(task.c_size, next_hop_distance)
    return int(device.idle and device.storage_avail >= task.c_size and device.energy_avail >= needed)


def resource_trust_ec(device: Device, task: Task, eps: float = CPU_ENERGY_EPS) -> int:
    if not device.cpu_freq > 0:
        raise ValueError("cpu_freq must be positive")
    return int(
        device.idle and device.storage_avail >= task.c_size and device.energy_avail >= execution_energy(device, task, eps)
    )


def resource_trust_map(
    topology: Topology, task: Task, radio: RadioModel = RadioModel(), eps: float = CPU_ENERGY_EPS
) -> dict[str, int]:
    """Gate value for every device except the initiator.

    The next hop is unknown before planning, so relays are charged for their
    longest link.
    """
    out = {}
    for d in topology.devices:
        if d.id == task.initiator:
            continue
        if d.is_edge:
            out[d.id] = resource_trust_ec(d, task, eps)
        else:
            out[d.id] = resource_trust_tf(d, task, topology.max_link_distance(d.id), radio)
    return out
