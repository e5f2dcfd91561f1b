import itertools

import pytest
from hypothesis import given
from hypothesis import strategies as st

from cste.domain import Device, DeviceKind, Task
from cste.restrust import RadioModel, execution_energy, resource_trust_ec, resource_trust_map, resource_trust_tf

TASK = Task("a0", c_des=2339.0, c_size=4e8)
RADIO = RadioModel(e_elec=5e-8, e_amp=1e-10)


def relay(energy=1e6, storage=1e10, idle=True):
    return Device("a1", DeviceKind.TERMINAL, (0, 0), energy_avail=energy, storage_avail=storage, idle=idle)


def edge(energy=1e6, storage=1e10, idle=True, cpu=2.0):
    return Device("b0", DeviceKind.EDGE, (0, 0), cpu_freq=cpu, energy_avail=energy, storage_avail=storage, idle=idle)


def test_radio_energy_hand_values():
    # receive 5e-8 * 4e8 = 20 J; transmit 20 + 1e-10 * 4e8 * 100**2 = 420 J
    assert RADIO.rx_energy(4e8) == pytest.approx(20.0)
    assert RADIO.tx_energy(4e8, 100.0) == pytest.approx(420.0)


def test_tf_gate():
    assert resource_trust_tf(relay(idle=False), TASK, 100.0, RADIO) == 0
    assert resource_trust_tf(relay(storage=4e8), TASK, 100.0, RADIO) == 1
    assert resource_trust_tf(relay(storage=4e8 - 1), TASK, 100.0, RADIO) == 0
    assert resource_trust_tf(relay(energy=439.0), TASK, 100.0, RADIO) == 0
    assert resource_trust_tf(relay(energy=441.0), TASK, 100.0, RADIO) == 1


def test_ec_gate():
    # 1e-11 * 2**2 * 2339 * 4e8 = 37.424 J
    assert execution_energy(edge(), TASK) == pytest.approx(37.424)
    assert resource_trust_ec(edge(energy=40.0), TASK) == 1
    assert resource_trust_ec(edge(energy=37.0), TASK) == 0
    assert resource_trust_ec(edge(storage=1e8), TASK) == 0
    assert resource_trust_ec(edge(energy=execution_energy(edge(), TASK)), TASK) == 1


@pytest.mark.parametrize("idle,storage_ok,energy_ok", list(itertools.product([False, True], repeat=3)))
def test_gate_is_conjunction(idle, storage_ok, energy_ok):
    storage = 4e8 if storage_ok else 1e8
    tf = relay(energy=441.0 if energy_ok else 439.0, storage=storage, idle=idle)
    ec = edge(energy=40.0 if energy_ok else 30.0, storage=storage, idle=idle)
    expected = int(idle and storage_ok and energy_ok)
    assert resource_trust_tf(tf, TASK, 100.0, RADIO) == expected
    assert resource_trust_ec(ec, TASK) == expected


@given(
    st.floats(0, 2000), st.floats(0, 2000), st.floats(0, 1e9), st.floats(0, 1e9), st.booleans(), st.floats(0, 200)
)
def test_gate_monotone(e1, e2, s1, s2, idle, dist):
    lo, hi = relay(min(e1, e2), min(s1, s2), idle), relay(max(e1, e2), max(s1, s2), True)
    assert resource_trust_tf(lo, TASK, dist, RADIO) <= resource_trust_tf(hi, TASK, dist, RADIO)
    lo_e, hi_e = edge(min(e1, e2), min(s1, s2), idle), edge(max(e1, e2), max(s1, s2), True)
    assert resource_trust_ec(lo_e, TASK) <= resource_trust_ec(hi_e, TASK)


def test_map_uses_longest_link(full_topology):
    task = Task(full_topology.terminals[0].id)
    gates = resource_trust_map(full_topology, task)
    assert task.initiator not in gates and len(gates) == 59
    for dev_id, g in gates.items():
        d = full_topology[dev_id]
        if d.is_edge:
            assert g == resource_trust_ec(d, task)
        else:
            assert g == resource_trust_tf(d, task, full_topology.max_link_distance(dev_id))


def test_negative_distance_rejected():
    with pytest.raises(ValueError):
        resource_trust_tf(relay(), TASK, -1.0)
    with pytest.raises(ValueError):
        RadioModel(e_elec=0.0)
