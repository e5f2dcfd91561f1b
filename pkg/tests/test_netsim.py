from collections import defaultdict

import pytest

from cste.domain import BehaviorProfile, Device, DeviceKind, Topology, TopologyConfig, build_random_topology
from cste.netsim import (
    InteractionRecord,
    RecordFormatError,
    RecordKind,
    load_records,
    persist_records,
    run_workload,
)


def _pair(plr=0.0, exec_success=1.0):
    a = Device("a0", DeviceKind.TERMINAL, (0, 0), behavior=BehaviorProfile(true_plr=plr))
    b = Device("b0", DeviceKind.EDGE, (10, 0), cpu_freq=2.0, behavior=BehaviorProfile(exec_success=exec_success))
    return Topology((a, b), frozenset({("a0", "b0")}))


def test_direct_hop_emits_single_compute_record():
    recs = run_workload(_pair(), n_tasks=1, seed=0)
    assert recs == [InteractionRecord(0, "a0", "b0", RecordKind.COMPUTE, outcome=1)]


def test_total_loss_means_nothing_received():
    topo = build_random_topology(TopologyConfig(n_terminals=15, n_edge=3, radius=220), 1)
    topo = topo.with_behaviors({d.id: BehaviorProfile(true_plr=1.0) for d in topo.terminals})
    recs = run_workload(topo, 200, 50, seed=2)
    fwd = [r for r in recs if r.kind is RecordKind.FORWARD]
    assert fwd and all(r.p_rec == 0 and r.p_tra == 0 for r in fwd)


def test_records_follow_simple_routes(full_topology):
    recs = run_workload(full_topology, 300, 100, seed=5)
    by_task = defaultdict(list)
    for r in recs:
        by_task[r.task].append(r)
    assert sorted(by_task) == list(range(300))
    for task_recs in by_task.values():
        *fwd, comp = task_recs
        assert comp.kind is RecordKind.COMPUTE and full_topology[comp.trustee].is_edge
        hops = [comp.trustor] + [r.trustee for r in fwd]
        assert len(set(hops)) == len(hops)
        for r in fwd:
            assert (min(r.trustor, r.trustee), max(r.trustor, r.trustee)) in full_topology.links
            assert not full_topology[r.trustee].is_edge


def test_empirical_loss_tracks_configured_plr(full_topology, full_records):
    ratios = defaultdict(list)
    for r in full_records:
        if r.kind is RecordKind.FORWARD:
            ratios[r.trustee].append(r.p_lost / r.p_tot)
    assert len(ratios) > 30
    for dev, vals in ratios.items():
        assert abs(sum(vals) / len(vals) - full_topology[dev].behavior.true_plr) <= 0.02


def test_workload_is_deterministic(full_topology):
    assert run_workload(full_topology, 100, 100, seed=3) == run_workload(full_topology, 100, 100, seed=3)


def test_no_reachable_edge_device():
    a = Device("a0", DeviceKind.TERMINAL, (0, 0))
    b = Device("b0", DeviceKind.EDGE, (10, 0), cpu_freq=2.0)
    with pytest.raises(RuntimeError):
        run_workload(Topology((a, b), frozenset()), 1)


def test_round_trip_empty(tmp_path):
    path = tmp_path / "r.csv"
    persist_records([], path)
    assert path.read_text() == "task,trustor,trustee,kind,p_tot,p_lost,p_rec,p_tra,outcome\n"
    assert load_records(path) == []


def test_round_trip_full_dataset(tmp_path, full_records):
    path = tmp_path / "r.csv"
    persist_records(full_records, path)
    assert load_records(path) == full_records
    persist_records(load_records(path), tmp_path / "again.csv")
    assert (tmp_path / "again.csv").read_bytes() == path.read_bytes()


def test_malformed_row_names_line(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text(
        "task,trustor,trustee,kind,p_tot,p_lost,p_rec,p_tra,outcome\n"
        "0,a0,a1,forward,10,2,8,8,\n"
        "1,a0,a1,forward,10,12,-2,0,\n"
    )
    with pytest.raises(RecordFormatError, match="line 3"):
        load_records(path)
