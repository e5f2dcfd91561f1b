"""
Planning a trusted path to an edge server
=========================================

A task needs relays to reach an edge server. Each candidate device gets a
composite score: learned trust, zeroed when the device lacks the idle time,
storage or energy for this particular task. Devices under the thresholds are
dropped. Then one best-first agent per edge server searches back toward the
initiator.
"""

from dataclasses import replace

from cste.experiment import ExperimentConfig, evaluation_initiators, make_embeddings, reduced_instance
from cste.domain import Task, build_random_topology
from cste.gnnet import train
from cste.netsim import run_workload
from cste.planner import astar_plan, brute_force_best, composite_trust, filter_trusted, greedy_plan
from cste.restrust import resource_trust_map
from cste.trustgraph import build_graph

cfg = ExperimentConfig()
cfg = replace(cfg, gnn=replace(cfg.gnn, epochs=30, readout="expected"))
topo = build_random_topology(cfg.topology, 42)
graph = build_graph(run_workload(topo, 5000, 1000, seed=7), topology=topo)
_, t_his, _ = train(graph, make_embeddings(graph, cfg), cfg.gnn, seed=13)

init = evaluation_initiators(topo, 1, seed=3)[0]
task = Task(init)  # 50 MB, thresholds 0.4 for relays and 0.3 for servers
gates = resource_trust_map(topo, task)
print(f"initiator {init}: {sum(gates.values())} of {len(gates)} devices pass the resource check")

trust = {d: composite_trust(t_his[(init, d)], gates[d]) for d in gates}
trusted = filter_trusted(topo, trust, task)
print(f"trusted topology keeps {len(trusted.graph.devices)} devices and {len(trusted.graph.links)} links")

###############################################################################
# The best-first planner against a greedy walk. The exact oracle only runs on
# a 14-device neighbourhood, so its score is a floor on the true optimum.

for name, res in (
    ("best-first", astar_plan(trusted)),
    ("greedy", greedy_plan(trusted)),
    ("oracle (reduced)", brute_force_best(reduced_instance(trusted, 14))),
):
    if res is None:
        print(f"{name:17s} no path")
    else:
        print(f"{name:17s} {res.avg_trust:.4f}  {' -> '.join(res.path)}")
