"""
Direct trust from simulated interactions
========================================

A random network of terminals and edge servers runs a batch of offloading
tasks. Every hop leaves a record behind, and the records are folded into a
directed graph whose edge weights are direct trust values.
"""

import numpy as np

from cste.domain import TopologyConfig, build_random_topology
from cste.netsim import RecordKind, run_workload
from cste.trustgraph import build_graph, discretize

# 50 terminals and 10 edge servers scattered over a 500 m square
topo = build_random_topology(TopologyConfig(), seed=42)
print(f"{len(topo.terminals)} terminals, {len(topo.edge_devices)} edge devices, {len(topo.links)} links")

# each task walks from a random terminal to an edge server
records = run_workload(topo, n_tasks=2000, packets_per_task=500, seed=7)
fwd = [r for r in records if r.kind is RecordKind.FORWARD]
print(f"{len(records)} records, {len(fwd)} of them relay hops")

###############################################################################
# The worst relays by configured loss rate should also look worst in the data.

worst = sorted(topo.terminals, key=lambda d: -d.behavior.true_plr)[:3]
for d in worst:
    seen = [r.p_lost / r.p_tot for r in fwd if r.trustee == d.id]
    if seen:
        print(f"{d.id}: configured loss {d.behavior.true_plr:.3f}, observed {np.mean(seen):.3f} over {len(seen)} hops")

###############################################################################
# Terminal edges mix the two relay statistics 60/40; edge servers are rated
# by their execution success rate.

graph = build_graph(records, alpha1=0.6, alpha2=0.4, topology=topo)
values = np.array([e.direct_trust for e in graph.edges.values()])
print(f"{len(graph.edges)} trust edges, direct trust in [{values.min():.3f}, {values.max():.3f}]")

# ten equal-width bins become the training labels; the bin index is also
# fed to the network as a short binary code
counts = np.bincount([discretize(v, 10).class_index for v in values], minlength=10)
for k, c in enumerate(counts):
    print(f"  bin {k} {'#' * int(60 * c / counts.max()):60s} {c}")
