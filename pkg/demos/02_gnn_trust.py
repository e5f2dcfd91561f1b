"""
Learning historical trust with a graph network
==============================================

Direct trust only exists between devices that have already worked together.
A small attention-based graph network learns to predict the trust bin of an
edge from the embeddings of its two endpoints. Its readout then covers
every pair, including devices that never interacted.
"""

import numpy as np

from cste.domain import TopologyConfig, build_random_topology
from cste.embed import WalkParams, init_embeddings
from cste.gnnet import GnnHyper, readout, train
from cste.netsim import run_workload
from cste.trustgraph import build_graph

topo = build_random_topology(TopologyConfig(), seed=42)
graph = build_graph(run_workload(topo, 5000, 1000, seed=7), topology=topo)

# biased random walks plus skip-gram give each device a starting vector
emb = init_embeddings(graph, WalkParams(), seed=11)
print("embedding matrix", emb.vectors.shape)

###############################################################################
# 80% of the edges train the model; the other 20% are held out. Messages only
# travel along training edges, so a held-out edge never sees its own label.

model, trust, metrics = train(graph, emb, GnnHyper(epochs=40), seed=13)
for row in metrics.rows[::10] + [metrics.rows[-1]]:
    print(f"epoch {row['epoch']:3d}  train {row['train_loss']:.3f}  test {row['test_loss']:.3f}  acc {row['test_acc']:.3f}")
print(f"majority-class accuracy on the held-out edges: {metrics.majority_baseline:.3f}")

###############################################################################
# Two ways to turn a class distribution into one number. "max" reports the
# probability of the top class, which measures confidence. "expected" reports
# the mean bin centre, which tracks the trust level itself.

p = np.array([[0.05, 0.9] + [0.05 / 8] * 8, [0.0] * 9 + [1.0]])
print("confident low trust:", readout(p[:1], "max"), readout(p[:1], "expected"))
print("confident high trust:", readout(p[1:], "max"), readout(p[1:], "expected"))

vals = np.array(list(trust.t_his.values()))
print(f"{len(vals)} pairs scored, mean {vals.mean():.3f}, min {vals.min():.3f}")
