"""Training loop for the trust GNN.

Edges of the interaction graph are split into train/test sets by a seeded
shuffle. Messages propagate over training edges only, so held-out edges never
leak their own trust code into the embeddings used to classify them. After
training, historical trust for arbitrary device pairs is read out with the
full edge set.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

from cste.embed import EmbeddingTable
from cste.gnnet.model import (
    GnnHyper,
    GnnModel,
    GraphArrays,
    as_tensors,
    forward_all,
    objective,
    predict_batch,
    readout,
)
from cste.trustgraph import InteractionGraph, discretize

log = logging.getLogger(__name__)

METRICS_HEADER = ["epoch", "train_loss", "test_loss", "test_acc"]


class TrainingError(RuntimeError):
    pass


@dataclass
class Batch:
    graph: GraphArrays
    h0: np.ndarray
    pairs: np.ndarray  # (b, 2) node indices
    labels: np.ndarray  # (b,)


def gradients(model: GnnModel, batch: Batch, dropout: float = 0.0, rng=None) -> tuple[float, dict[str, np.ndarray]]:
    """Loss and its gradient with respect to every parameter tensor."""
    params = model.parameters()
    tensors = as_tensors(params)
    value, _ = objective(tensors, model, batch.graph, batch.h0, batch.pairs, batch.labels, dropout, rng)
    value.backward()
    grads = {}
    for name, arr in params.items():
        g = tensors[name].grad
        grads[name] = np.zeros_like(arr) if g is None else g.reshape(arr.shape)
    return float(value.data), grads


class Adam:
    def __init__(self, params: Mapping[str, np.ndarray], lr: float, betas=(0.9, 0.999), eps=1e-8):
        self.lr, self.betas, self.eps = lr, betas, eps
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}
        self.t = 0

    def step(self, params: dict[str, np.ndarray], grads: Mapping[str, np.ndarray]) -> None:
        b1, b2 = self.betas
        self.t += 1
        for k, g in grads.items():
            self.m[k] = b1 * self.m[k] + (1 - b1) * g
            self.v[k] = b2 * self.v[k] + (1 - b2) * g * g
            m_hat = self.m[k] / (1 - b1**self.t)
            v_hat = self.v[k] / (1 - b2**self.t)
            params[k] -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


@dataclass
class TrainedTrust:
    t_his: dict[tuple[str, str], float]
    readout: str = "max"

    def __getitem__(self, pair: tuple[str, str]) -> float:
        return self.t_his[pair]


@dataclass
class TrainMetrics:
    rows: list[dict] = field(default_factory=list)
    majority_baseline: float = 0.0
    n_train: int = 0
    n_test: int = 0

    def save_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(METRICS_HEADER)
            for r in self.rows:
                w.writerow([r["epoch"]] + [repr(r[k]) for k in METRICS_HEADER[1:]])


def predict_trust(
    graph: InteractionGraph,
    embeddings: EmbeddingTable,
    model: GnnModel,
    pairs: Iterable[tuple[str, str]],
    mode: str | None = None,
) -> TrainedTrust:
    mode = mode or model.hyper.readout
    pairs = list(pairs)
    final = forward_all(graph, embeddings, model)
    index = {n: i for i, n in enumerate(final.ids)}
    if not pairs:
        return TrainedTrust({}, mode)
    i = np.array([index[u] for u, _ in pairs])
    j = np.array([index[v] for _, v in pairs])
    probs = predict_batch(final.vectors[i], final.vectors[j], model)
    values = readout(probs, mode)
    return TrainedTrust({p: float(v) for p, v in zip(pairs, values)}, mode)


def default_pairs(graph: InteractionGraph) -> list[tuple[str, str]]:
    """Every (terminal, other device) pair: the trust views an initiator may need."""
    return [(u, v) for u in graph.nodes if u not in graph.edge_nodes for v in graph.nodes if v != u]


def train(
    graph: InteractionGraph,
    embeddings: EmbeddingTable,
    hyper: GnnHyper = GnnHyper(),
    seed: int = 0,
    pairs: Iterable[tuple[str, str]] | None = None,
) -> tuple[GnnModel, TrainedTrust, TrainMetrics]:
    edges = graph.sorted_edges()
    if len(edges) < hyper.bins:
        raise TrainingError(f"need at least {hyper.bins} labelled edges, got {len(edges)}")
    rng = np.random.default_rng(seed)
    index = {n: i for i, n in enumerate(graph.nodes)}
    labels = np.array([discretize(graph.edges[e].direct_trust, hyper.bins).class_index for e in edges])
    node_pairs = np.array([(index[u], index[v]) for u, v in edges], dtype=np.int64)

    perm = rng.permutation(len(edges))
    n_train = int(round(hyper.train_frac * len(edges)))
    train_idx, test_idx = np.sort(perm[:n_train]), np.sort(perm[n_train:])
    ga = GraphArrays.from_graph(graph, hyper.bins, [edges[k] for k in train_idx])
    h0 = embeddings.aligned(graph.nodes)

    model = GnnModel.initialize(embeddings.dim, hyper, rng)
    params = {k: v.copy() for k, v in model.parameters().items()}
    opt = Adam(params, hyper.lr)

    def evaluate(idx):
        if len(idx) == 0:
            return float("nan"), float("nan")
        m = model.with_parameters(params)
        value, probs = objective(as_tensors(params), m, ga, h0, node_pairs[idx], labels[idx])
        acc = float((probs.data.argmax(axis=1) == labels[idx]).mean())
        return float(value.data), acc

    test_counts = np.bincount(labels[test_idx], minlength=hyper.bins)
    metrics = TrainMetrics(
        majority_baseline=float(test_counts.max() / max(1, len(test_idx))),
        n_train=len(train_idx),
        n_test=len(test_idx),
    )

    def record(epoch):
        tr_loss, _ = evaluate(train_idx)
        te_loss, te_acc = evaluate(test_idx)
        if not np.isfinite(tr_loss):
            raise TrainingError(f"non-finite training loss at epoch {epoch}")
        metrics.rows.append({"epoch": epoch, "train_loss": tr_loss, "test_loss": te_loss, "test_acc": te_acc})
        log.debug("epoch %d train %.4f test %.4f acc %.3f", epoch, tr_loss, te_loss, te_acc)

    record(0)
    for epoch in range(1, hyper.epochs + 1):
        order = rng.permutation(train_idx)
        for s in range(0, len(order), hyper.batch_size):
            sel = order[s : s + hyper.batch_size]
            batch = Batch(ga, h0, node_pairs[sel], labels[sel])
            value, grads = gradients(model.with_parameters(params), batch, hyper.dropout, rng)
            if not np.isfinite(value):
                raise TrainingError(f"non-finite loss in epoch {epoch}")
            opt.step(params, grads)
        record(epoch)

    model = model.with_parameters(params)
    trust = predict_trust(graph, embeddings, model, default_pairs(graph) if pairs is None else pairs)
    return model, trust, metrics
