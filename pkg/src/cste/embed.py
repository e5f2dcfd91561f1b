"""Initial device embeddings: biased second-order random walks + skip-gram.

Walks treat the interaction graph as undirected. The skip-gram model is
trained with negative sampling by plain minibatch SGD in numpy.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from cste.trustgraph import InteractionGraph

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class WalkParams:
    dim: int = 128
    p: float = 1.0  # return parameter
    q: float = 1.0  # in-out parameter
    walk_length: int = 20
    walks_per_node: int = 10
    window: int = 5
    negatives: int = 5
    epochs: int = 5
    lr: float = 0.025
    batch_size: int = 256


@dataclass
class EmbeddingTable:
    ids: list[str]
    vectors: np.ndarray  # (len(ids), dim)

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def __getitem__(self, device_id: str) -> np.ndarray:
        return self.vectors[self.ids.index(device_id)]

    def aligned(self, ids: list[str]) -> np.ndarray:
        """Rows reordered to follow ``ids``."""
        pos = {d: i for i, d in enumerate(self.ids)}
        return self.vectors[[pos[d] for d in ids]]

    def save_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["id"] + [f"e{k}" for k in range(self.dim)])
            for dev, row in zip(self.ids, self.vectors):
                w.writerow([dev] + [repr(float(x)) for x in row])

    @classmethod
    def load_csv(cls, path: str | Path) -> "EmbeddingTable":
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            next(reader)
            rows = list(reader)
        return cls([r[0] for r in rows], np.array([[float(x) for x in r[1:]] for r in rows]))


def _undirected_adjacency(graph: InteractionGraph) -> list[list[int]]:
    index = {n: i for i, n in enumerate(graph.nodes)}
    adj: list[set[int]] = [set() for _ in graph.nodes]
    for u, v in graph.edges:
        adj[index[u]].add(index[v])
        adj[index[v]].add(index[u])
    return [sorted(a) for a in adj]


def generate_walks(graph: InteractionGraph, params: WalkParams, rng: np.random.Generator) -> list[list[int]]:
    """Biased walks as lists of node indices into ``graph.nodes``."""
    adj = _undirected_adjacency(graph)
    adj_sets = [set(a) for a in adj]
    starts = [i for i, a in enumerate(adj) if a]
    walks = []
    for _ in range(params.walks_per_node):
        for start in rng.permutation(starts):
            walk = [int(start)]
            while len(walk) < params.walk_length:
                cur = walk[-1]
                nbrs = adj[cur]
                if len(walk) == 1:
                    walk.append(nbrs[rng.integers(len(nbrs))])
                    continue
                prev = walk[-2]
                w = np.array(
                    [1.0 / params.p if x == prev else 1.0 if x in adj_sets[prev] else 1.0 / params.q for x in nbrs]
                )
                walk.append(nbrs[rng.choice(len(nbrs), p=w / w.sum())])
            walks.append(walk)
    return walks


def context_pairs(walks: list[list[int]], window: int) -> np.ndarray:
    pairs = []
    for walk in walks:
        for i, center in enumerate(walk):
            for j in range(max(0, i - window), min(len(walk), i + window + 1)):
                if j != i:
                    pairs.append((center, walk[j]))
    return np.array(pairs, dtype=np.int64).reshape(-1, 2)


def _sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def train_skipgram(
    pairs: np.ndarray, n_nodes: int, params: WalkParams, rng: np.random.Generator
) -> np.ndarray:
    dim = params.dim
    w_in = (rng.random((n_nodes, dim)) - 0.5) / dim
    w_out = np.zeros((n_nodes, dim))
    counts = np.bincount(pairs[:, 1], minlength=n_nodes).astype(float) ** 0.75
    noise = counts / counts.sum()

    n_steps = params.epochs * max(1, -(-len(pairs) // params.batch_size))
    step = 0
    for _ in range(params.epochs):
        order = rng.permutation(len(pairs))
        for s in range(0, len(pairs), params.batch_size):
            lr = params.lr * max(1e-4, 1.0 - step / n_steps)
            step += 1
            batch = pairs[order[s : s + params.batch_size]]
            c, o = batch[:, 0], batch[:, 1]
            neg = rng.choice(n_nodes, size=(len(batch), params.negatives), p=noise)
            targets = np.concatenate([o[:, None], neg], axis=1)  # (b, 1+k)
            labels = np.zeros(targets.shape)
            labels[:, 0] = 1.0
            h = w_in[c]  # (b, d)
            u = w_out[targets]  # (b, 1+k, d)
            g = labels - _sigmoid(np.einsum("bd,bkd->bk", h, u))  # ascent direction
            np.add.at(w_out, targets, lr * g[:, :, None] * h[:, None, :])
            np.add.at(w_in, c, lr * np.einsum("bk,bkd->bd", g, u))
    return w_in


def gaussian_embeddings(nodes: list[str], dim: int, seed: int = 0) -> EmbeddingTable:
    """Seeded N(0, 1/dim) vectors; a cheap stand-in when embedding quality is irrelevant."""
    rng = np.random.default_rng(seed)
    return EmbeddingTable(list(nodes), rng.normal(0.0, 1.0 / np.sqrt(dim), (len(nodes), dim)))


def init_embeddings(graph: InteractionGraph, params: WalkParams = WalkParams(), seed: int = 0) -> EmbeddingTable:
    if not graph.nodes:
        raise ValueError("graph has no nodes")
    rng = np.random.default_rng(seed)
    walks = generate_walks(graph, params, rng)
    pairs = context_pairs(walks, params.window)
    n = len(graph.nodes)
    vectors = train_skipgram(pairs, n, params, rng) if len(pairs) else np.zeros((n, params.dim))

    touched = np.zeros(n, dtype=bool)
    for walk in walks:
        touched[walk] = True
    for i in np.flatnonzero(~touched):
        log.warning("node %s is isolated; using a random unit vector", graph.nodes[i])
        v = rng.normal(size=params.dim)
        vectors[i] = v / np.linalg.norm(v)
    return EmbeddingTable(list(graph.nodes), vectors)
