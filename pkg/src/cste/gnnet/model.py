"""Batched GNN forward pass, prediction head and loss.

All nodes are updated synchronously per layer using edge-indexed gathers and
segment sums, so a forward pass costs a few dozen numpy calls regardless of
graph size. Edges are sorted by (trustor, trustee) id before indexing, which
makes the result independent of the order edges were inserted.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from cste.embed import EmbeddingTable
from cste.gnnet import autograd as ag
from cste.gnnet.autograd import Tensor
from cste.gnnet.layers import LEAKY_SLOPE, LayerParams
from cste.trustgraph import InteractionGraph, code_length, discretize

PROB_FLOOR = 1e-12


@dataclass(frozen=True)
class GnnHyper:
    dims: tuple[int, ...] = (32, 64, 32)
    hidden: int = 64
    lr: float = 5e-3
    l2: float = 1e-5
    dropout: float = 0.1
    bins: int = 10
    epochs: int = 100
    batch_size: int = 128
    train_frac: float = 0.8
    readout: str = "max"  # "max" (probability of the top class) or "expected" (mean bin centre)

    @classmethod
    def from_dict(cls, doc: Mapping) -> "GnnHyper":
        kw = dict(doc)
        if "dims" in kw:
            kw["dims"] = tuple(kw["dims"])
        return cls(**kw)


@dataclass
class GnnModel:
    layers: list[LayerParams]
    head: list[tuple[np.ndarray, np.ndarray]]  # [(W, b), ...], last one emits `bins` logits
    hyper: GnnHyper = field(default_factory=GnnHyper)

    def __post_init__(self):
        if not self.layers:
            raise ValueError("need at least one layer")
        if self.head[-1][0].shape[0] != self.hyper.bins:
            raise ValueError("head output width must equal the number of trust bins")

    @property
    def code_len(self) -> int:
        return self.layers[0].w_in_msg.shape[1]

    @classmethod
    def initialize(cls, d_a: int, hyper: GnnHyper, rng: np.random.Generator) -> "GnnModel":
        """Xavier-uniform weights, zero biases."""
        code_len = code_length(hyper.bins)
        dims = (d_a,) + tuple(hyper.dims)
        layers = [LayerParams.xavier(dims[k], dims[k + 1], code_len, rng) for k in range(len(hyper.dims))]
        sizes = [2 * dims[-1], hyper.hidden, hyper.bins]
        head = []
        for n_in, n_out in zip(sizes[:-1], sizes[1:]):
            bound = np.sqrt(6.0 / (n_in + n_out))
            head.append((rng.uniform(-bound, bound, (n_out, n_in)), np.zeros(n_out)))
        return cls(layers, head, hyper)

    def parameters(self) -> dict[str, np.ndarray]:
        out = {}
        for k, layer in enumerate(self.layers):
            for name, arr in layer.tensors().items():
                out[f"layers.{k}.{name}"] = arr
        for k, (w, b) in enumerate(self.head):
            out[f"head.{k}.w"] = w
            out[f"head.{k}.b"] = b
        return out

    def with_parameters(self, params: Mapping[str, np.ndarray]) -> "GnnModel":
        layers = [
            LayerParams(**{name: np.array(params[f"layers.{k}.{name}"]) for name in layer.tensors()})
            for k, layer in enumerate(self.layers)
        ]
        head = [(np.array(params[f"head.{k}.w"]), np.array(params[f"head.{k}.b"])) for k in range(len(self.head))]
        return GnnModel(layers, head, self.hyper)

    def l2_norm_sq(self) -> float:
        return float(sum((a**2).sum() for a in self.parameters().values()))

    # -- checkpoint --------------------------------------------------------

    def save(self, path: str | Path) -> None:
        hyper = asdict(self.hyper)
        hyper["dims"] = list(hyper["dims"])
        doc = {
            "hyper": hyper,
            "n_layers": len(self.layers),
            "n_head": len(self.head),
            "tensors": {
                name: {"shape": list(a.shape), "data": a.ravel().tolist()} for name, a in self.parameters().items()
            },
        }
        Path(path).write_text(json.dumps(doc) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "GnnModel":
        doc = json.loads(Path(path).read_text())
        t = {k: np.array(v["data"], dtype=float).reshape(v["shape"]) for k, v in doc["tensors"].items()}
        names = [f.split(".", 2)[2] for f in t if f.startswith("layers.0.")]
        layers = [LayerParams(**{n: t[f"layers.{k}.{n}"] for n in names}) for k in range(doc["n_layers"])]
        head = [(t[f"head.{k}.w"], t[f"head.{k}.b"]) for k in range(doc["n_head"])]
        return cls(layers, head, GnnHyper.from_dict(doc["hyper"]))


@dataclass
class GraphArrays:
    """Index arrays for a set of directed trust edges over a fixed node list."""

    nodes: list[str]
    src: np.ndarray
    dst: np.ndarray
    codes: np.ndarray  # (E, D_T)
    in_share: np.ndarray  # (E, 1) N_e / sum of N over the trustee's in-edges
    out_share: np.ndarray  # (E, 1) N_e / sum of N over the trustor's out-edges
    ec_dst: np.ndarray  # (E, 1) 1.0 where the trustee is an edge device
    ec_node: np.ndarray  # (N, 1)

    @property
    def n(self) -> int:
        return len(self.nodes)

    @classmethod
    def from_graph(
        cls, graph: InteractionGraph, bins: int, edges: Iterable[tuple[str, str]] | None = None
    ) -> "GraphArrays":
        index = {n: i for i, n in enumerate(graph.nodes)}
        pairs = sorted(graph.edges if edges is None else edges)
        src = np.array([index[u] for u, _ in pairs], dtype=np.int64)
        dst = np.array([index[v] for _, v in pairs], dtype=np.int64)
        codes = np.array(
            [discretize(graph.edges[p].direct_trust, bins).code for p in pairs], dtype=float
        ).reshape(len(pairs), code_length(bins))
        counts = np.array([graph.edges[p].n_interactions for p in pairs], dtype=float)
        n = len(graph.nodes)
        in_tot = np.bincount(dst, weights=counts, minlength=n)
        out_tot = np.bincount(src, weights=counts, minlength=n)
        ec = np.array([nd in graph.edge_nodes for nd in graph.nodes], dtype=float)[:, None]
        return cls(
            list(graph.nodes),
            src,
            dst,
            codes,
            (counts / in_tot[dst])[:, None] if len(pairs) else np.zeros((0, 1)),
            (counts / out_tot[src])[:, None] if len(pairs) else np.zeros((0, 1)),
            ec[dst] if len(pairs) else np.zeros((0, 1)),
            ec,
        )


def _layer(p: Mapping[str, Tensor], h: Tensor, ga: GraphArrays) -> Tensor:
    n, src, dst = ga.n, ga.src, ga.dst
    if len(src) == 0:
        zeros = Tensor(np.zeros((n, 2 * h.shape[1])))
        h_te = h_tr = zeros
    else:
        z = h @ p["w_attn"].T
        z_src, z_dst = z[src], z[dst]
        h_src, h_dst = h[src], h[dst]
        a = p["attn_vec"].T  # column vector (2*d_in, 1)

        def weights(z_center, z_nbr, segments, share):
            raw = ag.leaky_relu(ag.concat([z_center, z_nbr], axis=1) @ a, LEAKY_SLOPE)
            first = ag.segment_softmax(raw, segments, n)
            return ag.segment_softmax(first * share, segments, n)

        psi_in = weights(z_dst, z_src, dst, ga.in_share)
        omega_in = (ga.codes @ p["w_in_msg"].T) * (1.0 - ga.ec_dst) + (ga.codes @ p["w_ec_msg"].T) * ga.ec_dst
        mu_in = ag.concat([h_src, omega_in], axis=1)
        h_te = ag.segment_sum(psi_in * mu_in, dst, n)

        psi_out = weights(z_src, z_dst, src, ga.out_share)
        mu_out = ag.concat([h_dst, ga.codes @ p["w_out_msg"].T], axis=1)
        h_tr = ag.segment_sum(psi_out * mu_out, src, n)

    out_tf = ag.relu(ag.concat([h_te, h_tr], axis=1) @ p["w_fuse_tf"].T + p["b_fuse_tf"])
    out_ec = ag.relu(h_te @ p["w_fuse_ec"].T + p["b_fuse_ec"])
    return out_tf * (1.0 - ga.ec_node) + out_ec * ga.ec_node


def as_tensors(params: Mapping[str, np.ndarray]) -> dict[str, Tensor]:
    # vectors become (1, k) rows so they broadcast against (rows, k) activations
    return {k: Tensor(v[None, :] if v.ndim == 1 else v) for k, v in params.items()}


def propagate(
    tensors: Mapping[str, Tensor],
    n_layers: int,
    ga: GraphArrays,
    h0: np.ndarray,
    dropout: float = 0.0,
    rng: np.random.Generator | None = None,
) -> Tensor:
    h = Tensor(h0)
    for k in range(n_layers):
        prefix = f"layers.{k}."
        p = {name[len(prefix):]: t for name, t in tensors.items() if name.startswith(prefix)}
        h = _layer(p, h, ga)
        if dropout > 0.0 and rng is not None:
            keep = (rng.random(h.shape) >= dropout) / (1.0 - dropout)
            h = h * keep
    return h


def head_forward(tensors: Mapping[str, Tensor], n_head: int, h_i: Tensor, h_j: Tensor) -> Tensor:
    x = ag.concat([h_i, h_j], axis=1)
    for k in range(n_head):
        x = x @ tensors[f"head.{k}.w"].T + tensors[f"head.{k}.b"]
        if k < n_head - 1:
            x = ag.relu(x)
    return ag.softmax(x, axis=1)


def cross_entropy(probs: Tensor, labels: np.ndarray) -> Tensor:
    picked = probs[np.arange(len(labels)), labels]
    return -(ag.log(ag.clamp_min(picked, PROB_FLOOR)).sum()) / float(len(labels))


def objective(
    tensors: Mapping[str, Tensor], model: GnnModel, ga: GraphArrays, h0: np.ndarray,
    pairs: np.ndarray, labels: np.ndarray, dropout: float = 0.0, rng: np.random.Generator | None = None,
) -> tuple[Tensor, Tensor]:
    """Regularised cross-entropy over labelled node-index ``pairs``; returns (loss, probs)."""
    h = propagate(tensors, len(model.layers), ga, h0, dropout, rng)
    probs = head_forward(tensors, len(model.head), h[pairs[:, 0]], h[pairs[:, 1]])
    reg = None
    for t in tensors.values():
        sq = (t * t).sum()
        reg = sq if reg is None else reg + sq
    return cross_entropy(probs, labels) + reg * model.hyper.l2, probs


# -- public numpy-level API ------------------------------------------------------


def forward_all(graph: InteractionGraph, embeddings: EmbeddingTable, model: GnnModel,
                edges: Iterable[tuple[str, str]] | None = None) -> EmbeddingTable:
    """Final-layer embeddings for every node (inference: no dropout)."""
    ga = GraphArrays.from_graph(graph, model.hyper.bins, edges)
    h = propagate(as_tensors(model.parameters()), len(model.layers), ga, embeddings.aligned(graph.nodes))
    return EmbeddingTable(list(graph.nodes), h.data)


def predict(h_i: np.ndarray, h_j: np.ndarray, model: GnnModel) -> np.ndarray:
    """Class distribution for one trustor/trustee embedding pair."""
    return predict_batch(np.atleast_2d(h_i), np.atleast_2d(h_j), model)[0]


def predict_batch(h_i: np.ndarray, h_j: np.ndarray, model: GnnModel) -> np.ndarray:
    t = as_tensors({f"head.{k}.{s}": a for k, (w, b) in enumerate(model.head) for s, a in (("w", w), ("b", b))})
    return head_forward(t, len(model.head), Tensor(h_i), Tensor(h_j)).data


def readout(probs: np.ndarray, mode: str = "max") -> np.ndarray:
    """Scalar trust from class distributions (last axis)."""
    probs = np.asarray(probs)
    if mode == "max":
        return probs.max(axis=-1)
    if mode == "expected":
        bins = probs.shape[-1]
        return probs @ ((np.arange(bins) + 0.5) / bins)
    raise ValueError(f"unknown readout mode {mode!r}")


def loss(predictions: np.ndarray, labels: Sequence[int], theta: Iterable[np.ndarray] = (), lam: float = 0.0) -> float:
    """Mean negative log-probability of the true class plus ``lam * ||theta||^2``."""
    predictions = np.atleast_2d(predictions)
    labels = np.asarray(labels, dtype=np.int64)
    if labels.min(initial=0) < 0 or labels.max(initial=0) >= predictions.shape[1]:
        raise ValueError("label outside the class range")
    picked = np.maximum(predictions[np.arange(len(labels)), labels], PROB_FLOOR)
    reg = sum(float((np.asarray(t) ** 2).sum()) for t in theta)
    return float(-np.log(picked).mean() + lam * reg)
