"""Layer parameters and single-node propagation/aggregation.

The functions here evaluate one node at a time in plain numpy. They are the
readable reference for the batched engine in :mod:`cste.gnnet.model` and are
used to cross-check it.
"""

from __future__ import annotations

from dataclasses import dataclass, fields
from typing import Mapping, Sequence

import numpy as np

LEAKY_SLOPE = 0.2


@dataclass
class LayerParams:
    """Trainable tensors of one propagation/aggregation layer (``d_in -> d_out``)."""

    w_in_msg: np.ndarray  # (d_in, D_T) trust-code transform, terminal trustee side
    w_out_msg: np.ndarray  # (d_in, D_T) trustor side
    w_ec_msg: np.ndarray  # (d_in, D_T) edge-device trustee side
    w_attn: np.ndarray  # (d_in, d_in) shared transform inside the attention score
    attn_vec: np.ndarray  # (2*d_in,) scoring vector
    w_fuse_tf: np.ndarray  # (d_out, 4*d_in) trustee/trustor fusion
    b_fuse_tf: np.ndarray  # (d_out,)
    w_fuse_ec: np.ndarray  # (d_out, 2*d_in) edge-device output projection
    b_fuse_ec: np.ndarray  # (d_out,)

    @property
    def d_in(self) -> int:
        return self.w_attn.shape[0]

    @property
    def d_out(self) -> int:
        return self.w_fuse_tf.shape[0]

    def tensors(self) -> dict[str, np.ndarray]:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    @classmethod
    def zeros(cls, d_in: int, d_out: int, code_len: int) -> "LayerParams":
        return cls(
            w_in_msg=np.zeros((d_in, code_len)),
            w_out_msg=np.zeros((d_in, code_len)),
            w_ec_msg=np.zeros((d_in, code_len)),
            w_attn=np.zeros((d_in, d_in)),
            attn_vec=np.zeros(2 * d_in),
            w_fuse_tf=np.zeros((d_out, 4 * d_in)),
            b_fuse_tf=np.zeros(d_out),
            w_fuse_ec=np.zeros((d_out, 2 * d_in)),
            b_fuse_ec=np.zeros(d_out),
        )

    @classmethod
    def xavier(cls, d_in: int, d_out: int, code_len: int, rng: np.random.Generator) -> "LayerParams":
        def glorot(shape):
            fan_out, fan_in = (shape[0], shape[1]) if len(shape) == 2 else (1, shape[0])
            bound = np.sqrt(6.0 / (fan_in + fan_out))
            return rng.uniform(-bound, bound, shape)

        p = cls.zeros(d_in, d_out, code_len)
        for name in ("w_in_msg", "w_out_msg", "w_ec_msg", "w_attn", "attn_vec", "w_fuse_tf", "w_fuse_ec"):
            setattr(p, name, glorot(getattr(p, name).shape))
        return p


def _softmax(x: np.ndarray) -> np.ndarray:
    e = np.exp(x - x.max())
    return e / e.sum()


def message(h_src: np.ndarray, trust_code: np.ndarray, w_msg: np.ndarray) -> np.ndarray:
    """A neighbour's recommendation: its embedding followed by the transformed trust code."""
    h_src = np.asarray(h_src, dtype=float)
    trust_code = np.asarray(trust_code, dtype=float)
    if w_msg.shape != (h_src.shape[0], trust_code.shape[0]):
        raise ValueError(
            f"w_msg has shape {w_msg.shape}, expected {(h_src.shape[0], trust_code.shape[0])}"
        )
    return np.concatenate([h_src, w_msg @ trust_code])


def neighbor_weights(
    h_center: np.ndarray,
    neighbor_hs: Sequence[np.ndarray],
    n_counts: Sequence[float],
    w_attn: np.ndarray,
    attn_vec: np.ndarray,
) -> np.ndarray:
    """Attention weights over a neighbourhood, rescaled by interaction counts.

    score -> softmax -> times count share -> softmax again.
    """
    if len(neighbor_hs) == 0:
        raise ValueError("empty neighbourhood")
    counts = np.asarray(n_counts, dtype=float)
    zc = w_attn @ h_center
    raw = np.array([attn_vec @ np.concatenate([zc, w_attn @ h]) for h in neighbor_hs])
    raw = np.where(raw > 0, raw, LEAKY_SLOPE * raw)
    return _softmax(_softmax(raw) * counts / counts.sum())


def _aggregate(center, nbr_ids, codes, counts, h: Mapping[str, np.ndarray], w_msg, params: LayerParams):
    if not nbr_ids:
        return np.zeros(2 * params.d_in)
    psi = neighbor_weights(h[center], [h[n] for n in nbr_ids], counts, params.w_attn, params.attn_vec)
    mus = [message(h[n], c, w_msg) for n, c in zip(nbr_ids, codes)]
    return sum(w * m for w, m in zip(psi, mus))


def trustee_aggregate(node, graph, h, codes, params: LayerParams, w_msg) -> np.ndarray:
    nbrs = graph.in_neighbors(node)
    return _aggregate(
        node, nbrs, [codes[(n, node)] for n in nbrs], [graph.edges[(n, node)].n_interactions for n in nbrs],
        h, w_msg, params,
    )


def trustor_aggregate(node, graph, h, codes, params: LayerParams) -> np.ndarray:
    nbrs = graph.out_neighbors(node)
    return _aggregate(
        node, nbrs, [codes[(node, n)] for n in nbrs], [graph.edges[(node, n)].n_interactions for n in nbrs],
        h, params.w_out_msg, params,
    )


def tf_layer_forward(node, graph, h: Mapping[str, np.ndarray], codes, params: LayerParams) -> np.ndarray:
    """New embedding of a terminal device from its trustee and trustor aggregates.

    ``codes`` maps each edge (trustor, trustee) to its binary trust code.
    """
    h_te = trustee_aggregate(node, graph, h, codes, params, params.w_in_msg)
    h_tr = trustor_aggregate(node, graph, h, codes, params)
    return np.maximum(params.w_fuse_tf @ np.concatenate([h_te, h_tr]) + params.b_fuse_tf, 0.0)


def ec_layer_forward(node, graph, h: Mapping[str, np.ndarray], codes, params: LayerParams) -> np.ndarray:
    """New embedding of an edge device (trustee role only), projected to ``d_out``."""
    h_te = trustee_aggregate(node, graph, h, codes, params, params.w_ec_msg)
    return np.maximum(params.w_fuse_ec @ h_te + params.b_fuse_ec, 0.0)
