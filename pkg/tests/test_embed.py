import numpy as np
import pytest

from cste.embed import EmbeddingTable, WalkParams, context_pairs, gaussian_embeddings, generate_walks, init_embeddings
from cste.trustgraph import InteractionGraph, TrustEdge

SMALL = WalkParams(dim=16, walk_length=10, walks_per_node=20, epochs=5)


def two_cliques():
    left = [f"a{i}" for i in range(5)]
    right = [f"a{i}" for i in range(5, 10)]
    edges = {}
    for group in (left, right):
        for u in group:
            for v in group:
                if u != v:
                    edges[(u, v)] = TrustEdge(0.8, 1)
    edges[("a4", "a5")] = TrustEdge(0.5, 1)
    return InteractionGraph(left + right, frozenset(), edges)


def _cos(a, b):
    return float(a @ b / (np.linalg.norm(a) * np.linalg.norm(b)))


def test_walks_stay_on_edges():
    g = two_cliques()
    walks = generate_walks(g, SMALL, np.random.default_rng(0))
    assert len(walks) == 10 * SMALL.walks_per_node
    und = {(g.nodes.index(u), g.nodes.index(v)) for u, v in g.edges}
    und |= {(v, u) for u, v in und}
    for w in walks:
        assert len(w) == SMALL.walk_length
        assert all((x, y) in und for x, y in zip(w, w[1:]))


def test_context_pairs_window():
    pairs = context_pairs([[0, 1, 2]], window=1)
    assert sorted(map(tuple, pairs)) == [(0, 1), (1, 0), (1, 2), (2, 1)]


def test_co_visited_nodes_are_closer():
    g = two_cliques()
    emb = init_embeddings(g, SMALL, seed=3)
    within = np.mean([_cos(emb[u], emb[v]) for u in ["a0", "a1", "a2"] for v in ["a1", "a2", "a3"] if u != v])
    across = np.mean([_cos(emb[u], emb[v]) for u in ["a0", "a1", "a2"] for v in ["a7", "a8", "a9"]])
    assert within > across + 0.2


def test_isolated_node_gets_unit_vector(caplog):
    g = two_cliques()
    g = InteractionGraph(g.nodes + ["b0"], frozenset({"b0"}), g.edges)
    emb = init_embeddings(g, SMALL, seed=0)
    assert np.linalg.norm(emb["b0"]) == pytest.approx(1.0)
    assert "b0" in caplog.text


def test_deterministic_and_round_trip(tmp_path):
    g = two_cliques()
    a = init_embeddings(g, SMALL, seed=1)
    b = init_embeddings(g, SMALL, seed=1)
    assert np.array_equal(a.vectors, b.vectors) and a.ids == b.ids
    a.save_csv(tmp_path / "e.csv")
    back = EmbeddingTable.load_csv(tmp_path / "e.csv")
    assert back.ids == a.ids and np.array_equal(back.vectors, a.vectors)


def test_gaussian_and_aligned():
    emb = gaussian_embeddings(["x", "y", "z"], 4, seed=0)
    assert emb.dim == 4
    assert np.array_equal(emb.aligned(["z", "x"]), emb.vectors[[2, 0]])
    with pytest.raises(KeyError):
        emb.aligned(["w"])
