import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from causalkit.embed import default_theta, feather_embed, hash_features
from causalkit.graph import CausalGraph, CausalNode
from conftest import make_graph, random_graph


def feather_oracle(graph, features, scales, theta):
    """Dense matrix-power computation with explicit loops over the layout."""
    ids = sorted(n.id for n in graph.nodes)
    index = {i: k for k, i in enumerate(ids)}
    n = len(ids)
    X = np.stack([np.asarray(features[i], dtype=float) for i in ids])
    d = X.shape[1]

    A = np.zeros((n, n))
    for e in graph.edges:
        if e.head != e.tail:
            A[index[e.head], index[e.tail]] = 1.0
            A[index[e.tail], index[e.head]] = 1.0
    P = np.zeros((n, n))
    for i in range(n):
        deg = A[i].sum()
        if deg == 0:
            P[i, i] = 1.0
        else:
            P[i] = A[i] / deg

    values = []
    for r in sorted(scales):
        Pr = np.linalg.matrix_power(P, r)
        for t in theta:
            for trig in (np.cos, np.sin):
                block = np.zeros((n, d))
                for u in range(n):
                    for f in range(d):
                        block[u, f] = sum(Pr[u, v] * trig(t * X[v, f]) for v in range(n))
                values.append(block)
    # per (scale, theta): cos block then sin block, concatenated feature-wise
    per_scale_theta = []
    k = 0
    for _r in sorted(scales):
        for _t in theta:
            per_scale_theta.append(np.concatenate([values[k], values[k + 1]], axis=1))
            k += 2
    node_embeddings = np.concatenate(per_scale_theta, axis=1)
    return node_embeddings.mean(axis=0)


class TestFeather:
    def test_single_node_is_pointwise_characteristic_function(self):
        x = np.array([0.3, -1.2, 2.5, 0.0])
        g = CausalGraph(id="g", nodes=(CausalNode("v", "v"),))
        theta = default_theta()
        emb = feather_embed(g, {"v": x}, scales=(1, 2), theta=theta)
        expected = []
        for _scale in (1, 2):
            for t in theta:
                expected.extend(np.cos(t * x))
                expected.extend(np.sin(t * x))
        assert np.allclose(emb, expected, atol=1e-12)

    def test_dimension(self):
        g = random_graph(0)
        emb = feather_embed(g, hash_features(g, 16), scales=(1, 2), theta=default_theta(8))
        assert emb.shape == (2 * 8 * 16 * 2,)

    def test_isomorphic_graphs_equal(self):
        g1 = make_graph([("a", "b"), ("b", "c")])
        g2 = make_graph([("x", "y"), ("y", "z")])
        features1 = {"a": np.array([0.1, 0.7]), "b": np.array([-0.4, 0.2]), "c": np.array([0.9, -0.3])}
        features2 = {"x": features1["a"], "y": features1["b"], "z": features1["c"]}
        e1 = feather_embed(g1, features1, scales=(1, 2), theta=default_theta(4))
        e2 = feather_embed(g2, features2, scales=(1, 2), theta=default_theta(4))
        assert np.allclose(e1, e2, atol=1e-9)

    def test_three_node_path_matches_matrix_power_oracle(self):
        g = make_graph([("a", "b"), ("b", "c")])
        features = {
            "a": np.array([0.5, -1.0, 0.25]),
            "b": np.array([1.5, 0.1, -0.75]),
            "c": np.array([-0.2, 2.0, 0.4]),
        }
        theta = default_theta(5, 4.0)
        got = feather_embed(g, features, scales=(1, 2, 3), theta=theta)
        want = feather_oracle(g, features, scales=(1, 2, 3), theta=theta)
        assert np.allclose(got, want, atol=1e-10)

    @settings(max_examples=15, deadline=None)
    @given(st.integers(0, 100))
    def test_matches_oracle_on_random_graphs(self, seed):
        g = random_graph(seed, max_nodes=5)
        features = hash_features(g, 8)
        theta = default_theta(3)
        got = feather_embed(g, features, scales=(1, 2), theta=theta)
        want = feather_oracle(g, features, scales=(1, 2), theta=theta)
        assert np.allclose(got, want, atol=1e-10)

    def test_permutation_of_storage_order(self):
        g = random_graph(17)
        features = hash_features(g, 8)
        shuffled = CausalGraph(id=g.id, nodes=tuple(reversed(g.nodes)), edges=tuple(reversed(g.edges)))
        e1 = feather_embed(g, features)
        e2 = feather_embed(shuffled, features)
        assert np.allclose(e1, e2, atol=1e-6)

    def test_bad_scales_rejected(self):
        g = random_graph(1)
        with pytest.raises(ValueError):
            feather_embed(g, hash_features(g, 16), scales=(0,))

    def test_empty_graph_rejected(self):
        with pytest.raises(ValueError):
            feather_embed(CausalGraph(id="g"), {})
