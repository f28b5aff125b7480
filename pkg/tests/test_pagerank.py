import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from causalkit.embed import pagerank
from causalkit.graph import CausalGraph, CausalNode
from conftest import make_graph, random_graph


def pagerank_oracle(graph, damping=0.85, iterations=200):
    """Naive scalar-loop power iteration, independent of the implementation."""
    ids = sorted(n.id for n in graph.nodes)
    out_links = {i: set() for i in ids}
    for edge in graph.edges:
        out_links[edge.head].add(edge.tail)
    n = len(ids)
    p = {i: 1.0 / n for i in ids}
    for _ in range(iterations):
        nxt = {i: (1.0 - damping) / n for i in ids}
        for i in ids:
            if out_links[i]:
                share = p[i] / len(out_links[i])
                for j in out_links[i]:
                    nxt[j] += damping * share
            else:
                for j in ids:
                    nxt[j] += damping * p[i] / n
        p = nxt
    return p


class TestPagerank:
    def test_two_cycle_is_symmetric(self):
        weights = pagerank(make_graph([("a", "b"), ("b", "a")]))
        assert abs(weights["a"] - 0.5) < 1e-9
        assert abs(weights["b"] - 0.5) < 1e-9

    def test_single_node(self):
        g = CausalGraph(id="g", nodes=(CausalNode("v", "v"),))
        assert pagerank(g) == {"v": 1.0}

    def test_three_node_chain_frozen_oracle_values(self):
        # frozen output of the scalar-loop oracle above on a -> b -> c
        weights = pagerank(make_graph([("a", "b"), ("b", "c")]))
        assert abs(weights["a"] - 0.18441678192715533) < 1e-8
        assert abs(weights["b"] - 0.34117104656523733) < 1e-8
        assert abs(weights["c"] - 0.47441217150760706) < 1e-8

    def test_empty_graph_rejected(self):
        with pytest.raises(ValueError):
            pagerank(CausalGraph(id="g"))

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 500))
    def test_matches_oracle_on_random_graphs(self, seed):
        g = random_graph(seed)
        got = pagerank(g, iterations=300)
        want = pagerank_oracle(g, iterations=300)
        for node_id in want:
            assert abs(got[node_id] - want[node_id]) < 1e-8

    @given(st.integers(0, 200))
    def test_probability_distribution(self, seed):
        weights = pagerank(random_graph(seed))
        assert all(w >= 0 for w in weights.values())
        assert abs(sum(weights.values()) - 1.0) < 1e-9

    @given(st.integers(0, 100))
    def test_fixed_point_of_damped_operator(self, seed):
        g = random_graph(seed)
        p = pagerank(g, iterations=300)
        ids = sorted(p)
        n = len(ids)
        out_links = {i: set() for i in ids}
        for edge in g.edges:
            out_links[edge.head].add(edge.tail)
        applied = {i: 0.15 / n for i in ids}
        for i in ids:
            if out_links[i]:
                for j in out_links[i]:
                    applied[j] += 0.85 * p[i] / len(out_links[i])
            else:
                for j in ids:
                    applied[j] += 0.85 * p[i] / n
        for i in ids:
            assert abs(applied[i] - p[i]) < 1e-9
