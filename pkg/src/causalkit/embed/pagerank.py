"""PageRank by power iteration on the directed edge structure."""

from __future__ import annotations

import numpy as np

from causalkit.graph import CausalGraph


def pagerank(
    graph: CausalGraph, damping: float = 0.85, iterations: int = 100
) -> dict[str, float]:
    """Node weights summing to 1, with uniform teleport and dangling spread.

    Duplicate-direction edges (Enables plus Blocks between the same pair)
    count once; dangling nodes redistribute their mass uniformly.
    """
    if graph.node_count == 0:
        raise ValueError("pagerank requires at least one node")
    if not 0.0 < damping < 1.0:
        raise ValueError(f"damping must be in (0, 1), got {damping}")
    ids = list(graph.sorted_node_ids)
    index = {node_id: i for i, node_id in enumerate(ids)}
    n = len(ids)

    pairs = {(index[e.head], index[e.tail]) for e in graph.edges}
    out_degree = np.zeros(n)
    for head, _tail in pairs:
        out_degree[head] += 1

    transition = np.zeros((n, n))
    for head, tail in pairs:
        transition[head, tail] = 1.0 / out_degree[head]
    dangling = out_degree == 0

    p = np.full(n, 1.0 / n)
    for _ in range(iterations):
        spread = p[dangling].sum() / n
        p_next = (1.0 - damping) / n + damping * (transition.T @ p + spread)
        if np.abs(p_next - p).sum() < 1e-12:
            p = p_next
            break
        p = p_next
    return {node_id: float(p[i]) for node_id, i in index.items()}
