"""Random-walk characteristic function graph embeddings."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from causalkit.graph import CausalGraph
from causalkit.embed.features import NodeFeatures, feature_matrix

DEFAULT_SCALES = (1, 2)
DEFAULT_THETA_POINTS = 8
DEFAULT_THETA_MAX = 5.0


def default_theta(points: int = DEFAULT_THETA_POINTS, theta_max: float = DEFAULT_THETA_MAX) -> np.ndarray:
    """Evaluation points linearly spaced over (0, theta_max]."""
    if points < 1 or theta_max <= 0:
        raise ValueError(f"bad theta grid: {points} points, max {theta_max}")
    return np.linspace(theta_max / points, theta_max, points)


def transition_matrix(graph: CausalGraph) -> np.ndarray:
    """Row-stochastic random-walk transitions on the undirected simple view.

    Isolated nodes get an identity row (the walk stays in place).
    """
    ids = list(graph.sorted_node_ids)
    index = {node_id: i for i, node_id in enumerate(ids)}
    n = len(ids)
    adjacency = np.zeros((n, n))
    for node_id, neighbors in graph.undirected_neighbors().items():
        for other in neighbors:
            adjacency[index[node_id], index[other]] = 1.0
    degree = adjacency.sum(axis=1)
    transition = np.zeros((n, n))
    for i in range(n):
        if degree[i] == 0:
            transition[i, i] = 1.0
        else:
            transition[i] = adjacency[i] / degree[i]
    return transition


def feather_embed(
    graph: CausalGraph,
    features: NodeFeatures,
    scales: Sequence[int] = DEFAULT_SCALES,
    theta: np.ndarray | None = None,
) -> np.ndarray:
    """Graph embedding from cos/sin characteristic functions of walk endpoints.

    For walk length r, evaluation point t, and feature column f, the node-level
    values are E[cos(t * x_f(v))] and E[sin(t * x_f(v))] with v drawn from the
    r-step transition from the node; the graph embedding is the node mean.
    Layout: scales ascending, then theta ascending, each as a cos block of
    width d followed by a sin block of width d. Total dimension is
    ``len(scales) * len(theta) * d * 2``.
    """
    if theta is None:
        theta = default_theta()
    theta = np.asarray(theta, dtype=float)
    if any(int(r) != r or r < 1 for r in scales):
        raise ValueError(f"walk scales must be positive integers, got {scales!r}")
    if graph.node_count == 0:
        raise ValueError("feather_embed requires at least one node")

    _, X = feature_matrix(graph, features)
    blocks = []
    for t in theta:
        blocks.append(np.cos(t * X))
        blocks.append(np.sin(t * X))
    H = np.concatenate(blocks, axis=1)

    P = transition_matrix(graph)
    parts = []
    power = np.eye(P.shape[0])
    reached = 0
    for r in sorted(int(r) for r in scales):
        power = power @ np.linalg.matrix_power(P, r - reached)
        reached = r
        parts.append(power @ H)
    node_embeddings = np.concatenate(parts, axis=1)
    return node_embeddings.mean(axis=0)
