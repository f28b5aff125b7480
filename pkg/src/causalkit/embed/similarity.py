"""Cosine similarity and the masked-embedding training loss."""

from __future__ import annotations

import numpy as np

EPSILON = 1e-8


def cosine_similarity(a: np.ndarray, b: np.ndarray) -> float:
    """dot(a, b) / max(|a||b|, 1e-8), clipped into [-1, 1].

    The epsilon guard makes the similarity of a zero vector with anything 0.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    denom = max(float(np.linalg.norm(a)) * float(np.linalg.norm(b)), EPSILON)
    return float(np.clip(float(a @ b) / denom, -1.0, 1.0))


def loss_cos_diff(pred: np.ndarray, target: np.ndarray) -> float:
    """Absolute cosine-similarity-difference loss, in [0, 2]."""
    return abs(1.0 - cosine_similarity(pred, target))


def cosine_grad_wrt_first(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Gradient of cosine_similarity(a, b) with respect to ``a`` (b fixed)."""
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na * nb <= EPSILON:
        return b / EPSILON
    cos = float(a @ b) / (na * nb)
    return b / (na * nb) - cos * a / (na * na)


def loss_cos_diff_grad_wrt_pred(pred: np.ndarray, target: np.ndarray) -> np.ndarray:
    """Gradient of loss_cos_diff with respect to ``pred`` (target detached)."""
    na = float(np.linalg.norm(pred))
    nb = float(np.linalg.norm(target))
    denom = max(na * nb, EPSILON)
    cos = float(pred @ target) / denom
    if cos == 1.0:
        return np.zeros_like(pred)
    sign = 1.0 if 1.0 - cos > 0 else -1.0
    return -sign * cosine_grad_wrt_first(pred, target)
