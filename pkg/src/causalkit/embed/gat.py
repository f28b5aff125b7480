"""Two-layer graph attention encoder with masked self-supervised training.

The forward pass attends over in-neighbors plus a self-loop, with the signed
edge scalar appended to the attention input. Gradients are computed
analytically (hand-written backward pass), so training is exactly
reproducible and checkable against finite differences.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from causalkit.graph import CausalGraph, edge_scalar
from causalkit.embed.features import NodeFeatures, feature_matrix
from causalkit.embed.pagerank import pagerank
from causalkit.embed.similarity import loss_cos_diff, loss_cos_diff_grad_wrt_pred

LEAKY_SLOPE = 0.2
SELF_LOOP_SCALAR = 1.0

PARAM_NAMES = ("w1", "a1", "w2", "a2", "w_out")


@dataclass
class GnnParams:
    """Attention weights/vectors of both layers plus the final linear map.

    Attention vectors have length ``2 * hidden + 1``: transformed head,
    transformed tail, and one slot for the signed edge scalar.
    """

    w1: np.ndarray
    a1: np.ndarray
    w2: np.ndarray
    a2: np.ndarray
    w_out: np.ndarray

    def __post_init__(self) -> None:
        h1, _ = self.w1.shape
        h2, h1_in = self.w2.shape
        out, h2_in = self.w_out.shape
        if h1_in != h1 or h2_in != h2:
            raise ValueError("layer widths are inconsistent")
        if self.a1.shape != (2 * h1 + 1,) or self.a2.shape != (2 * h2 + 1,):
            raise ValueError("attention vector length must be 2 * hidden + 1")
        for name in PARAM_NAMES:
            if not np.all(np.isfinite(getattr(self, name))):
                raise ValueError(f"non-finite values in parameter {name}")

    @property
    def in_dim(self) -> int:
        return self.w1.shape[1]

    @property
    def out_dim(self) -> int:
        return self.w_out.shape[0]

    @classmethod
    def init(
        cls,
        in_dim: int,
        hidden: tuple[int, int] = (128, 128),
        out_dim: int = 128,
        seed: int = 0,
    ) -> "GnnParams":
        """Glorot-uniform initialization, deterministic given the seed."""
        rng = np.random.default_rng(seed)

        def glorot(rows: int, cols: int) -> np.ndarray:
            limit = math.sqrt(6.0 / (rows + cols))
            return rng.uniform(-limit, limit, size=(rows, cols))

        h1, h2 = hidden
        return cls(
            w1=glorot(h1, in_dim),
            a1=glorot(1, 2 * h1 + 1)[0],
            w2=glorot(h2, h1),
            a2=glorot(1, 2 * h2 + 1)[0],
            w_out=glorot(out_dim, h2),
        )

    def copy(self) -> "GnnParams":
        return GnnParams(*(getattr(self, name).copy() for name in PARAM_NAMES))

    def as_dict(self) -> dict[str, np.ndarray]:
        return {name: getattr(self, name) for name in PARAM_NAMES}

    def save(self, path: str | Path) -> None:
        """Flat named-tensor text file with shape headers."""
        lines = []
        for name in PARAM_NAMES:
            tensor = np.atleast_2d(getattr(self, name))
            shape = getattr(self, name).shape
            lines.append(f"tensor {name} {' '.join(str(s) for s in shape)}")
            for row in tensor:
                lines.append(" ".join(repr(float(v)) for v in row))
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "GnnParams":
        tensors: dict[str, np.ndarray] = {}
        tokens = Path(path).read_text(encoding="utf-8").split()
        pos = 0
        while pos < len(tokens):
            if tokens[pos] != "tensor":
                raise ValueError(f"{path}: expected tensor header, got {tokens[pos]!r}")
            name = tokens[pos + 1]
            pos += 2
            shape = []
            while pos < len(tokens) and tokens[pos].isdigit():
                shape.append(int(tokens[pos]))
                pos += 1
            count = int(np.prod(shape))
            values = np.array([float(t) for t in tokens[pos : pos + count]])
            if values.size != count:
                raise ValueError(f"{path}: tensor {name} is truncated")
            tensors[name] = values.reshape(shape)
            pos += count
        missing = [n for n in PARAM_NAMES if n not in tensors]
        if missing:
            raise ValueError(f"{path}: missing tensors: {', '.join(missing)}")
        return cls(**{name: tensors[name] for name in PARAM_NAMES})


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 3
    learning_rate: float = 1e-3
    dropout: float = 0.5
    mask_rate: float = 0.15
    masked_variants_sampled: int = 10
    masked_variants_used: int = 5
    masking_mode: str = "uniform"
    seed: int = 0

    def __post_init__(self) -> None:
        if not 0.0 < self.mask_rate < 1.0:
            raise ValueError(f"mask_rate must be in (0, 1), got {self.mask_rate}")
        if self.masked_variants_used > self.masked_variants_sampled:
            raise ValueError("masked_variants_used exceeds masked_variants_sampled")
        if self.masking_mode not in ("uniform", "pagerank"):
            raise ValueError(f"unknown masking_mode: {self.masking_mode!r}")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError(f"dropout must be in [0, 1), got {self.dropout}")


def _neighborhoods(graph: CausalGraph) -> list[tuple[np.ndarray, np.ndarray]]:
    """Per-destination in-neighbor index/scalar arrays, self-loop first.

    Destinations are ordered by sorted node id to match feature_matrix.
    """
    ids = graph.sorted_node_ids
    index = {node_id: i for i, node_id in enumerate(ids)}
    incoming: list[list[tuple[int, float]]] = [[] for _ in ids]
    for edge in graph.edges:
        incoming[index[edge.tail]].append((index[edge.head], edge_scalar(edge.relation)))
    hoods = []
    for i in range(len(ids)):
        entries = [(i, SELF_LOOP_SCALAR)] + sorted(incoming[i])
        hoods.append(
            (
                np.array([src for src, _ in entries], dtype=int),
                np.array([s for _, s in entries], dtype=float),
            )
        )
    return hoods


@dataclass
class _LayerCache:
    Z: np.ndarray
    U: np.ndarray
    H: np.ndarray
    qs: list[np.ndarray]
    alphas: list[np.ndarray]
    alphas_used: list[np.ndarray]
    keeps: list[np.ndarray | None]
    dropout: float


def _layer_forward(
    W: np.ndarray,
    a: np.ndarray,
    X: np.ndarray,
    hoods: Sequence[tuple[np.ndarray, np.ndarray]],
    dropout: float = 0.0,
    rng: np.random.Generator | None = None,
) -> _LayerCache:
    dh = W.shape[0]
    if X.shape[1] != W.shape[1]:
        raise ValueError(f"feature dimension {X.shape[1]} does not match layer input {W.shape[1]}")
    Z = X @ W.T
    score_src = Z @ a[:dh]
    score_dst = Z @ a[dh : 2 * dh]
    a_edge = a[-1]

    n = X.shape[0]
    U = np.zeros((n, dh))
    qs, alphas, alphas_used, keeps = [], [], [], []
    for i, (src, scal) in enumerate(hoods):
        q = score_src[src] + score_dst[i] + a_edge * scal
        logits = np.where(q > 0, q, LEAKY_SLOPE * q)
        logits = logits - logits.max()
        exp = np.exp(logits)
        alpha = exp / exp.sum()
        if dropout > 0.0 and rng is not None:
            keep = (rng.random(alpha.shape[0]) >= dropout).astype(float)
            alpha_used = alpha * keep / (1.0 - dropout)
        else:
            keep = None
            alpha_used = alpha
        U[i] = alpha_used @ Z[src]
        qs.append(q)
        alphas.append(alpha)
        alphas_used.append(alpha_used)
        keeps.append(keep)
    H = np.where(U > 0, U, np.expm1(U))
    return _LayerCache(Z=Z, U=U, H=H, qs=qs, alphas=alphas, alphas_used=alphas_used, keeps=keeps, dropout=dropout)


def _layer_backward(
    W: np.ndarray,
    a: np.ndarray,
    X: np.ndarray,
    hoods: Sequence[tuple[np.ndarray, np.ndarray]],
    cache: _LayerCache,
    dH: np.ndarray,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    dh = W.shape[0]
    n = X.shape[0]
    Z = cache.Z
    dU = dH * np.where(cache.U > 0, 1.0, np.exp(cache.U))

    dZ = np.zeros_like(Z)
    d_score_src = np.zeros(n)
    d_score_dst = np.zeros(n)
    da = np.zeros_like(a)
    for i, (src, scal) in enumerate(hoods):
        alpha = cache.alphas[i]
        d_alpha_used = Z[src] @ dU[i]
        np.add.at(dZ, src, np.outer(cache.alphas_used[i], dU[i]))
        keep = cache.keeps[i]
        if keep is not None:
            d_alpha = d_alpha_used * keep / (1.0 - cache.dropout)
        else:
            d_alpha = d_alpha_used
        de = alpha * (d_alpha - float(alpha @ d_alpha))
        dq = de * np.where(cache.qs[i] > 0, 1.0, LEAKY_SLOPE)
        np.add.at(d_score_src, src, dq)
        d_score_dst[i] += dq.sum()
        da[-1] += float(dq @ scal)

    dZ += d_score_src[:, None] * a[None, :dh] + d_score_dst[:, None] * a[None, dh : 2 * dh]
    da[:dh] += d_score_src @ Z
    da[dh : 2 * dh] += d_score_dst @ Z
    dW = dZ.T @ X
    dX = dZ @ W
    return dX, dW, da


def _forward(
    params: GnnParams,
    X: np.ndarray,
    hoods: Sequence[tuple[np.ndarray, np.ndarray]],
    dropout: float = 0.0,
    rng: np.random.Generator | None = None,
) -> tuple[np.ndarray, tuple]:
    c1 = _layer_forward(params.w1, params.a1, X, hoods, dropout, rng)
    c2 = _layer_forward(params.w2, params.a2, c1.H, hoods, dropout, rng)
    g = c2.H.mean(axis=0)
    y = params.w_out @ g
    return y, (c1, c2, g)


def _backward(
    params: GnnParams,
    X: np.ndarray,
    hoods: Sequence[tuple[np.ndarray, np.ndarray]],
    cache: tuple,
    dy: np.ndarray,
) -> dict[str, np.ndarray]:
    c1, c2, g = cache
    n = X.shape[0]
    d_w_out = np.outer(dy, g)
    dg = params.w_out.T @ dy
    dH2 = np.tile(dg / n, (n, 1))
    dH1, d_w2, d_a2 = _layer_backward(params.w2, params.a2, c1.H, hoods, c2, dH2)
    _, d_w1, d_a1 = _layer_backward(params.w1, params.a1, X, hoods, c1, dH1)
    return {"w1": d_w1, "a1": d_a1, "w2": d_w2, "a2": d_a2, "w_out": d_w_out}


def gat_embed(
    params: GnnParams,
    graph: CausalGraph,
    features: NodeFeatures,
    dropout_active: bool = False,
    rng: np.random.Generator | None = None,
) -> np.ndarray:
    """Graph embedding: two attention layers, mean pooling, final linear map."""
    if graph.node_count == 0:
        raise ValueError("gat_embed requires at least one node")
    if dropout_active and rng is None:
        raise ValueError("dropout_active requires a random generator")
    _, X = feature_matrix(graph, features)
    hoods = _neighborhoods(graph)
    dropout = 0.5 if dropout_active else 0.0
    y, _ = _forward(params, X, hoods, dropout, rng if dropout_active else None)
    return y


def _draw_mask_positions(
    n: int,
    config: TrainConfig,
    rng: np.random.Generator,
    weights: np.ndarray | None = None,
) -> np.ndarray:
    count = min(n, max(1, math.ceil(config.mask_rate * n)))
    if config.masking_mode == "uniform" or weights is None:
        return np.sort(rng.choice(n, size=count, replace=False))
    remaining = list(range(n))
    picked = []
    for _ in range(count):
        w = weights[remaining]
        total = w.sum()
        p = w / total if total > 0 else None
        choice = rng.choice(len(remaining), p=p)
        picked.append(remaining.pop(choice))
    return np.sort(np.array(picked, dtype=int))


def mask_nodes(
    features: NodeFeatures,
    graph: CausalGraph,
    config: TrainConfig,
    rng: np.random.Generator,
) -> tuple[dict[str, np.ndarray], tuple[str, ...]]:
    """Zero out ceil(mask_rate * n) node feature vectors (at least one).

    Selection is uniform or proportional to PageRank weight per the config.
    """
    ids = graph.sorted_node_ids
    weights = None
    if config.masking_mode == "pagerank":
        pr = pagerank(graph)
        weights = np.array([pr[node_id] for node_id in ids])
    positions = _draw_mask_positions(len(ids), config, rng, weights)
    masked_ids = tuple(ids[p] for p in positions)
    masked = {node_id: np.asarray(vec, dtype=float) for node_id, vec in features.items()}
    for node_id in masked_ids:
        masked[node_id] = np.zeros_like(masked[node_id])
    return masked, masked_ids


def _masked_grads_from_arrays(
    params: GnnParams,
    X: np.ndarray,
    hoods: Sequence[tuple[np.ndarray, np.ndarray]],
    mask_position_sets: Sequence[np.ndarray],
    dropout: float = 0.0,
    rng: np.random.Generator | None = None,
    with_grads: bool = True,
    target: np.ndarray | None = None,
) -> tuple[float, dict[str, np.ndarray] | None]:
    if not mask_position_sets:
        raise ValueError("need at least one masked variant")
    if target is None:
        target, _ = _forward(params, X, hoods)  # dropout-free target, gradients blocked
    total = 0.0
    grads = {name: np.zeros_like(getattr(params, name)) for name in PARAM_NAMES} if with_grads else None
    scale = 1.0 / len(mask_position_sets)
    for positions in mask_position_sets:
        Xm = X.copy()
        Xm[np.asarray(positions, dtype=int)] = 0.0
        y, cache = _forward(params, Xm, hoods, dropout, rng)
        total += loss_cos_diff(y, target)
        if with_grads:
            dy = loss_cos_diff_grad_wrt_pred(y, target)
            step_grads = _backward(params, Xm, hoods, cache, dy)
            for name in PARAM_NAMES:
                grads[name] += scale * step_grads[name]
    return total * scale, grads


def _positions_for_ids(graph: CausalGraph, masked_id_sets: Iterable[Iterable[str]]) -> list[np.ndarray]:
    index = {node_id: i for i, node_id in enumerate(graph.sorted_node_ids)}
    return [np.array(sorted(index[m] for m in mask_ids), dtype=int) for mask_ids in masked_id_sets]


def masked_training_loss(
    params: GnnParams,
    graph: CausalGraph,
    features: NodeFeatures,
    masked_id_sets: Sequence[Iterable[str]],
    target: np.ndarray | None = None,
) -> float:
    """Mean masked-reconstruction loss against the detached full-graph embedding.

    ``target`` pins the reference embedding explicitly (e.g. for finite
    difference checks); by default it is recomputed, dropout-free, from the
    current parameters.
    """
    _, X = feature_matrix(graph, features)
    hoods = _neighborhoods(graph)
    loss, _ = _masked_grads_from_arrays(
        params, X, hoods, _positions_for_ids(graph, masked_id_sets), with_grads=False, target=target
    )
    return loss


def masked_training_grads(
    params: GnnParams,
    graph: CausalGraph,
    features: NodeFeatures,
    masked_id_sets: Sequence[Iterable[str]],
    target: np.ndarray | None = None,
) -> tuple[float, dict[str, np.ndarray]]:
    """Loss plus analytic parameter gradients for the masked objective.

    No gradient flows through the target embedding.
    """
    _, X = feature_matrix(graph, features)
    hoods = _neighborhoods(graph)
    loss, grads = _masked_grads_from_arrays(
        params, X, hoods, _positions_for_ids(graph, masked_id_sets), target=target
    )
    return loss, grads


class _Adam:
    """First-order adaptive updates with decay 0.9/0.999 and epsilon 1e-8."""

    def __init__(self, params: GnnParams, learning_rate: float):
        self.lr = learning_rate
        self.beta1, self.beta2, self.eps = 0.9, 0.999, 1e-8
        self.t = 0
        self.m = {name: np.zeros_like(getattr(params, name)) for name in PARAM_NAMES}
        self.v = {name: np.zeros_like(getattr(params, name)) for name in PARAM_NAMES}

    def step(self, params: GnnParams, grads: dict[str, np.ndarray]) -> None:
        self.t += 1
        for name in PARAM_NAMES:
            g = grads[name]
            self.m[name] = self.beta1 * self.m[name] + (1 - self.beta1) * g
            self.v[name] = self.beta2 * self.v[name] + (1 - self.beta2) * g * g
            m_hat = self.m[name] / (1 - self.beta1**self.t)
            v_hat = self.v[name] / (1 - self.beta2**self.t)
            tensor = getattr(params, name)
            tensor -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


def train_gnn(
    corpus: Sequence[tuple[CausalGraph, NodeFeatures]],
    config: TrainConfig = TrainConfig(),
    params: GnnParams | None = None,
    hidden: tuple[int, int] = (128, 128),
    out_dim: int = 128,
    steps: int | None = None,
) -> tuple[GnnParams, np.ndarray]:
    """Self-supervised training over masked graph variants.

    Each step takes the next graph round-robin, draws ``masked_variants_sampled``
    mask sets from the seeded stream, trains on the first
    ``masked_variants_used`` of them against the detached full-graph
    embedding, and applies one adaptive-gradient update. Returns the trained
    parameters and the per-step loss trace; the whole run is deterministic
    given the config seed.
    """
    corpus = list(corpus)
    if not corpus:
        raise ValueError("training corpus is empty")
    rng = np.random.default_rng(config.seed)

    prepared = []
    for graph, features in corpus:
        _, X = feature_matrix(graph, features)
        hoods = _neighborhoods(graph)
        weights = None
        if config.masking_mode == "pagerank":
            pr = pagerank(graph)
            weights = np.array([pr[node_id] for node_id in graph.sorted_node_ids])
        prepared.append((X, hoods, weights))

    if params is None:
        params = GnnParams.init(prepared[0][0].shape[1], hidden, out_dim, seed=config.seed)
    else:
        params = params.copy()

    if steps is None:
        steps = config.epochs * len(corpus)
    optimizer = _Adam(params, config.learning_rate)
    losses = []
    for step in range(steps):
        X, hoods, weights = prepared[step % len(prepared)]
        mask_sets = [
            _draw_mask_positions(X.shape[0], config, rng, weights)
            for _ in range(config.masked_variants_sampled)
        ]
        mask_sets = mask_sets[: config.masked_variants_used]
        loss, grads = _masked_grads_from_arrays(
            params,
            X,
            hoods,
            mask_sets,
            dropout=config.dropout,
            rng=rng if config.dropout > 0 else None,
        )
        if not math.isfinite(loss):
            raise ValueError(f"non-finite loss at step {step}")
        optimizer.step(params, grads)
        losses.append(loss)
    return params, np.array(losses)


def evaluate_corpus_loss(
    params: GnnParams,
    corpus: Sequence[tuple[CausalGraph, NodeFeatures]],
    config: TrainConfig = TrainConfig(),
    seed: int = 0,
) -> float:
    """Mean masked loss over a corpus with dropout off, deterministic given seed."""
    corpus = list(corpus)
    if not corpus:
        raise ValueError("corpus is empty")
    rng = np.random.default_rng(seed)
    total = 0.0
    for graph, features in corpus:
        _, X = feature_matrix(graph, features)
        hoods = _neighborhoods(graph)
        weights = None
        if config.masking_mode == "pagerank":
            pr = pagerank(graph)
            weights = np.array([pr[node_id] for node_id in graph.sorted_node_ids])
        mask_sets = [
            _draw_mask_positions(X.shape[0], config, rng, weights)
            for _ in range(config.masked_variants_sampled)
        ][: config.masked_variants_used]
        loss, _ = _masked_grads_from_arrays(params, X, hoods, mask_sets, with_grads=False)
        total += loss
    return total / len(corpus)
