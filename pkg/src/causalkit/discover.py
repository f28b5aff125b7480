"""Unsupervised discovery: K-means clustering, TF-IDF vectors, schema matching."""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from causalkit.embed.similarity import cosine_similarity

_TOKEN_RE = re.compile(r"[a-z0-9]+")

MAX_KMEANS_ITERATIONS = 300
CENTROID_SHIFT_TOLERANCE = 1e-4


@dataclass(frozen=True)
class ClusterAssignment:
    """K-means output: item -> cluster index, centroids, and final inertia."""

    assignment: dict[str, int]
    centroids: np.ndarray
    inertia: float
    inertia_trace: tuple[float, ...] = ()

    @property
    def k(self) -> int:
        return self.centroids.shape[0]

    def members(self, cluster: int) -> list[str]:
        return sorted(i for i, c in self.assignment.items() if c == cluster)

    def evaluated_subset(
        self, items: Mapping[str, np.ndarray], per_cluster: int = 25
    ) -> frozenset[str]:
        """Ids of the ``per_cluster`` points nearest each centroid.

        Evaluation-time subsampling: the full assignment stays intact, only
        metric computation restricts to this subset.
        """
        chosen: set[str] = set()
        for cluster in range(self.k):
            member_ids = self.members(cluster)
            ranked = sorted(
                member_ids,
                key=lambda i: (float(np.sum((np.asarray(items[i]) - self.centroids[cluster]) ** 2)), i),
            )
            chosen.update(ranked[:per_cluster])
        return frozenset(chosen)


def kmeans(embeddings: Mapping[str, np.ndarray], k: int = 6, seed: int = 0) -> ClusterAssignment:
    """Seeded k-means++ with Lloyd iterations and farthest-point repair.

    Items are processed in sorted-id order, so the result does not depend on
    the mapping's iteration order. Empty clusters are re-seeded with the point
    currently farthest from its centroid.
    """
    ids = sorted(embeddings)
    n = len(ids)
    if n < k:
        raise ValueError(f"need at least k={k} items, got {n}")
    if k < 1:
        raise ValueError(f"k must be positive, got {k}")
    X = np.stack([np.asarray(embeddings[i], dtype=float) for i in ids])
    rng = np.random.default_rng(seed)

    # k-means++ seeding
    centroids = np.empty((k, X.shape[1]))
    centroids[0] = X[rng.integers(n)]
    closest = np.sum((X - centroids[0]) ** 2, axis=1)
    for c in range(1, k):
        total = closest.sum()
        if total > 0:
            probs = closest / total
            pick = rng.choice(n, p=probs)
        else:
            pick = rng.integers(n)
        centroids[c] = X[pick]
        closest = np.minimum(closest, np.sum((X - centroids[c]) ** 2, axis=1))

    trace = []
    labels = np.zeros(n, dtype=int)
    for _ in range(MAX_KMEANS_ITERATIONS):
        distances = np.sum((X[:, None, :] - centroids[None, :, :]) ** 2, axis=2)
        labels = distances.argmin(axis=1)
        dists = distances[np.arange(n), labels]

        taken: set[int] = set()
        for cluster in range(k):
            if np.any(labels == cluster):
                continue
            order = np.argsort(-dists, kind="stable")
            for j in order:
                if int(j) not in taken:
                    taken.add(int(j))
                    labels[j] = cluster
                    centroids[cluster] = X[j]
                    dists[j] = 0.0
                    break
        trace.append(float(dists.sum()))

        new_centroids = centroids.copy()
        for cluster in range(k):
            members = labels == cluster
            if np.any(members):
                new_centroids[cluster] = X[members].mean(axis=0)
        shift = float(np.max(np.linalg.norm(new_centroids - centroids, axis=1)))
        centroids = new_centroids
        if shift < CENTROID_SHIFT_TOLERANCE:
            break

    distances = np.sum((X[:, None, :] - centroids[None, :, :]) ** 2, axis=2)
    labels = distances.argmin(axis=1)
    inertia = float(distances[np.arange(n), labels].sum())
    return ClusterAssignment(
        assignment={ids[i]: int(labels[i]) for i in range(n)},
        centroids=centroids,
        inertia=inertia,
        inertia_trace=tuple(trace),
    )


@dataclass(frozen=True)
class SparseVector:
    """L2-normalized index -> weight map over a shared vocabulary."""

    weights: dict[int, float] = field(default_factory=dict)

    def norm(self) -> float:
        return math.sqrt(sum(w * w for w in self.weights.values()))

    def cosine(self, other: "SparseVector") -> float:
        if not self.weights or not other.weights:
            return 0.0
        small, large = sorted((self.weights, other.weights), key=len)
        dot = sum(w * large.get(i, 0.0) for i, w in small.items())
        return dot / max(self.norm() * other.norm(), 1e-8)

    def to_dense(self, dim: int) -> np.ndarray:
        vec = np.zeros(dim)
        for i, w in self.weights.items():
            vec[i] = w
        return vec


def tokenize(text: str) -> list[str]:
    """Lowercased maximal alphanumeric runs."""
    return _TOKEN_RE.findall(text.lower())


def tfidf_fit_transform(texts: Sequence[str]) -> tuple[list[SparseVector], tuple[str, ...]]:
    """Smooth-idf TF-IDF: weight = tf * (ln((1+N)/(1+df)) + 1), L2-normalized."""
    if not texts:
        raise ValueError("tfidf needs at least one document")
    token_lists = [tokenize(t) for t in texts]
    vocabulary = tuple(sorted({tok for tokens in token_lists for tok in tokens}))
    index = {tok: i for i, tok in enumerate(vocabulary)}
    df = np.zeros(len(vocabulary))
    for tokens in token_lists:
        for tok in set(tokens):
            df[index[tok]] += 1
    n_docs = len(texts)
    idf = np.log((1.0 + n_docs) / (1.0 + df)) + 1.0

    vectors = []
    for tokens in token_lists:
        counts: dict[int, float] = {}
        for tok in tokens:
            counts[index[tok]] = counts.get(index[tok], 0.0) + 1.0
        weights = {i: tf * idf[i] for i, tf in counts.items()}
        norm = math.sqrt(sum(w * w for w in weights.values()))
        if norm > 0:
            weights = {i: w / norm for i, w in weights.items()}
        vectors.append(SparseVector(weights))
    return vectors, vocabulary


@dataclass(frozen=True)
class RankedMatches:
    """Descending similarity ranking of library entries for one query."""

    query_id: str
    matches: tuple[tuple[str, float], ...]

    def ranked_ids(self) -> list[str]:
        return [library_id for library_id, _ in self.matches]


def rank_matches(
    query: np.ndarray,
    library: Mapping[str, np.ndarray],
    top_k: int = 5,
    query_id: str = "",
) -> RankedMatches:
    """Cosine-ranked library entries, ties broken by id, truncated to top_k."""
    if not library:
        raise ValueError("library is empty")
    if top_k < 1:
        raise ValueError(f"top_k must be positive, got {top_k}")
    query = np.asarray(query, dtype=float)
    scored = []
    for library_id in sorted(library):
        scored.append((library_id, cosine_similarity(query, library[library_id])))
    scored.sort(key=lambda pair: (-pair[1], pair[0]))
    return RankedMatches(query_id=query_id, matches=tuple(scored[:top_k]))


def match_corpus(
    queries: Mapping[str, np.ndarray],
    library: Mapping[str, np.ndarray],
    top_k: int = 5,
) -> dict[str, RankedMatches]:
    """Independent rank_matches per query, keyed and ordered by query id."""
    return {
        query_id: rank_matches(queries[query_id], library, top_k, query_id=query_id)
        for query_id in sorted(queries)
    }
