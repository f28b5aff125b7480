"""Clustering metrics (purity, ARI, V-measure, event cluster purity) and
retrieval metrics (average precision, MAP, MRR)."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import AbstractSet, Iterable, Mapping, Sequence

from causalkit.discover import RankedMatches


def _check_aligned(*maps: Mapping) -> None:
    keys = set(maps[0])
    for m in maps[1:]:
        if set(m) != keys:
            raise ValueError("inputs are not aligned on the same item ids")


def purity(assignment: Mapping[str, int], labels: Mapping[str, str]) -> float:
    """Fraction of items in their cluster's majority label."""
    _check_aligned(assignment, labels)
    if not assignment:
        raise ValueError("purity needs at least one item")
    per_cluster: dict[int, Counter] = {}
    for item, cluster in assignment.items():
        per_cluster.setdefault(cluster, Counter())[labels[item]] += 1
    return sum(max(counts.values()) for counts in per_cluster.values()) / len(assignment)


def _comb2(x: int) -> int:
    return x * (x - 1) // 2


def adjusted_rand_index(assignment: Mapping[str, int], labels: Mapping[str, str]) -> float:
    """Pair-counting Rand index corrected for chance via the contingency table."""
    _check_aligned(assignment, labels)
    n = len(assignment)
    if n < 2:
        raise ValueError("adjusted_rand_index needs at least two items")
    contingency: dict[tuple[int, str], int] = Counter()
    cluster_sizes: Counter = Counter()
    label_sizes: Counter = Counter()
    for item, cluster in assignment.items():
        contingency[(cluster, labels[item])] += 1
        cluster_sizes[cluster] += 1
        label_sizes[labels[item]] += 1

    sum_ij = sum(_comb2(c) for c in contingency.values())
    sum_a = sum(_comb2(c) for c in cluster_sizes.values())
    sum_b = sum(_comb2(c) for c in label_sizes.values())
    expected = sum_a * sum_b / _comb2(n)
    maximum = (sum_a + sum_b) / 2.0
    if maximum == expected:
        return 1.0
    return (sum_ij - expected) / (maximum - expected)


def _entropy(sizes: Iterable[int], total: int) -> float:
    return -sum((s / total) * math.log(s / total) for s in sizes if s > 0)


def v_measure(
    assignment: Mapping[str, int], labels: Mapping[str, str]
) -> tuple[float, float, float]:
    """(homogeneity, completeness, v); the 0/0 conditional ratios default to 1."""
    _check_aligned(assignment, labels)
    if not assignment:
        raise ValueError("v_measure needs at least one item")
    n = len(assignment)
    contingency: Counter = Counter()
    cluster_sizes: Counter = Counter()
    label_sizes: Counter = Counter()
    for item, cluster in assignment.items():
        contingency[(cluster, labels[item])] += 1
        cluster_sizes[cluster] += 1
        label_sizes[labels[item]] += 1

    h_labels = _entropy(label_sizes.values(), n)
    h_clusters = _entropy(cluster_sizes.values(), n)
    h_labels_given_clusters = -sum(
        (count / n) * math.log(count / cluster_sizes[cluster])
        for (cluster, _label), count in contingency.items()
        if count > 0
    )
    h_clusters_given_labels = -sum(
        (count / n) * math.log(count / label_sizes[label])
        for (_cluster, label), count in contingency.items()
        if count > 0
    )
    homogeneity = 1.0 if h_labels == 0 else 1.0 - h_labels_given_clusters / h_labels
    completeness = 1.0 if h_clusters == 0 else 1.0 - h_clusters_given_labels / h_clusters
    if homogeneity + completeness == 0:
        v = 0.0
    else:
        v = 2 * homogeneity * completeness / (homogeneity + completeness)
    return homogeneity, completeness, v


def top_j_types(type_sets: Iterable[AbstractSet[str]], j: int) -> frozenset[str]:
    """The j most frequent types over the given sets, ties lexicographic.

    Frequency counts each set once per type it contains.
    """
    counts: Counter = Counter()
    for types in type_sets:
        counts.update(types)
    ranked = sorted(counts.items(), key=lambda pair: (-pair[1], pair[0]))
    return frozenset(name for name, _count in ranked[:j])


def event_cluster_purity(
    assignment: Mapping[str, int],
    event_types: Mapping[str, AbstractSet[str]],
    j: int = 10,
) -> float:
    """Mean per-graph overlap with its cluster's top-j event types.

    Each cluster's reference set is the j most frequent types among member
    graphs; each graph scores the size of the intersection between that set
    and its own types. The mean is over all graphs.
    """
    _check_aligned(assignment, event_types)
    if not assignment:
        raise ValueError("event_cluster_purity needs at least one item")
    if j < 1:
        raise ValueError(f"j must be >= 1, got {j}")
    clusters: dict[int, list[str]] = {}
    for item, cluster in assignment.items():
        clusters.setdefault(cluster, []).append(item)

    total = 0
    for members in clusters.values():
        reference = top_j_types([event_types[m] for m in members], j)
        total += sum(len(reference & set(event_types[m])) for m in members)
    return total / len(assignment)


@dataclass(frozen=True)
class LabeledAssignment:
    """Aligned cluster indices, ground-truth topic labels, and event type sets."""

    clusters: Mapping[str, int]
    labels: Mapping[str, str]
    event_types: Mapping[str, frozenset[str]]

    def __post_init__(self) -> None:
        _check_aligned(self.clusters, self.labels, self.event_types)

    def restrict(self, ids: AbstractSet[str]) -> "LabeledAssignment":
        keep = set(ids) & set(self.clusters)
        return LabeledAssignment(
            clusters={i: self.clusters[i] for i in keep},
            labels={i: self.labels[i] for i in keep},
            event_types={i: self.event_types[i] for i in keep},
        )

    def evaluate(self, j: int = 10) -> dict[str, float]:
        homogeneity, completeness, v = v_measure(self.clusters, self.labels)
        return {
            "purity": purity(self.clusters, self.labels),
            "ari": adjusted_rand_index(self.clusters, self.labels),
            "homogeneity": homogeneity,
            "completeness": completeness,
            "v_measure": v,
            "event_cluster_purity": event_cluster_purity(self.clusters, self.event_types, j),
        }


def average_precision(ranked: RankedMatches | Sequence[str], relevant: AbstractSet[str]) -> float:
    """Mean precision at each relevant hit, normalized by min(|relevant|, |ranked|)."""
    if not relevant:
        raise ValueError("relevant set is empty")
    ranked_ids = ranked.ranked_ids() if isinstance(ranked, RankedMatches) else list(ranked)
    if not ranked_ids:
        return 0.0
    hits = 0
    precision_sum = 0.0
    for position, item in enumerate(ranked_ids, start=1):
        if item in relevant:
            hits += 1
            precision_sum += hits / position
    return precision_sum / min(len(relevant), len(ranked_ids))


def first_relevant_rank(
    ranked: RankedMatches | Sequence[str], relevant: AbstractSet[str]
) -> int | None:
    ranked_ids = ranked.ranked_ids() if isinstance(ranked, RankedMatches) else list(ranked)
    for position, item in enumerate(ranked_ids, start=1):
        if item in relevant:
            return position
    return None


def map_score(average_precisions: Sequence[float]) -> float:
    """Arithmetic mean of per-query average precisions."""
    if not average_precisions:
        raise ValueError("map_score needs at least one evaluated query")
    return sum(average_precisions) / len(average_precisions)


def mrr(first_relevant_ranks: Sequence[int | None]) -> float:
    """Mean reciprocal first-relevant rank; queries with no hit contribute 0."""
    if not first_relevant_ranks:
        raise ValueError("mrr needs at least one evaluated query")
    return sum(1.0 / r if r else 0.0 for r in first_relevant_ranks) / len(first_relevant_ranks)


@dataclass(frozen=True)
class RelevanceJudgment:
    """Binary relevance: query id -> the set of relevant library ids."""

    relevant: Mapping[str, frozenset[str]]

    def __post_init__(self) -> None:
        for query_id, ids in self.relevant.items():
            if not ids:
                raise ValueError(f"query {query_id!r} has an empty relevant set")

    @classmethod
    def from_topic_labels(
        cls, query_topics: Mapping[str, str], library_topics: Mapping[str, str]
    ) -> "RelevanceJudgment":
        """Relevance by topic-label equality; unlabeled or unmatched queries drop out."""
        relevant = {}
        for query_id, topic in query_topics.items():
            if not topic:
                continue
            ids = frozenset(l for l, t in library_topics.items() if t == topic)
            if ids:
                relevant[query_id] = ids
        return cls(relevant)

    @classmethod
    def from_type_overlap(
        cls,
        query_types: Mapping[str, AbstractSet[str]],
        library_types: Mapping[str, AbstractSet[str]],
        min_overlap: int = 1,
    ) -> "RelevanceJudgment":
        """Relevance by event-type overlap of at least ``min_overlap`` names."""
        relevant = {}
        for query_id, types in query_types.items():
            ids = frozenset(
                l for l, lt in library_types.items() if len(set(types) & set(lt)) >= min_overlap
            )
            if ids:
                relevant[query_id] = ids
        return cls(relevant)


def evaluate_matches(
    matches: Mapping[str, RankedMatches], judgment: RelevanceJudgment
) -> dict[str, float | dict[str, float]]:
    """MAP/MRR over the queries covered by the judgment, with per-query details."""
    per_query_ap: dict[str, float] = {}
    per_query_rank: dict[str, int | None] = {}
    for query_id, ranked in matches.items():
        relevant = judgment.relevant.get(query_id)
        if relevant is None:
            continue
        per_query_ap[query_id] = average_precision(ranked, relevant)
        per_query_rank[query_id] = first_relevant_rank(ranked, relevant)
    if not per_query_ap:
        raise ValueError("no query had a relevance judgment")
    return {
        "map": map_score(list(per_query_ap.values())),
        "mrr": mrr(list(per_query_rank.values())),
        "evaluated_queries": float(len(per_query_ap)),
        "per_query_ap": per_query_ap,
        "per_query_rank": {q: float(r) if r else 0.0 for q, r in per_query_rank.items()},
    }
