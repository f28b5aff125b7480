"""Node feature encoders and the embedding interchange file format."""

from __future__ import annotations

import hashlib
from pathlib import Path
from typing import Mapping

import numpy as np

from causalkit.graph import CausalGraph, Relation

NodeFeatures = Mapping[str, np.ndarray]


def hash_encode(label: str, d: int = 256) -> np.ndarray:
    """Signed feature hashing of character 3-5 grams, L2-normalized.

    Deterministic across runs and platforms (keyed on a cryptographic digest,
    not on Python's salted ``hash``). Empty labels encode to the zero vector.
    """
    if d < 8:
        raise ValueError(f"hash dimension must be >= 8, got {d}")
    vec = np.zeros(d)
    text = label.lower()
    if not text:
        return vec
    grams = [text[i : i + n] for n in (3, 4, 5) for i in range(len(text) - n + 1)]
    if not grams:
        grams = [text]
    for gram in grams:
        digest = hashlib.blake2b(gram.encode("utf-8"), digest_size=8).digest()
        value = int.from_bytes(digest, "big")
        sign = 1.0 if value & 1 else -1.0
        vec[(value >> 1) % d] += sign
    norm = np.linalg.norm(vec)
    if norm == 0.0:
        # pathological cancellation; fall back to a one-hot of the whole label
        digest = hashlib.blake2b(text.encode("utf-8"), digest_size=8).digest()
        vec[int.from_bytes(digest, "big") % d] = 1.0
        return vec
    return vec / norm


def hash_features(graph: CausalGraph, d: int = 256) -> dict[str, np.ndarray]:
    """Hash-encoded features for every node label of a graph."""
    return {node.id: hash_encode(node.label, d) for node in graph.nodes}


def structural_features(graph: CausalGraph, d: int = 16) -> dict[str, np.ndarray]:
    """Label-free node features from local structure, L2-normalized.

    Nine scalar descriptors (degrees, clustering, relation balance) followed
    by a capped one-hot of the undirected degree. Useful when vocabularies
    carry no signal and only topology should drive similarity.
    """
    if d < 12:
        raise ValueError(f"structural feature dimension must be >= 12, got {d}")
    n = graph.node_count
    adj = graph.undirected_neighbors()
    out_enables: dict[str, int] = {node.id: 0 for node in graph.nodes}
    out_blocks: dict[str, int] = {node.id: 0 for node in graph.nodes}
    in_enables: dict[str, int] = {node.id: 0 for node in graph.nodes}
    in_blocks: dict[str, int] = {node.id: 0 for node in graph.nodes}
    for edge in graph.edges:
        if edge.relation is Relation.ENABLES:
            out_enables[edge.head] += 1
            in_enables[edge.tail] += 1
        else:
            out_blocks[edge.head] += 1
            in_blocks[edge.tail] += 1

    features: dict[str, np.ndarray] = {}
    for node in graph.nodes:
        neighbors = adj[node.id]
        degree = len(neighbors)
        pairs = degree * (degree - 1) // 2
        links = 0
        ordered = sorted(neighbors)
        for i, u in enumerate(ordered):
            links += sum(1 for v in ordered[i + 1 :] if v in adj[u])
        out_deg = out_enables[node.id] + out_blocks[node.id]
        in_deg = in_enables[node.id] + in_blocks[node.id]
        vec = np.zeros(d)
        vec[0] = 1.0
        vec[1] = out_deg / n
        vec[2] = in_deg / n
        vec[3] = degree / n
        vec[4] = links / pairs if pairs else 0.0
        vec[5] = out_enables[node.id] / out_deg if out_deg else 0.0
        vec[6] = out_blocks[node.id] / out_deg if out_deg else 0.0
        vec[7] = in_enables[node.id] / in_deg if in_deg else 0.0
        vec[8] = in_blocks[node.id] / in_deg if in_deg else 0.0
        vec[9 + min(degree, d - 10)] = 1.0
        features[node.id] = vec / np.linalg.norm(vec)
    return features


def features_from_embeddings(
    graph: CausalGraph, table: Mapping[str, np.ndarray]
) -> dict[str, np.ndarray]:
    """Per-node features looked up from an external embedding table.

    Lookup tries the node label first (exporters key on labels), then the
    node id. Missing nodes are an error.
    """
    features = {}
    for node in graph.nodes:
        vec = table.get(node.label)
        if vec is None:
            vec = table.get(node.id)
        if vec is None:
            raise ValueError(f"no external embedding for node {node.id!r}")
        features[node.id] = np.asarray(vec, dtype=float)
    return features


def feature_matrix(graph: CausalGraph, features: NodeFeatures) -> tuple[list[str], np.ndarray]:
    """Feature rows aligned to the graph's sorted node ids, with shape checks."""
    ids = list(graph.sorted_node_ids)
    rows = []
    dim = None
    for node_id in ids:
        if node_id not in features:
            raise ValueError(f"missing features for node {node_id!r}")
        vec = np.asarray(features[node_id], dtype=float)
        if vec.ndim != 1:
            raise ValueError(f"feature vector for {node_id!r} is not 1-D")
        if dim is None:
            dim = vec.shape[0]
        elif vec.shape[0] != dim:
            raise ValueError(
                f"feature dimension mismatch at {node_id!r}: {vec.shape[0]} != {dim}"
            )
        if not np.all(np.isfinite(vec)):
            raise ValueError(f"non-finite feature value at node {node_id!r}")
        rows.append(vec)
    return ids, np.stack(rows) if rows else np.zeros((0, 0))


def save_embeddings(table: Mapping[str, np.ndarray], path: str | Path) -> None:
    """Write the interchange format: ``dim=<d>`` header, then ``<id> <v1> ...`` lines.

    Ids may contain single internal spaces; control characters, runs of
    spaces, and leading/trailing spaces are rejected because the line format
    could not round-trip them.
    """
    if not table:
        raise ValueError("refusing to write an empty embedding table")
    dim = None
    for key, vec in table.items():
        arr = np.asarray(vec, dtype=float)
        if dim is None:
            dim = arr.shape[0]
        elif arr.shape[0] != dim:
            raise ValueError(f"dimension mismatch at {key!r}: {arr.shape[0]} != {dim}")
        if key != key.strip() or "  " in key or any(c in key for c in "\n\r\t"):
            raise ValueError(f"id not representable in the interchange format: {key!r}")
    lines = [f"dim={dim}"]
    for key in sorted(table):
        values = " ".join(repr(float(v)) for v in np.asarray(table[key], dtype=float))
        lines.append(f"{key} {values}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_external_embeddings(path: str | Path) -> dict[str, np.ndarray]:
    """Read an interchange file into an id -> vector map, validating as it goes."""
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines or not lines[0].startswith("dim="):
        raise ValueError(f"{path}: missing dim= header")
    try:
        dim = int(lines[0][4:])
    except ValueError:
        raise ValueError(f"{path}: bad dim= header {lines[0]!r}") from None
    if dim < 1:
        raise ValueError(f"{path}: dimension must be positive, got {dim}")
    table: dict[str, np.ndarray] = {}
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        tokens = line.split(" ")
        if len(tokens) < dim + 1:
            raise ValueError(f"{path}:{lineno}: expected id plus {dim} values")
        key = " ".join(tokens[: len(tokens) - dim])
        if not key:
            raise ValueError(f"{path}:{lineno}: empty id")
        if key in table:
            raise ValueError(f"{path}:{lineno}: duplicate id {key!r}")
        try:
            vec = np.array([float(t) for t in tokens[len(tokens) - dim :]])
        except ValueError:
            raise ValueError(f"{path}:{lineno}: unparseable value") from None
        if not np.all(np.isfinite(vec)):
            raise ValueError(f"{path}:{lineno}: non-finite value")
        table[key] = vec
    return table
