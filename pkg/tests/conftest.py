from pathlib import Path

import numpy as np
import pytest

from causalkit.graph import CausalEdge, CausalGraph, CausalNode, Relation

FIXTURES = Path(__file__).resolve().parent.parent / "data" / "fixtures"


def make_graph(edge_pairs, graph_id="g", relations=None, node_ids=None):
    """Graph from (head, tail) pairs; extra isolated nodes via node_ids."""
    ids = list(dict.fromkeys([n for pair in edge_pairs for n in pair] + list(node_ids or [])))
    nodes = tuple(CausalNode(i, f"label {i}") for i in ids)
    relations = relations or [Relation.ENABLES] * len(edge_pairs)
    edges = tuple(
        CausalEdge(head=h, tail=t, relation=r) for (h, t), r in zip(edge_pairs, relations)
    )
    return CausalGraph(id=graph_id, nodes=nodes, edges=edges)


def random_graph(seed, max_nodes=8, prefix="n"):
    """Connected-ish random directed graph with mixed relations, no self-loops."""
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, max_nodes + 1))
    nodes = tuple(CausalNode(f"{prefix}{i}", f"{prefix} word{i}") for i in range(n))
    edges = []
    seen = set()
    for _ in range(2 * n):
        a, b = int(rng.integers(n)), int(rng.integers(n))
        if a == b:
            continue
        relation = Relation.ENABLES if rng.random() < 0.75 else Relation.BLOCKS
        key = (a, relation, b)
        if key in seen:
            continue
        seen.add(key)
        edges.append(CausalEdge(head=f"{prefix}{a}", tail=f"{prefix}{b}", relation=relation))
    return CausalGraph(id=f"rand{seed}", nodes=nodes, edges=tuple(edges))


@pytest.fixture
def fixtures_dir():
    return FIXTURES


@pytest.fixture
def corpus_path():
    return FIXTURES / "corpus_20.jsonl"


@pytest.fixture
def schema_library_path():
    return FIXTURES / "schema_library.jsonl"
