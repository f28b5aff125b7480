"""Causal event graph model: validation, traversal, statistics, and DOT export."""

from __future__ import annotations

import re
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property

from causalkit.ontology import EventTypePath


class Relation(str, Enum):
    ENABLES = "Enables"
    BLOCKS = "Blocks"


class SubRelation(str, Enum):
    BEGINS = "Begins"
    ADDS = "Adds"
    ALLOWS_LETS_ACTION = "AllowsLetsAction"
    PREVENTS_REST = "PreventsRest"
    WITHOUT_EFFECT = "WithoutEffect"
    UNKNOWN = "Unknown"
    ENDS = "Ends"
    DISRUPTS = "Disrupts"
    ALLOWS_LETS_REST = "AllowsLetsRest"
    PREVENTS_ACTION = "PreventsAction"


# Row grouping of the relation ontology: the first block refines Enables, the
# second refines Blocks; WithoutEffect and Unknown appear in both.
ENABLES_SUB_RELATIONS = frozenset(
    {
        SubRelation.BEGINS,
        SubRelation.ADDS,
        SubRelation.ALLOWS_LETS_ACTION,
        SubRelation.PREVENTS_REST,
        SubRelation.WITHOUT_EFFECT,
        SubRelation.UNKNOWN,
    }
)
BLOCKS_SUB_RELATIONS = frozenset(
    {
        SubRelation.ENDS,
        SubRelation.DISRUPTS,
        SubRelation.ALLOWS_LETS_REST,
        SubRelation.PREVENTS_ACTION,
        SubRelation.WITHOUT_EFFECT,
        SubRelation.UNKNOWN,
    }
)


class NodeKind(str, Enum):
    EVENT = "Event"
    PARTICIPANT = "Participant"


@dataclass(frozen=True)
class CausalNode:
    """One event or participant node, labeled with natural-language text."""

    id: str
    label: str
    kind: NodeKind = NodeKind.EVENT
    event_types: tuple[EventTypePath, ...] = ()


@dataclass(frozen=True)
class CausalEdge:
    """Directed causal relation from ``head`` to ``tail`` (node ids)."""

    head: str
    tail: str
    relation: Relation
    sub_relation: SubRelation | None = None
    salience: bool = False


@dataclass(frozen=True)
class CausalGraph:
    """Directed, possibly cyclic graph of events and participants.

    Construction is permissive; :func:`validate` reports invariant violations
    as data. Instances are immutable and safe to share.
    """

    id: str
    nodes: tuple[CausalNode, ...] = ()
    edges: tuple[CausalEdge, ...] = ()
    metadata: dict[str, str] = field(default_factory=dict)

    @cached_property
    def node_by_id(self) -> dict[str, CausalNode]:
        return {node.id: node for node in self.nodes}

    @cached_property
    def sorted_node_ids(self) -> tuple[str, ...]:
        return tuple(sorted(node.id for node in self.nodes))

    @property
    def node_count(self) -> int:
        return len(self.nodes)

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    def out_edges(self, node_id: str) -> list[CausalEdge]:
        return [e for e in self.edges if e.head == node_id]

    def undirected_neighbors(self) -> dict[str, set[str]]:
        """Adjacency of the undirected simple view (no self pairs, deduplicated)."""
        adj: dict[str, set[str]] = {node.id: set() for node in self.nodes}
        for edge in self.edges:
            if edge.head == edge.tail:
                continue
            if edge.head in adj and edge.tail in adj:
                adj[edge.head].add(edge.tail)
                adj[edge.tail].add(edge.head)
        return adj


@dataclass(frozen=True)
class SchemaGraph(CausalGraph):
    """Causal graph whose nodes are event type names (all kind Event)."""

    def unresolved_labels(self, ontology) -> frozenset[str]:
        """Node labels missing from the ontology vocabulary (free-form labels)."""
        return frozenset(
            node.label for node in self.nodes if node.label not in ontology
        )

    def label_type_names(self) -> frozenset[str]:
        """Node labels as lowercased type names (schema nodes are event types)."""
        return frozenset(node.label.lower() for node in self.nodes)


@dataclass(frozen=True)
class GraphStats:
    node_count: int
    edge_count: int
    enables_count: int
    blocks_count: int
    mean_degree: float
    mean_clustering: float
    transitivity: float


ValidationReport = list[str]


def validate(graph: CausalGraph) -> ValidationReport:
    """Every invariant violation, with its node or edge locus; empty means valid."""
    report: ValidationReport = []
    seen_ids: set[str] = set()
    for node in graph.nodes:
        if not node.id:
            report.append(f"node with label {node.label!r}: empty id")
        elif node.id in seen_ids:
            report.append(f"duplicate node id {node.id}")
        else:
            seen_ids.add(node.id)
        if not node.label:
            report.append(f"node {node.id}: empty label")
    if isinstance(graph, SchemaGraph):
        for node in graph.nodes:
            if node.kind is not NodeKind.EVENT:
                report.append(f"node {node.id}: schema graph node is not an Event")

    seen_triples: set[tuple[str, Relation, str]] = set()
    for i, edge in enumerate(graph.edges):
        if edge.head not in seen_ids:
            report.append(f"edge {i}: dangling head {edge.head}")
        if edge.tail not in seen_ids:
            report.append(f"edge {i}: dangling tail {edge.tail}")
        if edge.head == edge.tail:
            report.append(f"edge {i}: self-loop at {edge.head}")
        if edge.sub_relation is not None:
            allowed = (
                ENABLES_SUB_RELATIONS
                if edge.relation is Relation.ENABLES
                else BLOCKS_SUB_RELATIONS
            )
            if edge.sub_relation not in allowed:
                report.append(
                    f"edge {i}: incompatible sub-relation "
                    f"{edge.sub_relation.value} for {edge.relation.value}"
                )
        triple = (edge.head, edge.relation, edge.tail)
        if triple in seen_triples:
            report.append(
                f"edge {i}: duplicate triple ({edge.head}, {edge.relation.value}, {edge.tail})"
            )
        seen_triples.add(triple)
    return report


_SUBREL_KEYS = {re.sub(r"[^a-z]", "", s.value.lower()): s for s in SubRelation}


def parse_relation(text: str) -> tuple[Relation, SubRelation | None]:
    """Parse a relation string such as ``ENABLES`` or ``BLOCKS-ENDS``.

    Matching is case-insensitive; a sub-relation suffix may be separated by
    ``-`` and written with any of ``_``, ``/`` or spaces inside.
    """
    base, _, suffix = text.strip().partition("-")
    try:
        relation = Relation[base.strip().upper()]
    except KeyError:
        raise ValueError(f"unknown relation: {text!r}") from None
    sub: SubRelation | None = None
    if suffix:
        key = re.sub(r"[^a-z]", "", suffix.lower())
        sub = _SUBREL_KEYS.get(key)
        if sub is None:
            raise ValueError(f"unknown sub-relation: {text!r}")
    return relation, sub


def edge_scalar(relation: Relation | str) -> float:
    """Signed unit scalar for a causal relation: +1.0 Enables, -1.0 Blocks."""
    if isinstance(relation, str):
        relation, _ = parse_relation(relation)
    return 1.0 if relation is Relation.ENABLES else -1.0


def bfs_linearize(graph: CausalGraph) -> tuple[list[CausalNode], list[CausalEdge]]:
    """Breadth-first linearization with lexicographic tie-breaking.

    Roots are the in-degree-0 nodes, visited in id order, each expanded as a
    full BFS before the next root starts; out-edges expand in (tail id,
    relation, sub-relation) order. Nodes left unreached (cycles, isolated
    components) seed fresh BFS rounds from the smallest unvisited id. Edges
    are reported in the order they are examined, each exactly once.
    """
    in_degree = {node.id: 0 for node in graph.nodes}
    out_edges: dict[str, list[CausalEdge]] = {node.id: [] for node in graph.nodes}
    for edge in graph.edges:
        in_degree[edge.tail] += 1
        out_edges[edge.head].append(edge)
    for edges in out_edges.values():
        edges.sort(
            key=lambda e: (e.tail, e.relation.value, e.sub_relation.value if e.sub_relation else "")
        )

    visited: set[str] = set()
    node_order: list[str] = []
    edge_order: list[CausalEdge] = []

    def bfs(root: str) -> None:
        queue = deque([root])
        visited.add(root)
        while queue:
            current = queue.popleft()
            node_order.append(current)
            for edge in out_edges[current]:
                edge_order.append(edge)
                if edge.tail not in visited:
                    visited.add(edge.tail)
                    queue.append(edge.tail)

    roots = sorted(node_id for node_id, deg in in_degree.items() if deg == 0)
    for root in roots:
        if root not in visited:
            bfs(root)
    for node_id in graph.sorted_node_ids:
        if node_id not in visited:
            bfs(node_id)

    by_id = graph.node_by_id
    return [by_id[node_id] for node_id in node_order], edge_order


def graph_stats(graph: CausalGraph) -> GraphStats:
    """Node/edge counts, relation counts, and undirected clustering statistics."""
    if graph.node_count == 0:
        raise ValueError("graph_stats requires at least one node")
    enables = sum(1 for e in graph.edges if e.relation is Relation.ENABLES)
    blocks = graph.edge_count - enables

    adj = graph.undirected_neighbors()
    local = []
    closed_triads = 0
    connected_triads = 0
    for node_id, neighbors in adj.items():
        degree = len(neighbors)
        pairs = degree * (degree - 1) // 2
        connected_triads += pairs
        links = 0
        ordered = sorted(neighbors)
        for i, u in enumerate(ordered):
            for v in ordered[i + 1 :]:
                if v in adj[u]:
                    links += 1
        closed_triads += links
        local.append(links / pairs if pairs else 0.0)

    return GraphStats(
        node_count=graph.node_count,
        edge_count=graph.edge_count,
        enables_count=enables,
        blocks_count=blocks,
        mean_degree=2.0 * graph.edge_count / graph.node_count,
        mean_clustering=sum(local) / len(local),
        transitivity=closed_triads / connected_triads if connected_triads else 0.0,
    )


def salient_subgraph(graph: CausalGraph) -> CausalGraph:
    """Subgraph of salience-flagged edges and their endpoint nodes."""
    edges = tuple(e for e in graph.edges if e.salience)
    keep = {e.head for e in edges} | {e.tail for e in edges}
    nodes = tuple(n for n in graph.nodes if n.id in keep)
    return CausalGraph(id=graph.id, nodes=nodes, edges=edges, metadata=dict(graph.metadata))


def _dot_escape(text: str) -> str:
    return text.replace("\\", "\\\\").replace('"', '\\"')


def to_dot(graph: CausalGraph) -> str:
    """Deterministic DOT export; participants and events get distinct styling."""
    lines = [f'digraph "{_dot_escape(graph.id)}" {{']
    for node in sorted(graph.nodes, key=lambda n: n.id):
        if node.kind is NodeKind.PARTICIPANT:
            style = "shape=ellipse, style=filled, fillcolor=orange"
        else:
            style = "shape=box, style=filled, fillcolor=indianred1"
        lines.append(f'  "{_dot_escape(node.id)}" [label="{_dot_escape(node.label)}", {style}];')
    edge_key = lambda e: (e.head, e.tail, e.relation.value, e.sub_relation.value if e.sub_relation else "")
    for edge in sorted(graph.edges, key=edge_key):
        label = edge.relation.value
        if edge.sub_relation is not None:
            label += f"-{edge.sub_relation.value}"
        attrs = [f'label="{_dot_escape(label)}"']
        if edge.relation is Relation.BLOCKS:
            attrs.append("style=dashed")
        if edge.salience:
            attrs.append("penwidth=2")
        lines.append(
            f'  "{_dot_escape(edge.head)}" -> "{_dot_escape(edge.tail)}" [{", ".join(attrs)}];'
        )
    lines.append("}")
    return "\n".join(lines) + "\n"
