"""Causal event graph toolkit.

Ingests text-graph records, embeds causal graphs with random-walk and
attention-based encoders, clusters them, matches them against schema
libraries, and scores everything with clustering and retrieval metrics.
"""

from causalkit.graph import (
    CausalEdge,
    CausalGraph,
    CausalNode,
    GraphStats,
    NodeKind,
    Relation,
    SchemaGraph,
    SubRelation,
    bfs_linearize,
    edge_scalar,
    graph_stats,
    parse_relation,
    salient_subgraph,
    to_dot,
    validate,
)
from causalkit.ingest import (
    PromptConfig,
    Record,
    SchemaLibrary,
    build_prompt_dense,
    build_prompt_temporal,
    load_records,
    load_schema_library,
    parse_record,
    record_to_graph,
    serialize_record,
)
from causalkit.ontology import (
    EventTypeOntology,
    EventTypePath,
    EventVector,
    graph_type_leaves,
    khot,
    parse_type_path,
    truncate_to_level,
)

__version__ = "0.1.0"
