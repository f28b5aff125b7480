"""Record wire format parsing, graph conversion, schema libraries, and prompt builders.

Records arrive as line-delimited JSON objects with the field names used by the
released data (``split``, ``source``, ``@id``, ``text``, ``questions``,
``answers``, ``event_types``, ``noncausal_event_types``, ``causal_graph``).
"""

from __future__ import annotations

import json
import logging
import random
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

from causalkit.graph import (
    CausalGraph,
    CausalNode,
    NodeKind,
    SchemaGraph,
    CausalEdge,
    parse_relation,
    validate,
)
from causalkit.ontology import parse_type_path

logger = logging.getLogger(__name__)

# Labels marking participants. The released data mostly uses the double-colon
# form but contains single-colon entries as well; both are accepted.
_ENTITY_PREFIXES = ("Entity::", "Entity:")

DEFAULT_LIGHT_VERBS = frozenset({"was", "is", "are", "be", "been", "had", "has", "have"})


@dataclass(frozen=True)
class Triple:
    head: str
    rel: str
    tail: str
    salience: int | None = None


@dataclass(frozen=True)
class Record:
    """One text-graph-schema unit, including its temporal/event QA payloads."""

    id: str
    text: str
    split: str = ""
    source: str = ""
    notes: str = ""
    topic: str = ""
    questions: tuple[str, ...] = ()
    answers: tuple[tuple[str, ...], ...] = ()
    node_event_types: Mapping[str, str] = field(default_factory=dict)
    doc_event_types: str = ""
    noncausal_event_types: Mapping[str, str] = field(default_factory=dict)
    triples: tuple[Triple, ...] = ()


def parse_record(text: str) -> Record:
    """Parse one serialized record object."""
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValueError(f"record is not valid JSON: {exc}") from None
    if not isinstance(obj, dict):
        raise ValueError("record must be a JSON object")
    for required in ("text", "causal_graph"):
        if required not in obj:
            raise ValueError(f"missing field: {required}")

    questions = tuple(str(q) for q in obj.get("questions", []))
    raw_answers = obj.get("answers", [])
    answers = []
    for answer in raw_answers:
        if isinstance(answer, str):
            answers.append((answer,))
        else:
            answers.append(tuple(str(a) for a in answer))
    if questions and raw_answers and len(questions) != len(answers):
        raise ValueError(
            f"questions/answers length mismatch: {len(questions)} != {len(answers)}"
        )

    raw_types = obj.get("event_types", {})
    node_types: dict[str, str] = {}
    doc_types = ""
    if isinstance(raw_types, str):
        doc_types = raw_types
    else:
        node_types = {str(k): str(v) for k, v in raw_types.items()}

    triples = []
    for i, raw in enumerate(obj["causal_graph"]):
        if not isinstance(raw, dict):
            raise ValueError(f"triple {i}: not an object")
        for key in ("head", "rel", "tail"):
            if not raw.get(key):
                raise ValueError(f"triple {i}: missing or empty {key}")
        salience = raw.get("saliency")
        if salience is not None and salience not in (0, 1):
            raise ValueError(f"triple {i}: saliency must be 0 or 1, got {salience!r}")
        triples.append(
            Triple(head=str(raw["head"]), rel=str(raw["rel"]), tail=str(raw["tail"]), salience=salience)
        )

    return Record(
        id=str(obj.get("@id") or obj.get("schema_id") or ""),
        text=str(obj["text"]),
        split=str(obj.get("split", "")),
        source=str(obj.get("source", "")),
        notes=str(obj.get("notes", "")),
        topic=str(obj.get("topic", "")),
        questions=questions,
        answers=tuple(answers),
        node_event_types=node_types,
        doc_event_types=doc_types,
        noncausal_event_types={str(k): str(v) for k, v in obj.get("noncausal_event_types", {}).items()},
        triples=tuple(triples),
    )


def serialize_record(record: Record) -> str:
    """Inverse of :func:`parse_record`; empty optional fields are omitted."""
    obj: dict = {"split": record.split, "source": record.source, "@id": record.id}
    if record.notes:
        obj["notes"] = record.notes
    if record.topic:
        obj["topic"] = record.topic
    obj["text"] = record.text
    if record.questions:
        obj["questions"] = list(record.questions)
    if record.answers:
        obj["answers"] = [list(a) for a in record.answers]
    if record.doc_event_types:
        obj["event_types"] = record.doc_event_types
    elif record.node_event_types:
        obj["event_types"] = dict(record.node_event_types)
    if record.noncausal_event_types:
        obj["noncausal_event_types"] = dict(record.noncausal_event_types)
    obj["causal_graph"] = [
        {"head": t.head, "rel": t.rel, "tail": t.tail}
        | ({"saliency": t.salience} if t.salience is not None else {})
        for t in record.triples
    ]
    return json.dumps(obj, ensure_ascii=False)


def load_records(path: str | Path) -> list[Record]:
    """Read a line-delimited record file."""
    records = []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        try:
            records.append(parse_record(line))
        except ValueError as exc:
            raise ValueError(f"{path}:{lineno}: {exc}") from None
    return records


def save_records(records: list[Record], path: str | Path) -> None:
    Path(path).write_text(
        "".join(serialize_record(r) + "\n" for r in records), encoding="utf-8"
    )


def _split_entity_prefix(text: str) -> tuple[str, NodeKind]:
    for prefix in _ENTITY_PREFIXES:
        stripped = text[len(prefix):]
        if text.startswith(prefix) and stripped:
            return stripped, NodeKind.PARTICIPANT
    return text, NodeKind.EVENT


def record_to_graph(record: Record) -> CausalGraph:
    """Build the causal graph of a record.

    Node identity is the exact head/tail string; ``Entity::``-prefixed strings
    become participants with the prefix stripped from the label. Node-level
    event types attach to nodes whose id or label equals the map key; a
    document-level type path is kept in graph metadata.
    """
    order: list[str] = []
    seen: set[str] = set()
    for triple in record.triples:
        for endpoint in (triple.head, triple.tail):
            if endpoint not in seen:
                seen.add(endpoint)
                order.append(endpoint)

    nodes = []
    for node_id in order:
        label, kind = _split_entity_prefix(node_id)
        raw_path = record.node_event_types.get(node_id) or record.node_event_types.get(label)
        types = (parse_type_path(raw_path),) if raw_path else ()
        nodes.append(CausalNode(id=node_id, label=label, kind=kind, event_types=types))

    edges = []
    for triple in record.triples:
        relation, sub = parse_relation(triple.rel)
        edges.append(
            CausalEdge(
                head=triple.head,
                tail=triple.tail,
                relation=relation,
                sub_relation=sub,
                salience=triple.salience == 1,
            )
        )

    metadata = {"split": record.split, "source": record.source}
    if record.notes:
        metadata["notes"] = record.notes
    if record.topic:
        metadata["topic"] = record.topic
    if record.doc_event_types:
        metadata["doc_event_types"] = record.doc_event_types
    return CausalGraph(id=record.id, nodes=tuple(nodes), edges=tuple(edges), metadata=metadata)


@dataclass(frozen=True)
class SchemaEntry:
    schema_id: str
    graph: CausalGraph
    topic: str = ""


@dataclass(frozen=True)
class SchemaLibrary:
    entries: tuple[SchemaEntry, ...]

    def __post_init__(self) -> None:
        ids = [e.schema_id for e in self.entries]
        if len(ids) != len(set(ids)):
            dupes = sorted({i for i in ids if ids.count(i) > 1})
            raise ValueError(f"duplicate schema_id: {', '.join(dupes)}")

    def __len__(self) -> int:
        return len(self.entries)

    def by_id(self, schema_id: str) -> SchemaEntry:
        for entry in self.entries:
            if entry.schema_id == schema_id:
                return entry
        raise KeyError(schema_id)


def load_schema_library(path: str | Path) -> SchemaLibrary:
    """Load a line-delimited schema (or record) file into a library.

    Each line is a record-shaped object; ``schema_id`` falls back to ``@id``.
    Entries whose nodes are all events are kept as schema graphs. Any invalid
    entry aborts the load with its line number.
    """
    entries = []
    seen_ids: set[str] = set()
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
            schema_id = str(obj.get("schema_id") or obj.get("@id") or "")
            if not schema_id:
                raise ValueError("missing schema_id/@id")
            if schema_id in seen_ids:
                raise ValueError(f"duplicate schema_id: {schema_id}")
            obj.setdefault("@id", schema_id)
            obj.setdefault("text", "")
            record = parse_record(json.dumps(obj))
            graph = record_to_graph(record)
            violations = validate(graph)
            if violations:
                raise ValueError(f"invalid graph: {violations[0]}")
            if all(n.kind is NodeKind.EVENT for n in graph.nodes):
                graph = SchemaGraph(
                    id=graph.id, nodes=graph.nodes, edges=graph.edges, metadata=graph.metadata
                )
            entries.append(SchemaEntry(schema_id=schema_id, graph=graph, topic=record.topic))
            seen_ids.add(schema_id)
        except (ValueError, KeyError) as exc:
            raise ValueError(f"{path}:{lineno}: {exc}") from None
    return SchemaLibrary(tuple(entries))


@dataclass(frozen=True)
class PromptConfig:
    qa_count_range: tuple[int, int] = (2, 3)
    light_verb_stoplist: frozenset[str] = DEFAULT_LIGHT_VERBS
    seed: int = 0

    def __post_init__(self) -> None:
        low, high = self.qa_count_range
        if low < 1 or high < low:
            raise ValueError(f"bad qa_count_range: {self.qa_count_range}")


def build_prompt_temporal(record: Record, config: PromptConfig = PromptConfig()) -> str:
    """Text plus a seeded sample of QA lines, closed by the generation marker.

    Answers are filtered against the light-verb stoplist; QA pairs whose
    filtered answer list is empty are never sampled. Deterministic given the
    config seed.
    """
    if not record.questions:
        raise ValueError(f"record {record.id}: no questions to sample")
    stoplist = {w.lower() for w in config.light_verb_stoplist}
    eligible: list[tuple[str, list[str]]] = []
    for i, question in enumerate(record.questions):
        answers = record.answers[i] if i < len(record.answers) else ()
        kept = [a for a in answers if a.lower() not in stoplist]
        if kept:
            eligible.append((question, kept))

    rng = random.Random(config.seed)
    low, high = config.qa_count_range
    count = rng.randint(low, high)
    chosen = rng.sample(range(len(eligible)), min(count, len(eligible)))

    parts = [f"TEXT: {record.text}\n"]
    for index in chosen:
        question, kept = eligible[index]
        parts.append(f"{question} {', '.join(kept)}\n")
    parts.append("[GEN]")
    return "".join(parts)


def build_prompt_dense(record: Record) -> str:
    """Text with leaf event types prepended to annotated mentions, then the marker.

    Every entry of the node-level and non-causal type maps is considered; a
    mention is matched at its first whole-word occurrence, overlaps resolved
    earliest-then-longest. Keys that never match are skipped and logged.
    """
    type_map = dict(record.noncausal_event_types)
    type_map.update(record.node_event_types)

    candidates = []
    skipped = []
    for key, raw_path in type_map.items():
        leaf = parse_type_path(raw_path).leaf
        match = re.search(rf"\b{re.escape(key)}\b", record.text)
        if match is None:
            skipped.append(key)
            continue
        candidates.append((match.start(), -(match.end() - match.start()), key, leaf))

    accepted: list[tuple[int, int, str]] = []
    last_end = -1
    for start, neg_len, key, leaf in sorted(candidates):
        end = start - neg_len
        if start >= last_end:
            accepted.append((start, end, leaf))
            last_end = end
        else:
            skipped.append(key)
    if skipped:
        logger.warning("dense prompt for %s skipped mentions: %s", record.id, sorted(skipped))

    text = record.text
    for start, _end, leaf in reversed(accepted):
        text = f"{text[:start]}{leaf}::{text[start:]}"
    return f"TEXT: {text}\n[GEN]"
