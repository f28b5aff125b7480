"""Hierarchical event types: parsing, vocabularies, and k-hot event vectors."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import TYPE_CHECKING, Iterable

if TYPE_CHECKING:
    from causalkit.graph import CausalGraph

PATH_SEPARATOR = ";"


@dataclass(frozen=True)
class EventTypePath:
    """One hierarchical event type, most general level first."""

    levels: tuple[str, ...]

    def __post_init__(self) -> None:
        if not self.levels:
            raise ValueError("event type path needs at least one level")
        for level in self.levels:
            if not level:
                raise ValueError("event type path has an empty level")
            if PATH_SEPARATOR in level:
                raise ValueError(f"event type level contains {PATH_SEPARATOR!r}: {level!r}")

    @property
    def leaf(self) -> str:
        return self.levels[-1]

    @property
    def depth(self) -> int:
        return len(self.levels)

    def join(self) -> str:
        return PATH_SEPARATOR.join(self.levels)


def parse_type_path(text: str) -> EventTypePath:
    """Parse a semicolon-joined type path such as ``Action;Legality;Legal_rulings``.

    Whitespace around each segment is trimmed; original casing is preserved
    (vocabulary lookups lowercase separately).
    """
    segments = [seg.strip() for seg in text.split(PATH_SEPARATOR)]
    if not text.strip() or any(not seg for seg in segments):
        raise ValueError(f"empty segment in event type path {text!r}")
    return EventTypePath(tuple(segments))


def truncate_to_level(path: EventTypePath, level: int) -> EventTypePath:
    """First ``level`` levels of the path, clamped to its depth."""
    if level < 1:
        raise ValueError(f"level must be >= 1, got {level}")
    return EventTypePath(path.levels[: min(level, path.depth)])


@dataclass(frozen=True)
class EventTypeOntology:
    """Vocabulary of event type names with parent links observed in paths.

    The vocabulary is keyed lowercase and ordered lexicographically, so a
    vocabulary built from the same set of paths is stable regardless of the
    order records were read in.
    """

    vocabulary: tuple[str, ...]
    parent_links: frozenset[tuple[str, str]] = frozenset()
    _index: dict[str, int] = field(init=False, repr=False, compare=False, default_factory=dict)

    def __post_init__(self) -> None:
        if list(self.vocabulary) != sorted(set(self.vocabulary)):
            raise ValueError("vocabulary must be lexicographically sorted and distinct")
        names = set(self.vocabulary)
        for parent, child in self.parent_links:
            if parent not in names or child not in names:
                raise ValueError(f"parent link ({parent!r}, {child!r}) outside vocabulary")
        object.__setattr__(self, "_index", {name: i for i, name in enumerate(self.vocabulary)})

    @classmethod
    def from_paths(cls, paths: Iterable[EventTypePath]) -> "EventTypeOntology":
        names: set[str] = set()
        links: set[tuple[str, str]] = set()
        for path in paths:
            lowered = [level.lower() for level in path.levels]
            names.update(lowered)
            links.update(zip(lowered, lowered[1:]))
        return cls(tuple(sorted(names)), frozenset(links))

    def __len__(self) -> int:
        return len(self.vocabulary)

    def __contains__(self, name: str) -> bool:
        return name.lower() in self._index

    def index_of(self, name: str) -> int | None:
        return self._index.get(name.lower())

    def parents_of(self, name: str) -> frozenset[str]:
        key = name.lower()
        return frozenset(p for p, c in self.parent_links if c == key)

    def save(self, path: str | Path) -> None:
        """One vocabulary name per line; parent links as ``parent;child`` paths."""
        lines = list(self.vocabulary)
        lines.extend(sorted(f"{p}{PATH_SEPARATOR}{c}" for p, c in self.parent_links))
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "EventTypeOntology":
        paths = []
        for line in Path(path).read_text(encoding="utf-8").splitlines():
            line = line.strip()
            if line:
                paths.append(parse_type_path(line))
        return cls.from_paths(paths)


@dataclass(frozen=True)
class EventVector:
    """k-hot vector over an ontology vocabulary, with a trailing OOV bucket."""

    bits: tuple[bool, ...]

    def __len__(self) -> int:
        return len(self.bits)

    @property
    def oov(self) -> bool:
        return self.bits[-1]

    def set_names(self, ontology: EventTypeOntology) -> frozenset[str]:
        """Vocabulary names whose bit is set (the OOV bucket has no name)."""
        return frozenset(
            name for name, bit in zip(ontology.vocabulary, self.bits) if bit
        )


def graph_type_leaves(graph: "CausalGraph") -> frozenset[str]:
    """Distinct lowercased leaf type names attached to a graph.

    Includes leaves of node-level paths and of the document-level path kept
    in graph metadata under ``doc_event_types``, when present.
    """
    leaves = {
        path.leaf.lower() for node in graph.nodes for path in node.event_types
    }
    doc_path = graph.metadata.get("doc_event_types", "")
    if doc_path:
        leaves.add(parse_type_path(doc_path).leaf.lower())
    return frozenset(leaves)


def khot(graph: "CausalGraph", ontology: EventTypeOntology) -> EventVector:
    """k-hot vector of the graph's leaf event types; unknown names hit the OOV bucket."""
    if len(ontology) == 0:
        raise ValueError("ontology vocabulary is empty")
    bits = [False] * (len(ontology) + 1)
    for leaf in graph_type_leaves(graph):
        idx = ontology.index_of(leaf)
        if idx is None:
            bits[-1] = True
        else:
            bits[idx] = True
    return EventVector(tuple(bits))
