"""Shared data model: mentions, entities, relations and annotated documents.

Documents are exchanged as JSON lines ("records"), one document per line::

    {"doc_id": "1728915",
     "text": "Carbamazepine-induced cardiac dysfunction ...",
     "sentence_spans": [[0, 41], [42, 210]],
     "entities": [{"type": "Chemical", "id": "D002220",
                   "mentions": [{"text": "Carbamazepine", "start": 0, "end": 13,
                                 "sentence": 0}]}],
     "relations": [{"type": "CID", "entities": [0, 1]}]}

``relations[].entities`` are indices into ``entities``. ``id``, ``sentence``
and ``discontinuous`` are optional.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Any, Iterable, Iterator, Optional

from docrel.schema import SchemaConfig


class DocumentError(ValueError):
    """An annotated document violates a structural invariant."""


def normalize_mention_text(raw: str, config: Optional[SchemaConfig] = None) -> str:
    """Strip, collapse internal whitespace and (optionally) lowercase."""
    text = " ".join(raw.split())
    if config is None or config.case_fold:
        text = text.lower()
        # lower() can, rarely, introduce characters that split() treats as separators
        text = " ".join(text.split())
    return text


@dataclass(frozen=True)
class Mention:
    text: str
    start: int
    end: int
    sentence_index: Optional[int] = None
    # surface text of a discontinuous mention is not the covering substring
    discontinuous: bool = False

    def __post_init__(self):
        if not self.start < self.end:
            raise DocumentError(f"mention {self.text!r}: start {self.start} must be < end {self.end}")


def mention_position(m: Mention) -> int:
    """Sort position of a mention: the sum of its character offsets."""
    return m.start + m.end


@dataclass(frozen=True)
class Entity:
    mentions: tuple[Mention, ...]
    entity_type: str
    entity_id: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, "mentions", tuple(self.mentions))
        if not self.mentions:
            raise DocumentError(f"entity {self.entity_id or self.entity_type!r} has no mentions")

    @property
    def first_position(self) -> int:
        return min(mention_position(m) for m in self.mentions)


@dataclass(frozen=True)
class RelationInstance:
    entities: tuple[Entity, ...]
    relation_type: str

    def __post_init__(self):
        object.__setattr__(self, "entities", tuple(self.entities))
        if len(self.entities) < 2:
            raise DocumentError(
                f"relation {self.relation_type!r} has {len(self.entities)} entities, need >= 2"
            )

    @property
    def arity(self) -> int:
        return len(self.entities)


@dataclass(frozen=True)
class AnnotatedDocument:
    doc_id: str
    text: str
    sentence_spans: tuple[tuple[int, int], ...] = ()
    entities: tuple[Entity, ...] = ()
    relations: tuple[RelationInstance, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "sentence_spans", tuple((int(s), int(e)) for s, e in self.sentence_spans))
        object.__setattr__(self, "entities", tuple(self.entities))
        object.__setattr__(self, "relations", tuple(self.relations))

        prev_end = None
        for start, end in self.sentence_spans:
            if start > end or (prev_end is not None and start < prev_end):
                raise DocumentError(f"{self.doc_id}: sentence spans overlap or are out of order")
            prev_end = end

        known = set(self.entities)
        for rel in self.relations:
            for ent in rel.entities:
                if ent not in known:
                    raise DocumentError(
                        f"{self.doc_id}: relation {rel.relation_type} references an entity "
                        f"not listed in the document ({ent.mentions[0].text!r})"
                    )

    def sentence_of(self, m: Mention) -> Optional[int]:
        """Index of the sentence containing the mention start, if spans are known."""
        if m.sentence_index is not None:
            return m.sentence_index
        for i, (start, end) in enumerate(self.sentence_spans):
            if start <= m.start < end:
                return i
        return None

    def inconsistent_mentions(self) -> list[Mention]:
        """Contiguous mentions whose text disagrees with the document text."""
        bad = []
        for ent in self.entities:
            for m in ent.mentions:
                if m.discontinuous:
                    continue
                if " ".join(m.text.split()) != " ".join(self.text[m.start:m.end].split()):
                    bad.append(m)
        return bad


def document_to_record(doc: AnnotatedDocument) -> dict[str, Any]:
    index = {}
    for i, ent in enumerate(doc.entities):
        index.setdefault(ent, i)

    def mention(m: Mention) -> dict[str, Any]:
        out: dict[str, Any] = {"text": m.text, "start": m.start, "end": m.end}
        if m.sentence_index is not None:
            out["sentence"] = m.sentence_index
        if m.discontinuous:
            out["discontinuous"] = True
        return out

    entities = []
    for ent in doc.entities:
        rec: dict[str, Any] = {"type": ent.entity_type}
        if ent.entity_id is not None:
            rec["id"] = ent.entity_id
        rec["mentions"] = [mention(m) for m in ent.mentions]
        entities.append(rec)

    return {
        "doc_id": doc.doc_id,
        "text": doc.text,
        "sentence_spans": [list(s) for s in doc.sentence_spans],
        "entities": entities,
        "relations": [
            {"type": r.relation_type, "entities": [index[e] for e in r.entities]}
            for r in doc.relations
        ],
    }


def document_from_record(rec: dict[str, Any]) -> AnnotatedDocument:
    try:
        entities = tuple(
            Entity(
                mentions=tuple(
                    Mention(
                        text=m["text"],
                        start=int(m["start"]),
                        end=int(m["end"]),
                        sentence_index=m.get("sentence"),
                        discontinuous=bool(m.get("discontinuous", False)),
                    )
                    for m in e["mentions"]
                ),
                entity_type=e["type"],
                entity_id=e.get("id"),
            )
            for e in rec.get("entities", [])
        )
        relations = []
        for r in rec.get("relations", []):
            idx = r["entities"]
            if any(not 0 <= i < len(entities) for i in idx):
                raise DocumentError(f"{rec['doc_id']}: relation entity index out of range: {idx}")
            relations.append(RelationInstance(tuple(entities[i] for i in idx), r["type"]))
        return AnnotatedDocument(
            doc_id=str(rec["doc_id"]),
            text=rec["text"],
            sentence_spans=tuple(tuple(s) for s in rec.get("sentence_spans", [])),
            entities=entities,
            relations=tuple(relations),
        )
    except KeyError as e:
        raise DocumentError(f"record is missing field {e.args[0]!r}") from None


def read_records(lines: Iterable[str]) -> Iterator[AnnotatedDocument]:
    for lineno, line in enumerate(lines, 1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as e:
            raise DocumentError(f"line {lineno}: invalid JSON ({e.msg})") from None
        try:
            yield document_from_record(rec)
        except DocumentError as e:
            raise DocumentError(f"line {lineno}: {e}") from None


def write_record(doc: AnnotatedDocument) -> str:
    return json.dumps(document_to_record(doc), ensure_ascii=False)

