"""Entity hints: known entities prepended to the source text.

    estrogen receptor alpha ; esr1 @GENE@ schizophrenia @DISEASE@ @SEP@ variants in ...
"""

from __future__ import annotations

from typing import Iterable, Mapping, Sequence

from docrel.linearize import render_entity, sort_relations
from docrel.model import AnnotatedDocument, Entity, normalize_mention_text
from docrel.parse import ParsedEntity, ParsedRelation
from docrel.schema import SchemaConfig


def hint_entities(doc: AnnotatedDocument) -> list[Entity]:
    """Entities in the order they first appear in the target string.

    Entities that take part in no relation follow, in document order of
    their first mention.
    """
    ordered: dict[Entity, None] = {}
    for rel in sort_relations(doc):
        for ent in rel.entities:
            ordered.setdefault(ent)
    rest = [e for e in doc.entities if e not in ordered]
    for ent in sorted(rest, key=lambda e: min(m.start for m in e.mentions)):
        ordered.setdefault(ent)
    return list(ordered)


def build_hint(entities: Sequence[Entity], source: str, config: SchemaConfig) -> str:
    parts = [render_entity(e, config) for e in entities]
    parts.append(config.hint_separator)
    text = normalize_mention_text(source, config)
    if text:
        parts.append(text)
    return " ".join(parts)


def hint_document(doc: AnnotatedDocument, config: SchemaConfig) -> str:
    return build_hint(hint_entities(doc), doc.text, config)


def allowed_mentions_from(docs_entities: Iterable[Entity], config: SchemaConfig) -> dict[str, set[str]]:
    """Normalized mention strings per entity type, e.g. from NER output."""
    allowed: dict[str, set[str]] = {}
    for ent in docs_entities:
        bucket = allowed.setdefault(ent.entity_type, set())
        for m in ent.mentions:
            text = normalize_mention_text(m.text, config)
            if text:
                bucket.add(text)
    return allowed


def filter_to_hinted(
    parsed: Sequence[ParsedRelation],
    allowed_mentions: Mapping[str, set[str]],
) -> list[ParsedRelation]:
    """Drop predicted mentions an external entity tagger did not produce.

    Entities left without mentions are removed, and so is any relation that
    loses an entity.
    """
    out: dict[ParsedRelation, None] = {}
    for rel in parsed:
        entities = []
        for ent in rel.entities:
            allowed = allowed_mentions.get(ent.entity_type, set())
            kept = tuple(m for m in ent.mentions if m in allowed)
            if not kept:
                break
            entities.append(ParsedEntity(kept, ent.entity_type))
        else:
            out.setdefault(ParsedRelation(tuple(entities), rel.relation_type))
    return list(out)
