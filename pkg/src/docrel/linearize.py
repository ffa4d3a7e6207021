"""Relations -> target string.

Each entity is rendered as its mentions joined by the coreference separator
and closed by its entity-type token; a relation is its entities in tuple
order closed by the relation-type token::

    estrogen receptor alpha ; esr1 @GENE@ schizophrenia @DISEASE@ @GDA@
"""

from __future__ import annotations

import enum
from typing import Iterable, NamedTuple, Optional, Sequence

from docrel.model import AnnotatedDocument, Entity, RelationInstance, normalize_mention_text
from docrel.schema import SchemaConfig


class LinearizationError(ValueError):
    pass


class Kind(enum.Enum):
    BOS = "BOS"
    EOS = "EOS"
    COPY = "COPY"
    COREF = "COREF"
    ENTITY = "ENTITY"
    RELATION = "RELATION"


class TokenClass(NamedTuple):
    kind: Kind
    # entity or relation label; None means "any label of this kind"
    label: Optional[str] = None

    def __repr__(self) -> str:
        return self.kind.value if self.label is None else f"{self.kind.value}({self.label})"


BOS = TokenClass(Kind.BOS)
EOS = TokenClass(Kind.EOS)
COPY = TokenClass(Kind.COPY)
COREF = TokenClass(Kind.COREF)


def entity_class(label: Optional[str] = None) -> TokenClass:
    return TokenClass(Kind.ENTITY, label)


def relation_class(label: Optional[str] = None) -> TokenClass:
    return TokenClass(Kind.RELATION, label)


def classify_token(token: str, config: SchemaConfig) -> TokenClass:
    if token == config.coref_separator:
        return COREF
    label = config.entity_label_of.get(token)
    if label is not None:
        return TokenClass(Kind.ENTITY, label)
    label = config.relation_label_of.get(token)
    if label is not None:
        return TokenClass(Kind.RELATION, label)
    return COPY


def classify_tokens(target: str, config: SchemaConfig) -> list[TokenClass]:
    """Token classes of a target string, wrapped in BOS ... EOS."""
    return [BOS, *(classify_token(tok, config) for tok in target.split()), EOS]


def _entity_key(entity: Entity) -> int:
    return entity.first_position


def sort_relations(doc: AnnotatedDocument) -> list[RelationInstance]:
    """Order relations by the first-occurring mention of each entity, head first.

    Ties on every position keep input order.
    """
    return sorted(doc.relations, key=lambda rel: tuple(_entity_key(e) for e in rel.entities))


def entity_mention_texts(entity: Entity, config: SchemaConfig) -> list[str]:
    """Normalized, deduplicated mention strings in document order."""
    seen: dict[str, None] = {}
    for m in sorted(entity.mentions, key=lambda m: (m.start, m.end)):
        text = normalize_mention_text(m.text, config)
        if text:
            seen.setdefault(text)
    return list(seen)


def render_mentions(mentions: Sequence[str], entity_type: str, config: SchemaConfig) -> str:
    """Render already-normalized mention strings as one entity segment."""
    if not mentions:
        raise LinearizationError(f"entity of type {entity_type!r} has no non-empty mentions")
    token = config.entity_token(entity_type)
    for text in mentions:
        for tok in text.split(" "):
            if classify_token(tok, config) != COPY or tok in (config.hint_separator, config.start_token, config.end_token):
                raise LinearizationError(f"mention {text!r} contains the special token {tok!r}")
    sep = f" {config.coref_separator} "
    return f"{sep.join(mentions)} {token}"


def render_entity(entity: Entity, config: SchemaConfig) -> str:
    texts = entity_mention_texts(entity, config)
    if not texts:
        raise LinearizationError(
            f"entity {entity.entity_id or entity.entity_type!r} has no non-empty mentions"
        )
    return render_mentions(texts, entity.entity_type, config)


def render_relation(rel: RelationInstance, config: SchemaConfig) -> str:
    token = config.relation_token(rel.relation_type)
    expected = config.arity(rel.relation_type)
    if rel.arity != expected:
        raise LinearizationError(
            f"relation {rel.relation_type!r} has {rel.arity} entities, schema arity is {expected}"
        )
    parts = [render_entity(e, config) for e in rel.entities]
    return " ".join([*parts, token])


def serialize_relations(doc: AnnotatedDocument, config: SchemaConfig) -> str:
    return " ".join(render_relation(rel, config) for rel in sort_relations(doc))


def linearize_all(docs: Iterable[AnnotatedDocument], config: SchemaConfig) -> Iterable[str]:
    for doc in docs:
        try:
            yield serialize_relations(doc, config)
        except (LinearizationError, ValueError) as e:
            raise LinearizationError(f"{doc.doc_id}: {e}") from None
