"""Target string -> relations.

Grammar over whitespace tokens::

    relation := entity{k} RELATION      k = arity of the relation token
    entity   := mention (COREF mention)* ENTITY
    mention  := COPY+

The scan is left to right. A segment that does not fit the grammar is
discarded up to and including the next relation token, and scanning resumes
after it. Parsed mentions are normalized, sorted and deduplicated; identical
relations are reported once.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Any, Callable, Iterable, Sequence

from docrel.linearize import Kind, classify_token
from docrel.model import AnnotatedDocument, RelationInstance, normalize_mention_text
from docrel.schema import SchemaConfig

# tokens shaped like schema tokens but unknown to the schema end a segment
_SPECIAL_SHAPE = re.compile(r"^@[^@\s]+@$")


@dataclass(frozen=True)
class ParsedEntity:
    mentions: tuple[str, ...]
    entity_type: str

    @classmethod
    def build(cls, mentions: Iterable[str], entity_type: str, config: SchemaConfig | None = None) -> "ParsedEntity":
        """Normalize, deduplicate and sort mention strings."""
        normed = {normalize_mention_text(m, config) for m in mentions}
        normed.discard("")
        if not normed:
            raise ValueError(f"entity of type {entity_type!r} has no non-empty mentions")
        return cls(tuple(sorted(normed)), entity_type)

    def to_json(self) -> list[Any]:
        return [list(self.mentions), self.entity_type]


@dataclass(frozen=True)
class ParsedRelation:
    entities: tuple[ParsedEntity, ...]
    relation_type: str

    def to_json(self) -> list[Any]:
        return [e.to_json() for e in self.entities]


def parse_target_string(target: str, config: SchemaConfig) -> list[ParsedRelation]:
    relations: dict[ParsedRelation, None] = {}
    mention: list[str] = []
    mentions: list[str] = []
    entities: list[ParsedEntity] = []
    broken = False

    def reset():
        nonlocal broken
        mention.clear()
        mentions.clear()
        entities.clear()
        broken = False

    for tok in target.split():
        if tok == config.start_token:
            continue
        if tok == config.end_token:
            break
        cls = classify_token(tok, config)

        if cls.kind is Kind.COPY:
            if tok == config.hint_separator or _SPECIAL_SHAPE.match(tok):
                # unknown relation type (or stray control token): drop the segment
                reset()
            else:
                mention.append(tok)
        elif cls.kind is Kind.COREF:
            if not mention:
                broken = True
            mentions.append(" ".join(mention))
            mention.clear()
        elif cls.kind is Kind.ENTITY:
            if not mention:
                broken = True
            mentions.append(" ".join(mention))
            mention.clear()
            if not broken:
                try:
                    entities.append(ParsedEntity.build(mentions, cls.label, config))
                except ValueError:
                    broken = True
            mentions.clear()
        else:  # RELATION
            ok = (
                not broken
                and not mention
                and not mentions
                and len(entities) == config.arity(cls.label)
            )
            if ok:
                relations.setdefault(ParsedRelation(tuple(entities), cls.label))
            reset()

    return list(relations)


def parsed_from_instance(rel: RelationInstance, config: SchemaConfig) -> ParsedRelation:
    """Normalized form of a gold relation, comparable with parser output."""
    return ParsedRelation(
        tuple(ParsedEntity.build((m.text for m in e.mentions), e.entity_type, config) for e in rel.entities),
        rel.relation_type,
    )


def gold_relations(doc: AnnotatedDocument, config: SchemaConfig) -> list[ParsedRelation]:
    out: dict[ParsedRelation, None] = {}
    for rel in doc.relations:
        out.setdefault(parsed_from_instance(rel, config))
    return list(out)


def relations_to_json(relations: Sequence[ParsedRelation]) -> dict[str, list[Any]]:
    """Nested lists keyed by relation type."""
    out: dict[str, list[Any]] = {}
    for rel in relations:
        out.setdefault(rel.relation_type, []).append(rel.to_json())
    return out


def relations_from_json(data: dict[str, list[Any]], config: SchemaConfig | None = None) -> list[ParsedRelation]:
    out: dict[ParsedRelation, None] = {}
    for relation_type, tuples in data.items():
        for ents in tuples:
            rel = ParsedRelation(
                tuple(ParsedEntity.build(mentions, etype, config) for mentions, etype in ents),
                relation_type,
            )
            out.setdefault(rel)
    return list(out)


MatchFn = Callable[[ParsedRelation, ParsedRelation], bool]


def diff_relations(
    predicted: Sequence[ParsedRelation],
    gold: Sequence[ParsedRelation],
    match: MatchFn,
) -> tuple[list[tuple[ParsedRelation, ParsedRelation]], list[ParsedRelation], list[ParsedRelation]]:
    """Split predictions into (matched pairs, false positives, false negatives).

    Each gold relation is consumed at most once. Predictions claim gold in
    prediction order; when a prediction's candidates are all taken, earlier
    claims are re-routed along an augmenting path if possible, so the number
    of matches is the maximum over all one-to-one assignments.
    """
    candidates = [[j for j, g in enumerate(gold) if match(p, g)] for p in predicted]
    owner: dict[int, int] = {}  # gold index -> prediction index

    def claim(i: int, visited: set[int]) -> bool:
        for j in candidates[i]:
            if j in visited:
                continue
            visited.add(j)
            if j not in owner or claim(owner[j], visited):
                owner[j] = i
                return True
        return False

    for i in range(len(predicted)):
        # plain greedy first: take the first free candidate
        free = next((j for j in candidates[i] if j not in owner), None)
        if free is not None:
            owner[free] = i
        else:
            claim(i, set())

    matched_pred = {i: j for j, i in owner.items()}
    tp = [(predicted[i], gold[matched_pred[i]]) for i in sorted(matched_pred)]
    fp = [p for i, p in enumerate(predicted) if i not in matched_pred]
    fn = [g for j, g in enumerate(gold) if j not in owner]
    return tp, fp, fn
