"""Non-neural machinery for seq2seq document-level relation extraction."""

from docrel.constraints import (
    INITIAL_STATE,
    DecoderState,
    mask_scores,
    next_valid_classes,
    step,
    validate_sequence,
)
from docrel.corpus import (
    SentenceDefinition,
    intersentence_fraction,
    read_docred,
    read_pubtator,
    write_pubtator,
)
from docrel.evaluation import (
    RELAXED,
    STRICT,
    Hierarchy,
    MatchCriterion,
    Mode,
    ScoreReport,
    entity_match,
    filter_hypernyms,
    relation_match,
    score,
)
from docrel.hinting import build_hint, filter_to_hinted, hint_entities
from docrel.linearize import TokenClass, classify_tokens, serialize_relations, sort_relations
from docrel.model import (
    AnnotatedDocument,
    Entity,
    Mention,
    RelationInstance,
    mention_position,
    normalize_mention_text,
)
from docrel.parse import ParsedEntity, ParsedRelation, diff_relations, gold_relations, parse_target_string
from docrel.schema import SchemaConfig, load_schema

__version__ = "0.1.0"

__all__ = [
    "INITIAL_STATE",
    "DecoderState",
    "mask_scores",
    "next_valid_classes",
    "step",
    "validate_sequence",
    "SentenceDefinition",
    "intersentence_fraction",
    "read_docred",
    "read_pubtator",
    "write_pubtator",
    "RELAXED",
    "STRICT",
    "Hierarchy",
    "MatchCriterion",
    "Mode",
    "ScoreReport",
    "entity_match",
    "filter_hypernyms",
    "relation_match",
    "score",
    "build_hint",
    "filter_to_hinted",
    "hint_entities",
    "TokenClass",
    "classify_tokens",
    "serialize_relations",
    "sort_relations",
    "AnnotatedDocument",
    "Entity",
    "Mention",
    "RelationInstance",
    "mention_position",
    "normalize_mention_text",
    "ParsedEntity",
    "ParsedRelation",
    "diff_relations",
    "gold_relations",
    "parse_target_string",
    "SchemaConfig",
    "load_schema",
]
