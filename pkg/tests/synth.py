"""Random annotated documents with independently known normalized relations."""

from __future__ import annotations

import random
import string

from docrel import AnnotatedDocument, Entity, Mention, RelationInstance, SchemaConfig
from docrel.constraints import INITIAL_STATE, next_valid_classes, step
from docrel.linearize import BOS, EOS, Kind

SYNTH_SCHEMA = SchemaConfig.from_labels(
    ["CHEMICAL", "DISEASE", "GENE", "MUTATION"],
    {"CID": 2, "GDA": 2, "DGM": 3},
)
ENTITY_TYPES = list(SYNTH_SCHEMA.entity_types)
BINARY = ["CID", "GDA"]
TERNARY = ["DGM"]

_ALPHABET = string.ascii_letters + string.digits + "-'()."


def _word(rng: random.Random) -> str:
    return "".join(rng.choice(_ALPHABET) for _ in range(rng.randint(1, 7)))


def random_document(rng: random.Random, doc_id: str = "synth", max_relations: int = 6):
    """Return (document, expected) where expected is the set of relation keys.

    A key is ``(relation_type, ((mentions, entity_type), ...))`` with the
    mentions of each entity lowercased, deduplicated and sorted. Mentions are
    word spans that may nest in or overlap each other.
    """
    n_words = rng.randint(20, 60)
    words = [_word(rng) for _ in range(n_words)]
    # a small vocabulary repeat makes identical surface forms likely
    for _ in range(rng.randint(0, 5)):
        words[rng.randrange(n_words)] = rng.choice(words)

    gaps = [rng.choice([" ", " ", " ", "  ", "\n"]) for _ in range(n_words - 1)]
    starts, ends, pos = [], [], 0
    pieces = []
    for i, w in enumerate(words):
        starts.append(pos)
        pieces.append(w)
        pos += len(w)
        ends.append(pos)
        if i < n_words - 1:
            pieces.append(gaps[i])
            pos += len(gaps[i])
    text = "".join(pieces)

    n_entities = rng.randint(3, 8)
    entities = []
    expected_entity = {}
    for k in range(n_entities):
        mentions = []
        surfaces = set()
        for _ in range(rng.randint(1, 4)):
            i = rng.randrange(n_words)
            j = min(n_words, i + rng.randint(1, 3))
            mentions.append(Mention(text[starts[i]:ends[j - 1]], starts[i], ends[j - 1]))
            surfaces.add(" ".join(words[i:j]).lower())
        etype = rng.choice(ENTITY_TYPES)
        ent = Entity(tuple(mentions), etype, f"E{k}")
        entities.append(ent)
        expected_entity[ent] = (tuple(sorted(surfaces)), etype)

    relations = []
    for _ in range(rng.randint(1, max_relations)):
        if rng.random() < 0.3:
            rtype, arity = rng.choice(TERNARY), 3
        else:
            rtype, arity = rng.choice(BINARY), 2
        relations.append(RelationInstance(tuple(rng.sample(entities, arity)), rtype))

    doc = AnnotatedDocument(doc_id, text, ((0, len(text)),), tuple(entities), tuple(relations))
    expected = {
        (rel.relation_type, tuple(expected_entity[e] for e in rel.entities)) for rel in relations
    }
    return doc, expected


def relation_key(rel) -> tuple:
    return (rel.relation_type, tuple((e.mentions, e.entity_type) for e in rel.entities))


def random_walk(rng: random.Random, config: SchemaConfig, max_len: int = 80):
    """Walk the decoding automaton to EOS, realizing COPY as unique placeholder words.

    Returns (target string, token classes including BOS/EOS, relations emitted).
    """
    state, tokens, classes, n_relations = INITIAL_STATE, [], [BOS], 0
    while True:
        options = sorted(next_valid_classes(state, config), key=repr)
        if len(tokens) >= max_len or rng.random() < 0.03:
            choice = EOS
        else:
            non_eos = [c for c in options if c.kind is not Kind.EOS]
            choice = rng.choice(non_eos)
        classes.append(choice)
        if choice.kind is Kind.EOS:
            return " ".join(tokens), classes, n_relations
        state = step(state, choice, config)
        if choice.kind is Kind.COPY:
            tokens.append(f"w{len(tokens)}")
        elif choice.kind is Kind.COREF:
            tokens.append(config.coref_separator)
        elif choice.kind is Kind.ENTITY:
            tokens.append(config.entity_types[choice.label])
        else:
            tokens.append(config.relation_types[choice.label][0])
            n_relations += 1
