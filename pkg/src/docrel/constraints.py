"""Finite-state constraints for decoding target strings.

Given the class of the previously generated token, only some token classes
can continue a string that still parses:

    BOS      -> COPY
    COPY     -> COPY | COREF | ENTITY(any)
    COREF    -> COPY
    ENTITY   -> COPY                if fewer than max-arity entities are open
              | RELATION(r)         for every r whose arity equals the open count
    RELATION -> COPY

EOS is valid everywhere and its score is never masked. A decoder keeps one
:class:`DecoderState` per hypothesis and calls :func:`step` after each
emitted token.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from docrel.linearize import BOS, COPY, COREF, EOS, Kind, TokenClass
from docrel.schema import SchemaConfig

MASK_FLOOR = -1e32


class ConstraintViolation(ValueError):
    """A state or input that the automaton can never produce."""


class InvalidTransition(ValueError):
    def __init__(self, state: "DecoderState", emitted: TokenClass):
        self.state = state
        self.emitted = emitted
        super().__init__(f"{emitted!r} is not a valid continuation of {state}")


@dataclass(frozen=True)
class DecoderState:
    last_class: Kind = Kind.BOS
    # ENTITY tokens since the last RELATION (or BOS)
    entities_in_current_relation: int = 0
    relations_emitted: int = 0

    def __str__(self) -> str:
        return (
            f"state(after {self.last_class.value}, entities={self.entities_in_current_relation}, "
            f"relations={self.relations_emitted})"
        )


INITIAL_STATE = DecoderState()


def _check_reachable(state: DecoderState, config: SchemaConfig) -> None:
    max_arity = config.max_arity
    if max_arity < 2:
        raise ConstraintViolation("schema defines no relation types")
    n = state.entities_in_current_relation
    last = state.last_class
    ok = {
        Kind.BOS: n == 0 and state.relations_emitted == 0,
        Kind.COPY: 0 <= n < max_arity,
        Kind.COREF: 0 <= n < max_arity,
        Kind.ENTITY: 1 <= n <= max_arity,
        Kind.RELATION: n == 0 and state.relations_emitted >= 1,
        Kind.EOS: False,
    }[last]
    if not ok or state.relations_emitted < 0:
        raise ConstraintViolation(f"unreachable decoder {state}")


def next_valid_classes(state: DecoderState, config: SchemaConfig) -> frozenset[TokenClass]:
    _check_reachable(state, config)
    last = state.last_class
    n = state.entities_in_current_relation
    valid = {EOS}
    if last in (Kind.BOS, Kind.COREF, Kind.RELATION):
        valid.add(COPY)
    elif last is Kind.COPY:
        valid.add(COPY)
        valid.add(COREF)
        valid.update(TokenClass(Kind.ENTITY, label) for label in config.entity_types)
    elif last is Kind.ENTITY:
        if n < config.max_arity:
            valid.add(COPY)
        valid.update(
            TokenClass(Kind.RELATION, label)
            for label, (_, arity) in config.relation_types.items()
            if arity == n
        )
    return frozenset(valid)


def is_valid(state: DecoderState, cls: TokenClass, config: SchemaConfig) -> bool:
    """Membership test; an unlabelled ENTITY/RELATION class matches any label."""
    valid = next_valid_classes(state, config)
    if cls.label is None and cls.kind in (Kind.ENTITY, Kind.RELATION):
        return any(v.kind is cls.kind for v in valid)
    return cls in valid


def step(state: DecoderState, emitted: TokenClass, config: SchemaConfig) -> DecoderState:
    if not is_valid(state, emitted, config):
        raise InvalidTransition(state, emitted)
    kind = emitted.kind
    if kind is Kind.ENTITY:
        return DecoderState(kind, state.entities_in_current_relation + 1, state.relations_emitted)
    if kind is Kind.RELATION:
        return DecoderState(kind, 0, state.relations_emitted + 1)
    return DecoderState(kind, state.entities_in_current_relation, state.relations_emitted)


def valid_mask(state: DecoderState, candidate_classes: Sequence[TokenClass], config: SchemaConfig) -> list[bool]:
    """Per-candidate validity; EOS candidates are always True."""
    return [c.kind is Kind.EOS or is_valid(state, c, config) for c in candidate_classes]


def mask_scores(
    state: DecoderState,
    candidate_classes: Sequence[TokenClass],
    scores: Sequence[float],
    config: SchemaConfig,
    floor: float = MASK_FLOOR,
) -> list[float]:
    """Replace the log-probabilities of invalid candidates with ``floor``."""
    if len(candidate_classes) != len(scores):
        raise ConstraintViolation(
            f"{len(candidate_classes)} candidate classes but {len(scores)} scores"
        )
    mask = valid_mask(state, candidate_classes, config)
    return [float(s) if ok else floor for s, ok in zip(scores, mask)]


def validate_sequence(classes: Sequence[TokenClass], config: SchemaConfig) -> bool:
    """True iff the sequence is BOS ... EOS and every transition is allowed."""
    if not classes or classes[0] != BOS or classes[-1].kind is not Kind.EOS:
        return False
    state = INITIAL_STATE
    for cls in classes[1:-1]:
        if cls.kind in (Kind.BOS, Kind.EOS):
            return False
        try:
            state = step(state, cls, config)
        except InvalidTransition:
            return False
    return True
