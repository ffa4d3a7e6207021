"""Micro-averaged precision, recall and F1 over relation tuples.

Two entity criteria are supported. ``strict`` requires equal types and equal
mention sets. ``relaxed`` requires equal types and that more than
``relaxed_threshold`` of the predicted mentions belong to the gold entity.
Relations match when their types are equal and their entities match pairwise
in tuple order.
"""

from __future__ import annotations

import enum
import graphlib
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from functools import partial
from typing import Any, Iterable, Mapping, Sequence

from docrel.parse import ParsedEntity, ParsedRelation, diff_relations


class Mode(enum.Enum):
    STRICT = "strict"
    RELAXED = "relaxed"


@dataclass(frozen=True)
class MatchCriterion:
    mode: Mode = Mode.STRICT
    relaxed_threshold: float = 0.5

    def __post_init__(self):
        object.__setattr__(self, "mode", Mode(self.mode))
        if not 0 < self.relaxed_threshold < 1:
            raise ValueError(f"relaxed_threshold must lie in (0, 1), got {self.relaxed_threshold}")

    @property
    def _threshold(self) -> Fraction:
        # decimal thresholds compared exactly: 2/4 is not > 0.5
        return Fraction(str(self.relaxed_threshold))


STRICT = MatchCriterion(Mode.STRICT)
RELAXED = MatchCriterion(Mode.RELAXED)


def entity_match(predicted: ParsedEntity, gold: ParsedEntity, criterion: MatchCriterion = STRICT) -> bool:
    if not predicted.mentions:
        raise ValueError("predicted entity has no mentions")
    if predicted.entity_type != gold.entity_type:
        return False
    pred, ref = set(predicted.mentions), set(gold.mentions)
    if criterion.mode is Mode.STRICT:
        return pred == ref
    return Fraction(len(pred & ref), len(pred)) > criterion._threshold


def relation_match(predicted: ParsedRelation, gold: ParsedRelation, criterion: MatchCriterion = STRICT) -> bool:
    if predicted.relation_type != gold.relation_type:
        return False
    if len(predicted.entities) != len(gold.entities):
        return False
    return all(entity_match(p, g, criterion) for p, g in zip(predicted.entities, gold.entities))


@dataclass
class Counts:
    tp: int = 0
    fp: int = 0
    fn: int = 0

    def __iadd__(self, other: "Counts") -> "Counts":
        self.tp += other.tp
        self.fp += other.fp
        self.fn += other.fn
        return self

    @property
    def precision(self) -> float:
        return self.tp / (self.tp + self.fp) if self.tp + self.fp else 0.0

    @property
    def recall(self) -> float:
        return self.tp / (self.tp + self.fn) if self.tp + self.fn else 0.0

    @property
    def f1(self) -> float:
        p, r = self.precision, self.recall
        return 2 * p * r / (p + r) if p + r else 0.0

    def to_dict(self) -> dict[str, Any]:
        return {
            "tp": self.tp, "fp": self.fp, "fn": self.fn,
            "precision": self.precision, "recall": self.recall, "f1": self.f1,
        }


@dataclass
class ScoreReport:
    overall: Counts = field(default_factory=Counts)
    per_type: dict[str, Counts] = field(default_factory=dict)
    criterion: MatchCriterion = STRICT

    def to_dict(self) -> dict[str, Any]:
        return {
            "criterion": self.criterion.mode.value,
            "relaxed_threshold": self.criterion.relaxed_threshold,
            "overall": self.overall.to_dict(),
            "per_type": {k: v.to_dict() for k, v in sorted(self.per_type.items())},
        }

    def format_table(self, per_type: bool = True) -> str:
        header = f"{'type':<16}{'tp':>7}{'fp':>7}{'fn':>7}{'P':>9}{'R':>9}{'F1':>9}"
        rows = [header, "-" * len(header)]

        def row(name: str, c: Counts) -> str:
            return f"{name:<16}{c.tp:>7}{c.fp:>7}{c.fn:>7}{c.precision:>9.4f}{c.recall:>9.4f}{c.f1:>9.4f}"

        if per_type:
            rows += [row(k, v) for k, v in sorted(self.per_type.items())]
            rows.append("-" * len(header))
        rows.append(row("micro", self.overall))
        return "\n".join(rows)


class ScoreError(ValueError):
    pass


def score_document(
    predicted: Sequence[ParsedRelation],
    gold: Sequence[ParsedRelation],
    criterion: MatchCriterion = STRICT,
) -> ScoreReport:
    tp, fp, fn = diff_relations(predicted, gold, partial(relation_match, criterion=criterion))
    report = ScoreReport(criterion=criterion)
    for pred, _ in tp:
        report.per_type.setdefault(pred.relation_type, Counts()).tp += 1
    for pred in fp:
        report.per_type.setdefault(pred.relation_type, Counts()).fp += 1
    for ref in fn:
        report.per_type.setdefault(ref.relation_type, Counts()).fn += 1
    report.overall = Counts(len(tp), len(fp), len(fn))
    return report


def merge_reports(reports: Iterable[ScoreReport], criterion: MatchCriterion = STRICT) -> ScoreReport:
    total = ScoreReport(criterion=criterion)
    for r in reports:
        total.overall += r.overall
        for k, c in r.per_type.items():
            total.per_type.setdefault(k, Counts())
            total.per_type[k] += c
    return total


def _check_ids(predicted: Mapping[str, Any], gold: Mapping[str, Any]) -> None:
    missing = set(gold) - set(predicted)
    extra = set(predicted) - set(gold)
    if missing or extra:
        parts = []
        if missing:
            parts.append(f"missing predictions for {sorted(missing)[:10]}")
        if extra:
            parts.append(f"predictions for unknown documents {sorted(extra)[:10]}")
        raise ScoreError("document ids differ: " + "; ".join(parts))


def score(
    predicted: Mapping[str, Sequence[ParsedRelation]],
    gold: Mapping[str, Sequence[ParsedRelation]],
    criterion: MatchCriterion = STRICT,
) -> ScoreReport:
    """Pool tp/fp/fn over documents, then compute micro metrics."""
    _check_ids(predicted, gold)
    return merge_reports(
        (score_document(predicted[doc_id], gold[doc_id], criterion) for doc_id in gold),
        criterion,
    )


class HierarchyError(ValueError):
    pass


class Hierarchy:
    """Directed acyclic is-a graph over concept identifiers.

    Mentions resolve to identifiers through a lexicon; a mention that is
    itself a node name resolves to that node.
    """

    def __init__(self, edges: Iterable[tuple[str, str]], lexicon: Iterable[tuple[str, str]] = ()):
        self.parents: dict[str, set[str]] = {}
        for child, parent in edges:
            self.parents.setdefault(child, set()).add(parent)
            self.parents.setdefault(parent, set())
        self.lexicon: dict[str, set[str]] = {}
        for ident, mention in lexicon:
            self.lexicon.setdefault(_lex_key(mention), set()).add(ident)
        try:
            graphlib.TopologicalSorter(self.parents).prepare()
        except graphlib.CycleError as e:
            cycle = " -> ".join(e.args[1])
            raise HierarchyError(f"hierarchy contains a cycle: {cycle}") from None
        self._ancestors: dict[str, frozenset[str]] = {}
        self._node_keys: dict[str, set[str]] = {}
        for node in self.parents:
            self._node_keys.setdefault(_lex_key(node), set()).add(node)

    @classmethod
    def from_files(cls, edges_path, lexicon_path=None) -> "Hierarchy":
        edges = list(_read_pairs(edges_path))
        lexicon = list(_read_pairs(lexicon_path)) if lexicon_path else []
        return cls(edges, lexicon)

    def ancestors(self, node: str) -> frozenset[str]:
        """Strict ancestors of a node."""
        if node not in self._ancestors:
            seen: set[str] = set()
            queue = deque(self.parents.get(node, ()))
            while queue:
                n = queue.popleft()
                if n not in seen:
                    seen.add(n)
                    queue.extend(self.parents.get(n, ()))
            self._ancestors[node] = frozenset(seen)
        return self._ancestors[node]

    def resolve(self, mention: str) -> set[str]:
        key = _lex_key(mention)
        return self.lexicon.get(key, set()) | self._node_keys.get(key, set())

    def resolve_entity(self, entity: ParsedEntity) -> set[str]:
        ids: set[str] = set()
        for m in entity.mentions:
            ids |= self.resolve(m)
        return ids

    def is_hypernym(self, general: ParsedEntity, specific: ParsedEntity) -> bool:
        """True if some concept of ``general`` is a strict ancestor of some concept of ``specific``."""
        general_ids = self.resolve_entity(general)
        if not general_ids:
            return False
        return any(general_ids & self.ancestors(s) for s in self.resolve_entity(specific))


def _lex_key(mention: str) -> str:
    return " ".join(mention.split()).lower()


def _read_pairs(path) -> Iterable[tuple[str, str]]:
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line.strip() or line.startswith("#"):
                continue
            cols = line.split("\t")
            if len(cols) != 2:
                raise HierarchyError(f"{path}:{lineno}: expected 2 tab-separated columns, got {len(cols)}")
            yield cols[0].strip(), cols[1].strip()


def filter_hypernyms(
    predictions: Mapping[str, Sequence[ParsedRelation]],
    gold: Mapping[str, Sequence[ParsedRelation]],
    hierarchy: Hierarchy,
    criterion: MatchCriterion = STRICT,
) -> dict[str, list[ParsedRelation]]:
    """Drop false positives whose last entity generalizes a gold relation's.

    A prediction is removed when it is not matched to any gold relation,
    a gold relation of the same type agrees with it on every entity but the
    last, and the predicted last entity is a strict ancestor of that gold
    relation's last entity.
    """
    _check_ids(predictions, gold)
    match = partial(relation_match, criterion=criterion)
    out: dict[str, list[ParsedRelation]] = {}
    for doc_id, preds in predictions.items():
        refs = gold[doc_id]
        _, fps, _ = diff_relations(preds, refs, match)
        false_pos = set(fps)

        def generalizes(p: ParsedRelation) -> bool:
            for g in refs:
                if g.relation_type != p.relation_type or len(g.entities) != len(p.entities):
                    continue
                if not all(entity_match(a, b, criterion) for a, b in zip(p.entities[:-1], g.entities[:-1])):
                    continue
                if hierarchy.is_hypernym(p.entities[-1], g.entities[-1]):
                    return True
            return False

        out[doc_id] = [p for p in preds if p not in false_pos or not generalizes(p)]
    return out
