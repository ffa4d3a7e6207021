"""Corpus readers (PubTator, DocRED, JSON-lines records) and corpus statistics."""

from __future__ import annotations

import enum
import json
import logging
import re
from pathlib import Path
from typing import Any, Iterable, Iterator, Optional, Sequence, TextIO

from docrel.model import (
    AnnotatedDocument,
    Entity,
    Mention,
    RelationInstance,
    read_records,
)

logger = logging.getLogger(__name__)


class CorpusFormatError(ValueError):
    def __init__(self, message: str, lineno: Optional[int] = None):
        self.lineno = lineno
        super().__init__(f"line {lineno}: {message}" if lineno is not None else message)


# ---------------------------------------------------------------- sentences

_ABBREVIATIONS = {
    "e.g", "i.e", "vs", "fig", "figs", "al", "dr", "mr", "mrs", "ms", "no", "approx",
    "ca", "cf", "etc", "resp", "ref", "refs", "st", "jr", "sr", "inc", "ltd", "co",
}
_BOUNDARY = re.compile(r"[.!?]+[\"')\]]*(?=\s+[\"'(\[]?[A-Z0-9])")


def split_sentences(text: str, offset: int = 0) -> list[tuple[int, int]]:
    """Rule-based sentence spans (character offsets, end exclusive).

    Breaks after ., ! or ? when the next word starts with a capital letter or
    digit, except after common abbreviations, single initials and inside
    parentheses.
    """
    spans = []
    start = 0
    depth = 0
    last = 0
    for match in _BOUNDARY.finditer(text):
        segment = text[last:match.start()]
        depth += segment.count("(") + segment.count("[") - segment.count(")") - segment.count("]")
        depth = max(depth, 0)
        last = match.start()
        if depth:
            continue
        word = text[:match.start()].rsplit(None, 1)[-1] if text[:match.start()].strip() else ""
        word = word.lstrip("([\"'").lower()
        if word in _ABBREVIATIONS or (len(word) == 1 and word.isalpha()):
            continue
        end = match.end()
        spans.append((start, end))
        start = end
    spans.append((start, len(text)))

    out = []
    for s, e in spans:
        while s < e and text[s].isspace():
            s += 1
        while e > s and text[e - 1].isspace():
            e -= 1
        if s < e:
            out.append((s + offset, e + offset))
    return out


def _sentence_index(spans: Sequence[tuple[int, int]], start: int) -> Optional[int]:
    for i, (s, e) in enumerate(spans):
        if s <= start < e:
            return i
    # between sentences (whitespace gap): attach to the following sentence
    for i, (s, _) in enumerate(spans):
        if start < s:
            return i
    return len(spans) - 1 if spans else None


# ---------------------------------------------------------------- PubTator

_TITLE = re.compile(r"^([^|\t]*)\|t\|(.*)$")
_ABSTRACT = re.compile(r"^([^|\t]*)\|a\|(.*)$")
_NO_ID = {"", "-1", "-"}


class _PubtatorDoc:
    def __init__(self, doc_id: str, title: str, lineno: int):
        self.doc_id = doc_id
        self.title = title
        self.abstract: Optional[str] = None
        self.lineno = lineno
        self.annotations: list[tuple[int, int, int, str, str, list[str]]] = []
        self.relations: list[tuple[int, str, list[str]]] = []

    def build(self) -> AnnotatedDocument:
        title = self.title
        abstract = self.abstract or ""
        text = f"{title} {abstract}" if abstract else title
        # the title is one sentence, with or without final punctuation
        spans = [(0, len(title))] if title else []
        if abstract:
            spans.extend(split_sentences(abstract, offset=len(title) + 1))

        by_id: dict[str, list[Mention]] = {}
        types: dict[str, str] = {}
        for n, (lineno, start, end, surface, etype, ids) in enumerate(self.annotations):
            if not 0 <= start < end <= len(text):
                raise CorpusFormatError(
                    f"{self.doc_id}: offsets {start}-{end} outside document of length {len(text)}", lineno
                )
            actual = text[start:end]
            if actual != surface:
                logger.warning(
                    "line %d: %s: mention text %r disagrees with offsets %d-%d (%r); using offsets",
                    lineno, self.doc_id, surface, start, end, actual,
                )
            mention = Mention(actual, start, end, _sentence_index(spans, start))
            keys = [i for i in ids if i not in _NO_ID] or [f"-1#{n}"]
            for key in keys:
                by_id.setdefault(key, []).append(mention)
                types.setdefault(key, etype)

        entities = {
            key: Entity(tuple(mentions), types[key], None if key.startswith("-1#") else key)
            for key, mentions in by_id.items()
        }

        relations: dict[RelationInstance, None] = {}
        for lineno, rtype, ids in self.relations:
            missing = [i for i in ids if i not in entities]
            if missing:
                raise CorpusFormatError(
                    f"{self.doc_id}: relation {rtype} refers to unannotated identifier(s) {', '.join(missing)}",
                    lineno,
                )
            relations.setdefault(RelationInstance(tuple(entities[i] for i in ids), rtype))

        return AnnotatedDocument(
            doc_id=self.doc_id,
            text=text,
            sentence_spans=tuple(spans),
            entities=tuple(entities.values()),
            relations=tuple(relations),
        )


def iter_pubtator(lines: Iterable[str]) -> Iterator[AnnotatedDocument]:
    """Stream documents from PubTator-formatted lines.

    Relation lines are ``docid<TAB>type<TAB>id1<TAB>id2[<TAB>id3...]``; every
    column after the type is an entity identifier, so ternary relations take
    three identifier columns.
    """
    doc: Optional[_PubtatorDoc] = None
    for lineno, raw in enumerate(lines, 1):
        line = raw.rstrip("\r\n")
        if not line.strip():
            if doc is not None:
                yield doc.build()
                doc = None
            continue

        m = _TITLE.match(line)
        if m and "\t" not in line.split("|t|", 1)[0]:
            if doc is not None:
                yield doc.build()
            doc = _PubtatorDoc(m.group(1), m.group(2), lineno)
            continue
        if doc is None:
            raise CorpusFormatError(f"expected a '<docid>|t|<title>' line, got {line[:60]!r}", lineno)

        m = _ABSTRACT.match(line)
        if m and "\t" not in line.split("|a|", 1)[0]:
            if m.group(1) != doc.doc_id:
                raise CorpusFormatError(f"abstract for {m.group(1)} inside document {doc.doc_id}", lineno)
            if doc.abstract is not None:
                raise CorpusFormatError(f"second abstract line for {doc.doc_id}", lineno)
            doc.abstract = m.group(2)
            continue

        cols = line.split("\t")
        if cols[0] != doc.doc_id:
            raise CorpusFormatError(f"line for {cols[0]!r} inside document {doc.doc_id}", lineno)
        if len(cols) >= 6 and cols[1].isdigit() and cols[2].isdigit():
            doc.annotations.append(
                (lineno, int(cols[1]), int(cols[2]), cols[3], cols[4], cols[5].split("|"))
            )
        elif len(cols) >= 4 and not cols[1].isdigit():
            ids = [c for c in cols[2:] if c]
            if len(ids) < 2:
                raise CorpusFormatError("relation line needs at least 2 identifiers", lineno)
            doc.relations.append((lineno, cols[1], ids))
        else:
            raise CorpusFormatError(f"cannot parse line with {len(cols)} columns: {line[:60]!r}", lineno)

    if doc is not None:
        yield doc.build()


def read_pubtator(lines: Iterable[str]) -> list[AnnotatedDocument]:
    return list(iter_pubtator(lines))


def write_pubtator(docs: Iterable[AnnotatedDocument], out: TextIO) -> None:
    """Write documents so that :func:`read_pubtator` reads them back unchanged.

    The first sentence span becomes the title when it is followed by a single
    space; otherwise the whole text is written as the title.
    """
    for doc in docs:
        title, abstract = doc.text, ""
        if doc.sentence_spans and doc.sentence_spans[0][0] == 0:
            end = doc.sentence_spans[0][1]
            if doc.text[end:end + 1] == " " and end + 1 < len(doc.text):
                title, abstract = doc.text[:end], doc.text[end + 1:]
        out.write(f"{doc.doc_id}|t|{title}\n{doc.doc_id}|a|{abstract}\n")

        ids = {}
        for n, ent in enumerate(doc.entities):
            ident = ent.entity_id or f"-1#{n}"
            ids.setdefault(ent, ident)
            ident_col = "-1" if ident.startswith("-1#") else ident
            for m in ent.mentions:
                out.write(f"{doc.doc_id}\t{m.start}\t{m.end}\t{m.text}\t{ent.entity_type}\t{ident_col}\n")
        for rel in doc.relations:
            cols = [doc.doc_id, rel.relation_type, *(ids[e] for e in rel.entities)]
            out.write("\t".join(cols) + "\n")
        out.write("\n")


# ---------------------------------------------------------------- DocRED

def docred_document(rec: dict[str, Any], index: int = 0) -> AnnotatedDocument:
    """Convert one DocRED record (``sents`` / ``vertexSet`` / ``labels``)."""
    doc_id = str(rec.get("title", index))
    sents = rec["sents"]

    token_spans: list[list[tuple[int, int]]] = []
    sentence_spans = []
    pos = 0
    pieces = []
    for s, tokens in enumerate(sents):
        if s:
            pos += 1
        sent_start = pos
        spans = []
        for t, tok in enumerate(tokens):
            if t:
                pos += 1
            spans.append((pos, pos + len(tok)))
            pos += len(tok)
        token_spans.append(spans)
        sentence_spans.append((sent_start, pos))
        pieces.append(" ".join(tokens))
    text = " ".join(pieces)

    entities = []
    for v, vertex in enumerate(rec["vertexSet"]):
        mentions = []
        for m in vertex:
            sid = m["sent_id"]
            first, last = m["pos"][0], m["pos"][1] - 1
            try:
                start = token_spans[sid][first][0]
                end = token_spans[sid][last][1]
            except IndexError:
                raise CorpusFormatError(f"{doc_id}: vertex {v} mention {m.get('name')!r} has bad position") from None
            mentions.append(Mention(text[start:end], start, end, sid))
        if not mentions:
            raise CorpusFormatError(f"{doc_id}: vertex {v} has no mentions")
        entities.append(Entity(tuple(mentions), vertex[0]["type"], str(v)))

    relations: dict[RelationInstance, None] = {}
    for label in rec.get("labels", []):
        h, t = label["h"], label["t"]
        for idx in (h, t):
            if not 0 <= idx < len(entities):
                raise CorpusFormatError(f"{doc_id}: label {label['r']} refers to missing vertex {idx}")
        relations.setdefault(RelationInstance((entities[h], entities[t]), label["r"]))

    return AnnotatedDocument(doc_id, text, tuple(sentence_spans), tuple(entities), tuple(relations))


def read_docred(records: Iterable[dict[str, Any]]) -> list[AnnotatedDocument]:
    return [docred_document(rec, i) for i, rec in enumerate(records)]


# ---------------------------------------------------------------- dispatch

FORMATS = ("pubtator", "docred", "records")


def detect_format(path: str | Path) -> str:
    suffix = Path(path).suffix.lower()
    if suffix == ".json":
        return "docred"
    if suffix == ".jsonl":
        return "records"
    return "pubtator"


def iter_corpus(path: str | Path, fmt: Optional[str] = None) -> Iterator[AnnotatedDocument]:
    fmt = fmt or detect_format(path)
    if fmt == "pubtator":
        with open(path, encoding="utf-8") as fh:
            yield from iter_pubtator(fh)
    elif fmt == "docred":
        with open(path, encoding="utf-8") as fh:
            try:
                data = json.load(fh)
            except json.JSONDecodeError as e:
                raise CorpusFormatError(f"invalid JSON ({e.msg})", e.lineno) from None
        for i, rec in enumerate(data):
            try:
                yield docred_document(rec, i)
            except KeyError as e:
                raise CorpusFormatError(f"DocRED record {i} is missing field {e.args[0]!r}") from None
    elif fmt == "records":
        with open(path, encoding="utf-8") as fh:
            yield from read_records(fh)
    else:
        raise ValueError(f"unknown corpus format {fmt!r}; expected one of {', '.join(FORMATS)}")


# ---------------------------------------------------------------- statistics

class SentenceDefinition(enum.Enum):
    # intra iff one sentence holds a mention of every entity
    ANY_SENTENCE = "any-sentence"
    # intra iff all mentions of all entities sit in one sentence
    ALL_MENTIONS = "all-mentions"


def is_intersentence(doc: AnnotatedDocument, rel: RelationInstance, definition: SentenceDefinition) -> bool:
    per_entity = []
    for ent in rel.entities:
        sents = {doc.sentence_of(m) for m in ent.mentions}
        sents.discard(None)
        per_entity.append(sents)
    if definition is SentenceDefinition.ANY_SENTENCE:
        return not set.intersection(*per_entity)
    return len(set.union(*per_entity)) != 1 or any(not s for s in per_entity)


def intersentence_counts(
    docs: Iterable[AnnotatedDocument], definition: SentenceDefinition | str
) -> tuple[int, int]:
    """(inter-sentence relations, total relations) over documents with sentence spans."""
    definition = SentenceDefinition(definition)
    inter = total = 0
    for doc in docs:
        if not doc.sentence_spans:
            logger.warning("%s: no sentence spans, skipped", doc.doc_id)
            continue
        for rel in doc.relations:
            total += 1
            inter += is_intersentence(doc, rel, definition)
    return inter, total


def intersentence_fraction(docs: Iterable[AnnotatedDocument], definition: SentenceDefinition | str) -> float:
    inter, total = intersentence_counts(docs, definition)
    return inter / total if total else 0.0
