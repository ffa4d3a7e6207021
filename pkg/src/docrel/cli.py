"""docrel command line: linearize, parse, validate, hint, score, stats."""

from __future__ import annotations

import argparse
import contextlib
import itertools
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from functools import partial
from typing import Callable, Iterable, Iterator, Optional, Sequence, TypeVar

from docrel import corpus
from docrel.constraints import validate_sequence
from docrel.evaluation import Hierarchy, HierarchyError, MatchCriterion, ScoreError, filter_hypernyms, score
from docrel.hinting import build_hint, hint_entities
from docrel.linearize import LinearizationError, classify_tokens, serialize_relations
from docrel.model import AnnotatedDocument, DocumentError
from docrel.parse import ParsedRelation, gold_relations, parse_target_string, relations_from_json, relations_to_json
from docrel.schema import SchemaConfig, SchemaError, load_schema

logger = logging.getLogger("docrel")

T = TypeVar("T")
R = TypeVar("R")

_WINDOW = 256


class CliError(Exception):
    pass


def _pmap(func: Callable[[T], R], items: Iterable[T], jobs: int) -> Iterator[R]:
    """Order-preserving map; with jobs > 1, runs windows of items in a process pool."""
    if jobs <= 1:
        yield from map(func, items)
        return
    it = iter(items)
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        while True:
            window = list(itertools.islice(it, _WINDOW * jobs))
            if not window:
                break
            yield from pool.map(func, window, chunksize=_WINDOW // 4)


@contextlib.contextmanager
def _output(path: Optional[str]):
    if path is None or path == "-":
        yield sys.stdout
    else:
        with open(path, "w", encoding="utf-8") as fh:
            yield fh


def _input_lines(path: str) -> Iterator[str]:
    if path == "-":
        yield from sys.stdin
    else:
        with open(path, encoding="utf-8") as fh:
            yield from fh


def _split_id(line: str) -> tuple[Optional[str], str]:
    line = line.rstrip("\r\n")
    if "\t" in line:
        doc_id, target = line.split("\t", 1)
        return doc_id, target
    return None, line


def _schema(args, required: bool = True) -> SchemaConfig:
    if args.schema is None:
        if required:
            raise CliError(f"{args.command}: --schema is required")
        return SchemaConfig(entity_types={}, relation_types={})
    return load_schema(args.schema)


def _docs(args) -> Iterator[AnnotatedDocument]:
    return corpus.iter_corpus(args.corpus if args.corpus != "-" else "/dev/stdin", args.format)


# ------------------------------------------------------------------ commands

def _linearize_one(doc: AnnotatedDocument, config: SchemaConfig) -> tuple[str, str]:
    try:
        return doc.doc_id, serialize_relations(doc, config)
    except (LinearizationError, SchemaError) as e:
        raise LinearizationError(f"document {doc.doc_id}: {e}") from None


def cmd_linearize(args) -> int:
    config = _schema(args)
    with _output(args.output) as out:
        for doc_id, target in _pmap(partial(_linearize_one, config=config), _docs(args), args.jobs):
            out.write(f"{doc_id}\t{target}\n" if args.ids else f"{target}\n")
    return 0


def _parse_line(line: str, config: SchemaConfig) -> dict:
    doc_id, target = _split_id(line)
    return {"doc_id": doc_id, "relations": relations_to_json(parse_target_string(target, config))}


def cmd_parse(args) -> int:
    config = _schema(args)
    with _output(args.output) as out:
        for rec in _pmap(partial(_parse_line, config=config), _input_lines(args.input), args.jobs):
            out.write(json.dumps(rec, ensure_ascii=False) + "\n")
    return 0


def cmd_validate(args) -> int:
    config = _schema(args)
    n = n_valid = 0
    with _output(args.output) as out:
        for lineno, line in enumerate(_input_lines(args.input), 1):
            doc_id, target = _split_id(line)
            ok = validate_sequence(classify_tokens(target, config), config)
            n += 1
            n_valid += ok
            label = doc_id if doc_id is not None else str(lineno)
            out.write(f"{label}\t{'valid' if ok else 'invalid'}\n")
    pct = 100.0 * n_valid / n if n else 100.0
    print(f"{n_valid}/{n} valid ({pct:.1f}%)", file=sys.stderr)
    return 1 if args.fail_on_invalid and n_valid < n else 0


def _hint_one(doc: AnnotatedDocument, config: SchemaConfig, silver: Optional[dict]) -> tuple[str, str]:
    if silver is None:
        entities = hint_entities(doc)
    else:
        entities = hint_entities(silver.get(doc.doc_id, AnnotatedDocument(doc.doc_id, doc.text)))
    try:
        return doc.doc_id, build_hint(entities, doc.text, config)
    except (LinearizationError, SchemaError) as e:
        raise LinearizationError(f"document {doc.doc_id}: {e}") from None


def cmd_hint(args) -> int:
    config = _schema(args)
    silver = None
    if args.silver:
        silver = {}
        for doc in corpus.iter_corpus(args.silver, args.silver_format):
            # silver hints carry entities only
            silver[doc.doc_id] = AnnotatedDocument(doc.doc_id, doc.text, doc.sentence_spans, doc.entities)
    with _output(args.output) as out:
        for doc_id, hinted in _pmap(partial(_hint_one, config=config, silver=silver), _docs(args), args.jobs):
            out.write(f"{doc_id}\t{hinted}\n" if args.ids else f"{hinted}\n")
    return 0


def cmd_stats(args) -> int:
    inter, total = corpus.intersentence_counts(_docs(args), args.definition)
    fraction = inter / total if total else 0.0
    print(round(fraction, 4))
    logger.info("inter-sentence relations: %d / %d (%s)", inter, total, args.definition)
    return 0


def _load_relations(path: str, fmt: str, config: SchemaConfig, schema_missing: bool) -> tuple[list[Optional[str]], list[list[ParsedRelation]]]:
    """Read per-document relations; returns (doc ids or None, relations)."""
    if fmt == "auto":
        if path.endswith(".jsonl"):
            with open(path, encoding="utf-8") as fh:
                first = next((line for line in fh if line.strip()), "")
            fmt = "records" if first and "text" in json.loads(first) else "parsed"
        elif path.endswith(".json"):
            fmt = "docred"
        elif path.endswith((".pubtator", ".pubtator.txt", ".PubTator.txt")):
            fmt = "pubtator"
        else:
            fmt = "targets"

    ids: list[Optional[str]] = []
    rels: list[list[ParsedRelation]] = []
    if fmt == "parsed":
        for lineno, line in enumerate(_input_lines(path), 1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                ids.append(rec.get("doc_id"))
                rels.append(relations_from_json(rec["relations"], config))
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as e:
                raise CliError(f"{path}:{lineno}: not a parsed-relations record ({e})") from None
    elif fmt == "targets":
        if schema_missing:
            raise CliError(f"{path}: reading target strings requires --schema")
        for line in _input_lines(path):
            doc_id, target = _split_id(line)
            ids.append(doc_id)
            rels.append(parse_target_string(target, config))
    else:
        for doc in corpus.iter_corpus(path, fmt):
            ids.append(doc.doc_id)
            rels.append(gold_relations(doc, config))
    return ids, rels


def cmd_score(args) -> int:
    config = _schema(args, required=False)
    criterion = MatchCriterion(args.criterion, args.threshold)
    schema_missing = args.schema is None
    pred_ids, pred_rels = _load_relations(args.pred, args.pred_format, config, schema_missing)
    gold_ids, gold_rels = _load_relations(args.gold, args.gold_format, config, schema_missing)

    if any(i is None for i in pred_ids) or any(i is None for i in gold_ids):
        # no ids on one side: align documents by position
        if len(pred_ids) != len(gold_ids):
            raise ScoreError(
                f"cannot align by position: {len(pred_ids)} predicted vs {len(gold_ids)} gold documents"
            )
        keys = [str(i) for i in range(len(gold_ids))]
        predicted = dict(zip(keys, pred_rels))
        gold = dict(zip(keys, gold_rels))
    else:
        predicted = _group(pred_ids, pred_rels)
        gold = _group(gold_ids, gold_rels)

    if args.hierarchy:
        hierarchy = Hierarchy.from_files(args.hierarchy, args.lexicon)
        predicted = filter_hypernyms(predicted, gold, hierarchy, criterion)

    report = score(predicted, gold, criterion)
    if args.json:
        print(json.dumps(report.to_dict(), indent=2))
    else:
        print(report.format_table(per_type=args.per_type))
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            json.dump(report.to_dict(), fh, indent=2)
            fh.write("\n")
    return 0


def _group(ids: Sequence[Optional[str]], rels: Sequence[list[ParsedRelation]]) -> dict[str, list[ParsedRelation]]:
    out: dict[str, list[ParsedRelation]] = {}
    for doc_id, rs in zip(ids, rels):
        bucket = out.setdefault(str(doc_id), [])
        bucket.extend(r for r in rs if r not in bucket)
    return out


def cmd_infer_schema(args) -> int:
    entity_types: dict[str, None] = {}
    arities: dict[str, int] = {}
    for doc in _docs(args):
        for ent in doc.entities:
            entity_types.setdefault(ent.entity_type)
        for rel in doc.relations:
            if arities.setdefault(rel.relation_type, rel.arity) != rel.arity:
                raise CliError(f"relation type {rel.relation_type} occurs with arities {arities[rel.relation_type]} and {rel.arity}")
    config = SchemaConfig.from_labels(entity_types, arities)
    with _output(args.output) as out:
        out.write(config.to_ini())
    return 0


# ------------------------------------------------------------------ parser

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="docrel",
        description="Linearize, parse, validate and score document-level relation extraction targets.",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, corpus_input: bool = False, jobs: bool = False):
        p.add_argument("--schema", help="schema file or preset name (cdr, gda, dgm)")
        p.add_argument("--output", "-o", help="output path (default: stdout)")
        if corpus_input:
            p.add_argument("corpus", help="corpus file, or - for stdin")
            p.add_argument("--format", choices=corpus.FORMATS,
                           help="corpus format (default: from extension; .json docred, .jsonl records, else pubtator)")
        if jobs:
            p.add_argument("--jobs", "-j", type=int, default=1, help="worker processes (output order is kept)")

    p = sub.add_parser("linearize", help="write one target string per document")
    common(p, corpus_input=True, jobs=True)
    p.add_argument("--ids", action="store_true", help="prefix each line with '<doc_id>\\t'")
    p.set_defaults(func=cmd_linearize)

    p = sub.add_parser("parse", help="parse target strings into relation records (JSON lines)")
    common(p, jobs=True)
    p.add_argument("input", help="target strings, one per line, optionally '<doc_id>\\t<target>'")
    p.set_defaults(func=cmd_parse)

    p = sub.add_parser("validate", help="check target strings against the decoding automaton")
    common(p)
    p.add_argument("input", help="target strings, one per line")
    p.add_argument("--fail-on-invalid", action="store_true", help="exit 1 if any line is invalid")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("hint", help="write entity-hinted source text, one per document")
    common(p, corpus_input=True, jobs=True)
    p.add_argument("--silver", help="take hint entities from this annotation file instead of the gold ones")
    p.add_argument("--silver-format", choices=corpus.FORMATS)
    p.add_argument("--ids", action="store_true", help="prefix each line with '<doc_id>\\t'")
    p.set_defaults(func=cmd_hint)

    rel_formats = ["auto", "parsed", "targets", *corpus.FORMATS]
    p = sub.add_parser("score", help="micro precision / recall / F1 of predicted relations")
    common(p)
    p.add_argument("--pred", required=True, help="predicted relations")
    p.add_argument("--gold", required=True, help="gold relations")
    p.add_argument("--pred-format", choices=rel_formats, default="auto")
    p.add_argument("--gold-format", choices=rel_formats, default="auto")
    p.add_argument("--criterion", choices=["strict", "relaxed"], default="strict")
    p.add_argument("--threshold", type=float, default=0.5, help="relaxed matching threshold (strict >)")
    p.add_argument("--hierarchy", help="child<TAB>parent edge list for hypernym filtering")
    p.add_argument("--lexicon", help="identifier<TAB>mention lexicon for --hierarchy")
    p.add_argument("--per-type", action="store_true", help="break scores down by relation type")
    p.add_argument("--json", action="store_true", help="print the report as JSON")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("stats", help="fraction of inter-sentence relations")
    common(p, corpus_input=True)
    p.add_argument("--definition", choices=[d.value for d in corpus.SentenceDefinition], default="any-sentence")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("infer-schema", help="write a schema file covering a corpus's types")
    common(p, corpus_input=True)
    p.set_defaults(func=cmd_infer_schema)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        return args.func(args)
    except (CliError, SchemaError, corpus.CorpusFormatError, DocumentError, LinearizationError,
            ScoreError, HierarchyError, ValueError) as e:
        print(f"docrel {args.command}: error: {e}", file=sys.stderr)
        return 1
    except BrokenPipeError:
        return 0
    except OSError as e:
        print(f"docrel {args.command}: error: {e.filename or ''}: {e.strerror}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
