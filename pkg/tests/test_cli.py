import json
import subprocess
import sys

import pytest

from docrel.cli import main


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


class TestLinearize:
    def test_fixture(self, capsys, fixtures):
        code, out, _ = run(capsys, "linearize", fixtures / "two_sentence.pubtator", "--schema", "cdr")
        assert code == 0
        assert out == "aspirin @CHEMICAL@ asthma @DISEASE@ @CID@\n"

    def test_ids_and_empty_target(self, capsys, fixtures):
        code, out, _ = run(capsys, "linearize", fixtures / "cdr_sample.pubtator", "--schema", "cdr", "--ids")
        assert code == 0
        lines = out.splitlines()
        assert [line.split("\t")[0] for line in lines] == ["2000", "2001", "2002"]
        assert lines[2] == "2002\t"

    def test_empty_corpus(self, capsys, tmp_path):
        path = tmp_path / "empty.pubtator"
        path.write_text("")
        code, out, _ = run(capsys, "linearize", path, "--schema", "cdr")
        assert (code, out) == (0, "")

    def test_bad_schema_names_token(self, capsys, tmp_path, fixtures):
        schema = tmp_path / "bad.ini"
        schema.write_text("[entity_types]\nChemical = @X@\nDisease = @X@\n[relation_types]\nCID = @CID@\n")
        code, _, err = run(capsys, "linearize", fixtures / "two_sentence.pubtator", "--schema", schema)
        assert code != 0
        assert "@X@" in err

    def test_schema_required(self, capsys, fixtures):
        code, _, err = run(capsys, "linearize", fixtures / "two_sentence.pubtator")
        assert code == 1
        assert "--schema" in err

    def test_missing_file(self, capsys, tmp_path):
        code, _, err = run(capsys, "linearize", tmp_path / "nope.pubtator", "--schema", "cdr")
        assert code == 2
        assert "nope.pubtator" in err

    def test_malformed_corpus(self, capsys, tmp_path):
        path = tmp_path / "bad.pubtator"
        path.write_text("1|t|x\n1|a|y\n1\tjunk\n")
        code, _, err = run(capsys, "linearize", path, "--schema", "cdr")
        assert code == 1
        assert "line 3" in err

    def test_parallel_matches_serial(self, capsys, fixtures, tmp_path):
        serial = tmp_path / "serial.txt"
        parallel = tmp_path / "parallel.txt"
        corpus = fixtures / "cdr_sample.pubtator"
        assert run(capsys, "linearize", corpus, "--schema", "cdr", "--ids", "-o", serial)[0] == 0
        assert run(capsys, "linearize", corpus, "--schema", "cdr", "--ids", "-o", parallel, "--jobs", "2")[0] == 0
        assert serial.read_text() == parallel.read_text()


class TestParseAndValidate:
    def test_parse(self, capsys, tmp_path, fixtures):
        targets = tmp_path / "t.txt"
        targets.write_text("7\taspirin @CHEMICAL@ asthma @DISEASE@ @CID@\n")
        code, out, _ = run(capsys, "parse", targets, "--schema", "cdr")
        assert code == 0
        assert json.loads(out) == {
            "doc_id": "7",
            "relations": {"CID": [[[["aspirin"], "Chemical"], [["asthma"], "Disease"]]]},
        }

    def test_validate_serialized(self, capsys, tmp_path, fixtures):
        targets = tmp_path / "t.txt"
        run(capsys, "linearize", fixtures / "cdr_sample.pubtator", "--schema", "cdr", "-o", targets)
        code, out, err = run(capsys, "validate", targets, "--schema", "cdr", "--fail-on-invalid")
        assert code == 0
        assert out.split() == ["1", "valid", "2", "valid", "3", "valid"]
        assert "100.0%" in err

    def test_validate_flags_invalid(self, capsys, tmp_path):
        targets = tmp_path / "t.txt"
        targets.write_text("@CHEMICAL@ a\n")
        code, out, _ = run(capsys, "validate", targets, "--schema", "cdr", "--fail-on-invalid")
        assert code == 1
        assert out == "1\tinvalid\n"


class TestHint:
    def test_hint(self, capsys, fixtures):
        code, out, _ = run(capsys, "hint", fixtures / "two_sentence.pubtator", "--schema", "cdr")
        assert code == 0
        assert out == "aspirin @CHEMICAL@ asthma @DISEASE@ @SEP@ aspirin was given. later the patient developed asthma.\n"

    def test_silver_without_entry(self, capsys, fixtures, tmp_path):
        silver = tmp_path / "silver.pubtator"
        silver.write_text("")
        code, out, _ = run(capsys, "hint", fixtures / "two_sentence.pubtator", "--schema", "cdr", "--silver", silver)
        assert code == 0
        assert out.startswith("@SEP@ aspirin")


class TestScore:
    def test_identical_relaxed(self, capsys, fixtures):
        corpus = fixtures / "cdr_sample.pubtator"
        code, out, _ = run(capsys, "score", "--pred", corpus, "--gold", corpus, "--criterion", "relaxed", "--json")
        assert code == 0
        report = json.loads(out)
        assert report["overall"]["f1"] == 1.0
        assert report["criterion"] == "relaxed"

    def test_pipeline(self, capsys, fixtures, tmp_path):
        corpus = fixtures / "cdr_sample.pubtator"
        targets, parsed, report = tmp_path / "t.txt", tmp_path / "p.jsonl", tmp_path / "r.json"
        assert run(capsys, "linearize", corpus, "--schema", "cdr", "--ids", "-o", targets)[0] == 0
        assert run(capsys, "parse", targets, "--schema", "cdr", "-o", parsed)[0] == 0
        code, out, _ = run(capsys, "score", "--pred", parsed, "--gold", corpus, "--schema", "cdr",
                           "--per-type", "--output", report)
        assert code == 0
        assert "CID" in out
        assert json.loads(report.read_text())["overall"] == {
            "tp": 3, "fp": 0, "fn": 0, "precision": 1.0, "recall": 1.0, "f1": 1.0,
        }

    def test_targets_without_ids_align_by_position(self, capsys, fixtures, tmp_path):
        corpus = fixtures / "cdr_sample.pubtator"
        targets = tmp_path / "t.txt"
        run(capsys, "linearize", corpus, "--schema", "cdr", "-o", targets)
        code, out, _ = run(capsys, "score", "--pred", targets, "--gold", corpus, "--schema", "cdr", "--json")
        assert code == 0
        assert json.loads(out)["overall"]["f1"] == 1.0

    def test_targets_need_schema(self, capsys, fixtures, tmp_path):
        targets = tmp_path / "t.txt"
        targets.write_text("\n")
        code, _, err = run(capsys, "score", "--pred", targets, "--gold", fixtures / "two_sentence.pubtator")
        assert code == 1
        assert "--schema" in err

    def test_document_mismatch(self, capsys, fixtures):
        code, _, err = run(capsys, "score", "--pred", fixtures / "two_sentence.pubtator",
                           "--gold", fixtures / "cdr_sample.pubtator")
        assert code == 1
        assert "document ids differ" in err

    def test_hypernym_filter(self, capsys, fixtures, tmp_path):
        pred = tmp_path / "p.jsonl"
        rels = {"CID": [
            [[["carbamazepine"], "Chemical"], [["bradycardia"], "Disease"]],
            [[["carbamazepine"], "Chemical"], [["cardiac dysfunction"], "Disease"]],
        ]}
        pred.write_text(json.dumps({"doc_id": "1728915", "relations": rels}) + "\n")
        gold = fixtures / "pmid1728915.pubtator"
        base = ["score", "--pred", pred, "--gold", gold, "--json"]
        _, out, _ = run(capsys, *base)
        assert json.loads(out)["overall"]["fp"] == 1
        _, out, _ = run(capsys, *base, "--hierarchy", fixtures / "mesh_edges.tsv",
                        "--lexicon", fixtures / "mesh_lexicon.tsv")
        overall = json.loads(out)["overall"]
        assert (overall["tp"], overall["fp"], overall["fn"]) == (1, 0, 1)


class TestStatsAndSchema:
    def test_stats_all_inter(self, capsys, fixtures):
        code, out, _ = run(capsys, "stats", fixtures / "two_sentence.pubtator")
        assert (code, out) == (0, "1.0\n")

    def test_stats_definitions(self, capsys, fixtures):
        corpus = fixtures / "docred_sample.json"
        assert run(capsys, "stats", corpus)[1] == "0.3333\n"
        assert run(capsys, "stats", corpus, "--definition", "all-mentions")[1] == "1.0\n"

    def test_infer_schema(self, capsys, fixtures, tmp_path):
        out_path = tmp_path / "s.ini"
        assert run(capsys, "infer-schema", fixtures / "docred_sample.json", "-o", out_path)[0] == 0
        text = out_path.read_text()
        assert "@P159@" in text and "@ORG@" in text
        code, out, _ = run(capsys, "linearize", fixtures / "docred_sample.json", "--schema", out_path)
        assert code == 0
        assert "@P17@" in out


def test_console_entry_point(fixtures):
    proc = subprocess.run(
        [sys.executable, "-m", "docrel.cli", "stats", str(fixtures / "two_sentence.pubtator")],
        capture_output=True, text=True, check=False,
    )
    assert proc.returncode == 0
    assert proc.stdout == "1.0\n"


def test_help_lists_commands(capsys):
    with pytest.raises(SystemExit) as info:
        main(["--help"])
    assert info.value.code == 0
    out = capsys.readouterr().out
    for cmd in ("linearize", "parse", "validate", "hint", "score", "stats"):
        assert cmd in out
