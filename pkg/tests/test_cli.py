import json
import subprocess
import sys

import pytest

from premiseguard import cli
from premiseguard.casestudy import QUESTION
from premiseguard.logiform import extraction_prompt
from premiseguard.synthetic import bundled_path

SYN = bundled_path("synthetic")
CASE = bundled_path("case_study")


def run(argv, capsys):
    code = cli.main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def scripted(data=SYN):
    return ["--backend", "scripted", "--transcripts", data / "transcripts.jsonl", "--kg", data / "kg.jsonl"]


def test_help_lists_defaults():
    parser = cli.build_parser()
    sub = next(a for a in parser._actions if a.dest == "command")
    text = " ".join(sub.choices["eval-mitigate"].format_help().split())
    for frag in ("--retriever", "(default: embedding)", "--lf-mode", "(default: both)", "--k ", "(default: 1)",
                 "--edge-cost", "(default: 0.5)", "--k-nodes", "(default: 4)", "--candidate-cap", "(default: 20)",
                 "--votes", "(default: 3)", "--vote-temperature", "(default: 0.7)", "all-roberta-large-v1",
                 "PG_API_KEY", "PG_CACHE_DIR", "--verbatim-paper-prompts"):
        assert frag in text, frag
    assert set(sub.choices) == {"index", "extract-lf", "detect", "answer", "eval-detect", "eval-mitigate",
                                "ablate", "ttest"}


def test_help_runs_for_every_command():
    for name in ("index", "extract-lf", "detect", "answer", "eval-detect", "eval-mitigate", "ablate", "ttest"):
        r = subprocess.run([sys.executable, "-m", "premiseguard.cli", name, "--help"], capture_output=True,
                           text=True)
        assert r.returncode == 0 and "usage" in r.stdout


def _args(argv):
    return cli.build_parser().parse_args(argv)


def test_precedence_flag_env_file(tmp_path):
    cfg = tmp_path / "pg.ini"
    cfg.write_text("[premiseguard]\nk = 3\ncache_dir = /from/file\nchat-model = file-model\n", encoding="utf-8")
    base = ["eval-detect", "--config", str(cfg)]
    r = cli.resolve(_args(base), env={})
    assert (r["k"], r["cache_dir"], r["chat_model"]) == (3, "/from/file", "file-model")
    r = cli.resolve(_args(base), env={"PG_CACHE_DIR": "/from/env"})
    assert r["cache_dir"] == "/from/env"
    r = cli.resolve(_args(base + ["--cache-dir", "/from/flag", "--k", "5"]), env={"PG_CACHE_DIR": "/from/env"})
    assert (r["cache_dir"], r["k"]) == ("/from/flag", 5)
    assert cli.resolve(_args(["eval-detect"]), env={})["k"] == 1


def test_bad_config_values(tmp_path, capsys):
    cfg = tmp_path / "pg.ini"
    cfg.write_text("[premiseguard]\nk = many\n", encoding="utf-8")
    assert run(["eval-detect", "--config", cfg], capsys)[0] == 2
    cfg.write_text("[premiseguard]\nbogus = 1\n", encoding="utf-8")
    assert run(["eval-detect", "--config", cfg], capsys)[0] == 2
    assert run(["eval-detect", "--config", tmp_path / "missing.ini"], capsys)[0] == 2
    assert run(["detect", "--backend", "http", "Q"], capsys)[0] == 2
    assert run(["detect", "--retriever", "direct", "--lf-mode", "retrieval_only", "--backend", "oracle", "Q"],
               capsys)[0] == 2
    code, _, err = run(["index", tmp_path / "nope.jsonl", tmp_path / "i.json"], capsys)
    assert code == 2 and "not found" in err


def test_index_command(tmp_path, capsys):
    kg = tmp_path / "kg.jsonl"
    kg.write_text("".join(json.dumps({"subject": s, "relation": "r", "object": o}) + "\n"
                          for s, o in [("a", "b"), ("b", "c"), ("c", "d")]), encoding="utf-8")
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert run(["index", kg, a], capsys)[0] == 0
    assert run(["index", kg, b], capsys)[0] == 0
    assert a.read_bytes() == b.read_bytes()
    doc = json.loads(a.read_text())
    assert len(doc["triple_vectors"]) == 3 and len(doc["entity_vectors"]) == 4


def test_detect_case_study(capsys):
    code, out, _ = run(["detect", *scripted(CASE), QUESTION], capsys)
    assert code == 0
    v = json.loads(out)
    assert v["is_false_premise"] is True
    assert v["evidence"]["triples"] == [["The Dark Knight", "award received", "81st Academy Awards"]]


def test_detect_with_prebuilt_index(tmp_path, capsys):
    idx = tmp_path / "idx.json"
    assert run(["index", CASE / "kg.jsonl", idx], capsys)[0] == 0
    code, out, _ = run(["detect", *scripted(CASE), "--index", idx, QUESTION], capsys)
    assert code == 0 and json.loads(out)["is_false_premise"]


def test_detect_tpq_oracle(capsys):
    ds = SYN / "records.jsonl"
    rec = next(json.loads(line) for line in open(ds) if '"TPQ"' in line)
    code, out, _ = run(["detect", "--backend", "oracle", "--kg", SYN / "kg.jsonl", "--dataset", ds,
                        rec["question"]], capsys)
    assert code == 0 and json.loads(out)["is_false_premise"] is False


def test_answer_and_extract(capsys):
    code, out, _ = run(["answer", *scripted(CASE), QUESTION], capsys)
    assert code == 0 and json.loads(out)["answer"].startswith("No")
    code, out, _ = run(["extract-lf", *scripted(CASE)[:4], QUESTION], capsys)
    res = json.loads(out)
    assert res["logical_form"] == 'is_a_recipient_of("The Dark Knight", "16th Screen Actors Guild Awards")'
    assert res["triple_query"]["relation"] == "is_a_recipient_of"


def test_eval_detect_outputs(tmp_path, capsys):
    out = tmp_path / "run"
    code, _, _ = run(["eval-detect", *scripted(), "--dataset", SYN / "records.jsonl", "--out", out], capsys)
    assert code == 0
    report = json.loads((out / "report.json").read_text())
    assert report["metrics"]["tpr"] == 1.0 and report["metrics"]["tnr"] == 1.0
    rows = [json.loads(x) for x in (out / "provenance.jsonl").read_text().splitlines()]
    assert len(rows) == 40


def test_partial_failure_exit_code(tmp_path, capsys):
    trans = tmp_path / "t.jsonl"
    # drop the extraction replies for one question so that record fails
    question = json.loads((SYN / "records.jsonl").read_text(encoding="utf-8").splitlines()[0])["question"]
    lines = (SYN / "transcripts.jsonl").read_text(encoding="utf-8").splitlines(keepends=True)
    keep = [x for x in lines if json.loads(x)["prompt"] != extraction_prompt(question)]
    assert len(keep) < len(lines)
    trans.write_text("".join(keep), encoding="utf-8")
    argv = ["eval-detect", "--backend", "scripted", "--transcripts", trans, "--kg", SYN / "kg.jsonl",
            "--dataset", SYN / "records.jsonl", "--out", tmp_path / "run"]
    code, _, _ = run(argv, capsys)
    report = json.loads((tmp_path / "run" / "report.json").read_text())
    assert code == 1 and len(report["failures"]) >= 1


def test_mitigate_ablate_ttest(tmp_path, capsys):
    common = ["--backend", "oracle", "--kg", SYN / "kg.jsonl", "--dataset", SYN / "records.jsonl"]
    assert run(["eval-mitigate", *common, "--strategy", "direct_ask", "--out", tmp_path / "a"], capsys)[0] == 0
    assert run(["eval-mitigate", *common, "--out", tmp_path / "b", "--baseline",
                tmp_path / "a" / "provenance.jsonl"], capsys)[0] == 0
    rep = json.loads((tmp_path / "b" / "report.json").read_text())
    assert rep["accuracy"] == 1.0 and rep["breakdown"]["fpq_improved"] == 20
    code, out, _ = run(["ttest", tmp_path / "a" / "provenance.jsonl", tmp_path / "a" / "provenance.jsonl"], capsys)
    assert code == 0 and json.loads(out)["p"] == 1.0
    code, out, _ = run(["ttest", tmp_path / "a" / "provenance.jsonl", tmp_path / "b" / "provenance.jsonl"], capsys)
    assert json.loads(out)["t"] < 0
    assert run(["ablate", *common, "--mask", "entity1", "--out", tmp_path / "c"], capsys)[0] == 0
    rep = json.loads((tmp_path / "c" / "report.json").read_text())
    assert rep["metrics"]["config"]["mask"] == "entity1"


def test_ttest_hand_files_and_disjoint(tmp_path, capsys):
    a, b, c = tmp_path / "a.jsonl", tmp_path / "b.jsonl", tmp_path / "c.jsonl"
    a.write_text("".join(json.dumps({"id": str(i), "correct": x}) + "\n" for i, x in enumerate([1, 0, 1, 1])))
    b.write_text("".join(json.dumps({"id": str(i), "correct": x}) + "\n" for i, x in enumerate([0, 1, 0, 0])))
    c.write_text(json.dumps({"id": "other", "correct": 1}) + "\n")
    code, out, _ = run(["ttest", a, b], capsys)
    res = json.loads(out)
    assert res["t"] == 1.0 and abs(res["p"] - 0.3910022189) < 1e-6
    code, _, err = run(["ttest", a, c], capsys)
    assert code == 1 and "IdMismatch" in err
