import pytest

from premiseguard.synthetic import bundled_path, build, check_retrieval, write_bundle


def test_bundle_shape(bundle):
    kg, ds, transcripts = bundle
    assert len(kg) == 60 and len(ds) == 40
    assert sum(r.label == "FPQ" for r in ds) == 20
    assert all(r.hops == 1 for r in ds if r.label == "TPQ")
    assert all(r.hops == 3 for r in ds if r.label == "FPQ")
    assert all("logical_form" in r.meta for r in ds)


def test_build_deterministic():
    assert build(7) == build(7)
    assert build(7) != build(8)


def test_every_form_retrieves_its_own_triple():
    triples, records, paraphrased = build(7)
    check_retrieval(triples, records)
    check_retrieval(triples, paraphrased)


def test_bundled_files_match_generator(tmp_path):
    write_bundle(tmp_path)
    for name in ("kg.jsonl", "records.jsonl", "records_paraphrased.jsonl", "transcripts.jsonl"):
        assert (tmp_path / name).read_bytes() == (bundled_path("synthetic") / name).read_bytes(), name


def test_paraphrase_only_changes_surface():
    _, records, paraphrased = build(7)
    for a, b in zip(records, paraphrased):
        assert a["id"] == b["id"] and a["logical_form"] == b["logical_form"]
        assert a["question"] != b["question"] and "the film" in b["question"]
