import json
import os

import pytest

from fqkit.cli import main
from fqkit.corpus import conversation_record, read_samples
from fqkit.jsonl import read_jsonl, write_jsonl


@pytest.fixture
def fixture_dir(tmp_path, godel_conversation, ronaldo_conversation):
    """Corpus plus every generator resource, on disk."""
    corpus = tmp_path / "corpus.jsonl"
    write_jsonl(
        str(corpus),
        [conversation_record(c) for c in (godel_conversation, ronaldo_conversation)],
    )
    catalog = tmp_path / "catalog.tsv"
    catalog.write_text("Kurt Gödel\tPERSON\nCristiano Ronaldo\tPERSON\n", encoding="utf-8")
    first = tmp_path / "first.txt"
    first.write_text("John\nMary\n", encoding="utf-8")
    last = tmp_path / "last.txt"
    last.write_text("Houston\nSmith\n", encoding="utf-8")
    paraphrases = tmp_path / "paraphrases.jsonl"
    write_jsonl(
        str(paraphrases),
        [
            {
                "question": "Where did Kurt Gödel go to school?",
                "paraphrase": "Which school did Kurt Gödel attend?",
            }
        ],
    )
    homophones = tmp_path / "homophones.txt"
    homophones.write_text("curt\ncart\n", encoding="utf-8")
    return tmp_path


def _generate(fixture_dir, out_name="out", extra=()):
    out_dir = fixture_dir / out_name
    code = main(
        [
            "generate",
            "--corpus", str(fixture_dir / "corpus.jsonl"),
            "--out-dir", str(out_dir),
            "--seed", "42",
            "--catalog", str(fixture_dir / "catalog.tsv"),
            "--first-names", str(fixture_dir / "first.txt"),
            "--last-names", str(fixture_dir / "last.txt"),
            "--paraphrases", str(fixture_dir / "paraphrases.jsonl"),
            "--homophone-lexicon", str(fixture_dir / "homophones.txt"),
            "--entity-swap-scope", "all_context_questions",
            *extra,
        ]
    )
    assert code == 0
    return out_dir


def test_generate_outputs(fixture_dir, capsys):
    out_dir = _generate(fixture_dir)
    for name in ("dataset.jsonl", "audit.jsonl", "stats.txt", "stats.json"):
        assert (out_dir / name).exists()
    samples = read_samples(str(out_dir / "dataset.jsonl"))
    assert len(samples) == 4  # T=5 plus a single-turn conversation
    stats = json.loads((out_dir / "stats.json").read_text())
    assert stats["dialogs"] == 2
    assert stats["turns"] == 6
    table = capsys.readouterr().out
    assert "Duplication of dialog history" in table


def test_generate_rerun_byte_identical(fixture_dir):
    first = _generate(fixture_dir, "out1")
    second = _generate(fixture_dir, "out2")
    for name in ("dataset.jsonl", "audit.jsonl", "stats.txt", "stats.json"):
        assert (first / name).read_bytes() == (second / name).read_bytes()


def test_generate_missing_catalog_is_startup_error(fixture_dir, capsys):
    code = main(
        [
            "generate",
            "--corpus", str(fixture_dir / "corpus.jsonl"),
            "--out-dir", str(fixture_dir / "nocat"),
            "--seed", "1",
        ]
    )
    assert code == 1
    assert "catalog" in capsys.readouterr().err


def test_generate_parse_errors_reported(fixture_dir):
    bad = fixture_dir / "bad.jsonl"
    good_line = (fixture_dir / "corpus.jsonl").read_text().splitlines()[0]
    bad.write_text(good_line + "\n{broken\n", encoding="utf-8")
    out_dir = fixture_dir / "outbad"
    code = main(
        [
            "generate",
            "--corpus", str(bad),
            "--out-dir", str(out_dir),
            "--seed", "1",
            "--catalog", str(fixture_dir / "catalog.tsv"),
            "--disable", "partial_entity",
            "--disable", "paraphrase",
            "--disable", "asr_error",
        ]
    )
    assert code == 0
    errors = read_jsonl(str(out_dir / "parse_errors.jsonl"))
    assert errors[0]["line"] == 2


def test_export_then_oracle_scores_round_trip(fixture_dir, tmp_path, capsys):
    out_dir = _generate(fixture_dir)
    dataset = str(out_dir / "dataset.jsonl")
    exchange = str(tmp_path / "exchange.jsonl")
    assert main(["export-scoring", "--dataset", dataset, "--out", exchange]) == 0

    records = read_jsonl(exchange)
    samples = read_samples(dataset)
    assert len(records) == sum(len(s.candidates) for s in samples)
    assert all("label" in r for r in records)

    # oracle scores: 1 for valid, 0 otherwise
    scores = str(tmp_path / "scores.jsonl")
    write_jsonl(
        str(scores),
        [
            {
                "sample_id": r["sample_id"],
                "candidate_id": r["candidate_id"],
                "score": 1.0 if r["label"] == "valid" else 0.0,
            }
            for r in records
        ],
    )
    assert main(["import-scores", "--dataset", dataset, "--scores", scores]) == 0

    ranked = str(tmp_path / "ranked.jsonl")
    assert main(
        ["rank", "--dataset", dataset, "--scorer", "external", "--scores", scores,
         "--out", ranked]
    ) == 0
    eval_dir = str(tmp_path / "eval")
    assert main(["eval", "--ranked", ranked, "--out-dir", eval_dir]) == 0
    summary = read_jsonl(os.path.join(eval_dir, "report.jsonl"))[0]
    assert summary["mrr"] == 1.0
    assert summary["hit_ratio"]["1"] == 100.0
    for name in ("report.txt", "histograms.csv", "histograms.png"):
        assert os.path.exists(os.path.join(eval_dir, name))


def test_export_blind_omits_label(fixture_dir, tmp_path):
    out_dir = _generate(fixture_dir)
    exchange = str(tmp_path / "exchange.jsonl")
    main(
        ["export-scoring", "--dataset", str(out_dir / "dataset.jsonl"), "--out", exchange,
         "--blind"]
    )
    assert all("label" not in r for r in read_jsonl(exchange))


def test_export_joined_text_structure(fixture_dir, tmp_path):
    out_dir = _generate(fixture_dir)
    exchange = str(tmp_path / "exchange.jsonl")
    main(["export-scoring", "--dataset", str(out_dir / "dataset.jsonl"), "--out", exchange])
    records = [r for r in read_jsonl(exchange) if r["sample_id"] == "godel:4"]
    assert records
    context_questions = [
        "Where was Kurt Gödel born?",
        "When was Kurt Gödel born?",
        "What was Kurt Gödel's home life like?",
        "Where did Kurt Gödel go to school?",
    ]
    answers = ["Brunn, Austria-Hungary", "April 28, 1906", "ethnic German family"]
    for rec in records:
        joined = rec["joined_text"]
        for question in context_questions:
            assert question in joined
        for answer in answers:
            assert answer in joined
        # separator tokens, then the candidate last
        assert joined.count("[SEP]") >= 8
        assert joined.rsplit(" [SEP] ", 1)[1]


def test_import_scores_missing_pair_fails(fixture_dir, tmp_path, capsys):
    out_dir = _generate(fixture_dir)
    dataset = str(out_dir / "dataset.jsonl")
    samples = read_samples(dataset)
    rows = [
        {"sample_id": s.sample_id, "candidate_id": c.candidate_id, "score": 0.5}
        for s in samples
        for c in s.candidates
    ]
    dropped = rows.pop(3)
    scores = str(tmp_path / "scores.jsonl")
    write_jsonl(scores, rows)
    code = main(["import-scores", "--dataset", dataset, "--scores", scores])
    assert code == 1
    err = capsys.readouterr().err
    assert f"{dropped['sample_id']}/{dropped['candidate_id']}" in err


def test_import_scores_out_of_range_fails(fixture_dir, tmp_path, capsys):
    out_dir = _generate(fixture_dir)
    dataset = str(out_dir / "dataset.jsonl")
    scores = str(tmp_path / "scores.jsonl")
    write_jsonl(scores, [{"sample_id": "godel:1", "candidate_id": "c00", "score": 2.0}])
    assert main(["import-scores", "--dataset", dataset, "--scores", scores]) == 1
    assert "out of range" in capsys.readouterr().err


def test_index_and_search_cli(fixture_dir, tmp_path, capsys):
    bank = str(tmp_path / "bank.jsonl")
    write_jsonl(
        bank,
        [
            {"doc_id": "d1", "text": "where was kurt godel born", "conversation_id": "a"},
            {"doc_id": "d2", "text": "capital of france", "conversation_id": "b"},
        ],
    )
    index_path = str(tmp_path / "index.jsonl")
    assert main(["index", "--bank", bank, "--out", index_path]) == 0
    capsys.readouterr()
    assert main(["search", "--index", index_path, "--query", "kurt godel", "--k", "5"]) == 0
    out = capsys.readouterr().out.strip().splitlines()
    assert out and out[0].startswith("d1\t")


def test_rank_cosine_via_cli(fixture_dir, tmp_path):
    out_dir = _generate(fixture_dir)
    vectors = tmp_path / "vectors.txt"
    vectors.write_text(
        "kurt 1.0 0.0\ngödel 0.0 1.0\nwhere 0.5 0.5\n", encoding="utf-8"
    )
    ranked = str(tmp_path / "ranked.jsonl")
    code = main(
        ["rank", "--dataset", str(out_dir / "dataset.jsonl"), "--scorer", "cosine",
         "--vectors", str(vectors), "--out", ranked]
    )
    assert code == 0
    rows = read_jsonl(ranked)
    assert len(rows) == 4
    assert all(r["rank_of_valid"] >= 1 for r in rows)


def test_stats_cli(fixture_dir, capsys):
    out_dir = _generate(fixture_dir)
    code = main(
        ["stats", "--corpus", str(fixture_dir / "corpus.jsonl"),
         "--dataset", str(out_dir / "dataset.jsonl")]
    )
    assert code == 0
    out = capsys.readouterr().out
    assert "Random utterance" in out
    assert "Paraphrase" in out


def test_eval_rank_based_only_without_unit_scores(fixture_dir, tmp_path, capsys):
    out_dir = _generate(fixture_dir)
    ranked = str(tmp_path / "ranked.jsonl")
    assert main(
        ["rank", "--dataset", str(out_dir / "dataset.jsonl"), "--scorer", "bm25",
         "--out", ranked]
    ) == 0
    eval_dir = str(tmp_path / "eval")
    assert main(["eval", "--ranked", ranked, "--out-dir", eval_dir]) == 0
    assert not os.path.exists(os.path.join(eval_dir, "histograms.csv"))
    assert "rank-based" in (capsys.readouterr().out)


def test_search_default_depth_is_twenty():
    from fqkit.cli import build_parser

    args = build_parser().parse_args(["search", "--index", "i", "--query", "q"])
    assert args.k == 20


def test_eval_thresholds_flag(fixture_dir, tmp_path):
    out_dir = _generate(fixture_dir)
    dataset = str(out_dir / "dataset.jsonl")
    exchange = str(tmp_path / "exchange.jsonl")
    main(["export-scoring", "--dataset", dataset, "--out", exchange])
    scores = str(tmp_path / "scores.jsonl")
    write_jsonl(
        scores,
        [
            {"sample_id": r["sample_id"], "candidate_id": r["candidate_id"],
             "score": 0.9 if r["label"] == "valid" else 0.3}
            for r in read_jsonl(exchange)
        ],
    )
    ranked = str(tmp_path / "ranked.jsonl")
    main(["rank", "--dataset", dataset, "--scorer", "external", "--scores", scores,
          "--out", ranked])
    eval_dir = str(tmp_path / "eval")
    assert main(
        ["eval", "--ranked", ranked, "--out-dir", eval_dir,
         "--thresholds", "0.25", "0.35", "--no-figures"]
    ) == 0
    rows = read_jsonl(os.path.join(eval_dir, "report.jsonl"))
    assert rows[0]["theta_low"] == 0.25
    by_label = {r["label"]: r for r in rows[1:]}
    # every confounder sits at 0.3: above 0.25, not above 0.35
    for label, row in by_label.items():
        if label != "valid":
            assert row["fraction_below"] == 0.0
            assert row["fraction_above"] == 0.0


def test_unknown_generator_rejected(fixture_dir, capsys):
    code = main(
        [
            "generate",
            "--corpus", str(fixture_dir / "corpus.jsonl"),
            "--out-dir", str(fixture_dir / "x"),
            "--seed", "1",
            "--disable", "nonsense",
        ]
    )
    assert code == 1
    assert "unknown generator" in capsys.readouterr().err
