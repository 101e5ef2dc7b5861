"""Command-line entry point wiring the pipeline.

Subcommands: generate, index, search, rank, eval, export-scoring,
import-scores, stats. All file outputs are written atomically and are
byte-identical for fixed inputs, seed, and flags, regardless of the
worker count.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

from . import confounders, corpus, embeddings, evaluation, index, jsonl, pipeline, ranking, report
from .tokenizer import truncate_tokens

logger = logging.getLogger("fqkit")

SEP_TOKEN = "[SEP]"


def _fail(message: str) -> int:
    print(f"error: {message}", file=sys.stderr)
    return 1


def _require_files(*paths: str | None) -> None:
    for path in paths:
        if path is not None and not os.path.exists(path):
            raise FileNotFoundError(f"input not found: {path}")


def _load_config_file(path: str | None) -> dict:
    if path is None:
        return {}
    with open(path, encoding="utf-8") as fh:
        obj = json.load(fh)
    if not isinstance(obj, dict):
        raise ValueError(f"{path}: config must be a JSON object")
    return obj


def _generator_config(args) -> confounders.GeneratorConfig:
    file_cfg = _load_config_file(args.config)
    enabled = set(confounders.GENERATORS)
    for name in file_cfg.get("disable", []) + (args.disable or []):
        if name not in confounders.GENERATORS:
            raise ValueError(f"unknown generator {name!r}")
        enabled.discard(name)
    pick = lambda flag, key, fallback: flag if flag is not None else file_cfg.get(key, fallback)
    return confounders.GeneratorConfig(
        enabled=frozenset(enabled),
        random_question_count=pick(args.random_questions, "random_questions", 3),
        max_entity_swaps_per_sample=pick(args.max_entity_swaps, "max_entity_swaps", 4),
        duplicate_policy=pick(args.duplicate_policy, "duplicate_policy", "all_context_questions"),
        entity_swap_scope=pick(args.entity_swap_scope, "entity_swap_scope", "current"),
        seed=args.seed,
    )


def _homophone_source(args):
    from .phonetics import (
        DatamuseClient,
        LocalHomophones,
        PhoneticLexicon,
        RemoteHomophones,
    )

    local = None
    if args.homophone_lexicon:
        local = LocalHomophones(PhoneticLexicon.from_file(args.homophone_lexicon))
    if args.sounds_like_url:
        client = DatamuseClient(base_url=args.sounds_like_url, cache_dir=args.homophone_cache)
        return RemoteHomophones(client=client, fallback=local)
    return local


def cmd_generate(args) -> int:
    _require_files(
        args.corpus, args.catalog, args.first_names, args.last_names,
        args.paraphrases, args.homophone_lexicon,
    )
    config = _generator_config(args)

    conversations, parse_errors = corpus.read_conversations(args.corpus)
    os.makedirs(args.out_dir, exist_ok=True)
    if parse_errors:
        logger.warning("%d malformed corpus line(s); see parse_errors.jsonl", len(parse_errors))
        jsonl.write_jsonl(
            os.path.join(args.out_dir, "parse_errors.jsonl"),
            ({"line": e.line_no, "message": e.message} for e in parse_errors),
        )

    catalog = None
    if args.catalog:
        from .entity import load_catalog

        catalog = load_catalog(args.catalog)
    lexicon = None
    if args.first_names and args.last_names:
        from .entity import load_name_lexicon

        lexicon = load_name_lexicon(args.first_names, args.last_names)
    if args.paraphrases:
        paraphrases = confounders.FileParaphrases.from_file(args.paraphrases)
    else:
        paraphrases = confounders.RuleParaphrases()
    pool = confounders.QuestionPool.build(conversations, catalog)

    suite = confounders.GeneratorSuite(
        config,
        catalog=catalog,
        lexicon=lexicon,
        paraphrases=paraphrases,
        homophones=_homophone_source(args),
        pool=pool,
    )

    samples, events = pipeline.generate_dataset(
        conversations, suite, config, workers=args.workers
    )

    jsonl.write_jsonl(
        os.path.join(args.out_dir, "dataset.jsonl"),
        (corpus.sample_record(s) for s in samples),
    )
    jsonl.write_jsonl(
        os.path.join(args.out_dir, "audit.jsonl"), (e.record() for e in events)
    )
    stats = report.collect_stats(conversations, samples, fold_partial=args.fold_partial_entity)
    table = report.format_stats_table(stats)
    jsonl.write_text(os.path.join(args.out_dir, "stats.txt"), table)
    jsonl.write_text(
        os.path.join(args.out_dir, "stats.json"),
        json.dumps(report.stats_record(stats), ensure_ascii=False, indent=2) + "\n",
    )
    print(table, end="")
    print(f"wrote {len(samples)} samples to {args.out_dir}")
    return 0


def cmd_index(args) -> int:
    _require_files(args.bank)
    bank = index.load_question_bank(args.bank)
    built = index.build_index(bank)
    index.save_index(built, args.out)
    print(f"indexed {built.doc_count} documents ({len(built.postings)} terms)")
    return 0


def cmd_search(args) -> int:
    _require_files(args.index)
    idx = index.load_index(args.index)
    for doc_id, score in idx.search(args.query, args.k, k1=args.k1, b=args.b):
        print(f"{doc_id}\t{score:.6f}")
    return 0


def _build_scorer(args, samples) -> ranking.Scorer:
    if args.scorer == "cosine":
        if not args.vectors:
            raise ValueError("--vectors is required for the cosine scorer")
        _require_files(args.vectors)
        store = embeddings.load_vectors(args.vectors)
        texts = [s.context.joined_text(args.max_answer_tokens) for s in samples]
        texts += [c.text for s in samples for c in s.candidates]
        coverage = embeddings.vocabulary_coverage(texts, store)
        logger.info("vocabulary coverage: %.4f", coverage)
        return ranking.CosineScorer(store, max_answer_tokens=args.max_answer_tokens)
    if args.scorer == "sentence-import":
        if not args.sentence_vectors:
            raise ValueError("--sentence-vectors is required for sentence-import")
        _require_files(args.sentence_vectors)
        table = embeddings.load_sentence_vectors(args.sentence_vectors)
        return ranking.SentenceVectorScorer(table, max_answer_tokens=args.max_answer_tokens)
    if args.scorer == "bm25":
        return ranking.Bm25Scorer(k1=args.k1, b=args.b)
    if args.scorer == "external":
        if not args.scores:
            raise ValueError("--scores is required for the external scorer")
        _require_files(args.scores)
        scorer = ranking.ExternalScorer.from_file(args.scores)
        missing = scorer.validate_coverage(samples)
        if missing:
            raise ranking.MissingScoresError(missing)
        return scorer
    raise ValueError(f"unknown scorer {args.scorer!r}")


def cmd_rank(args) -> int:
    _require_files(args.dataset)
    samples = corpus.read_samples(args.dataset)
    scorer = _build_scorer(args, samples)
    ranked = ranking.rank_all(samples, scorer)
    ranking.write_ranked(args.out, ranked)
    print(f"ranked {len(ranked)} samples with {scorer.name} -> {args.out}")
    return 0


def cmd_eval(args) -> int:
    _require_files(args.ranked)
    ranked = ranking.read_ranked(args.ranked)
    rep = evaluation.evaluate(
        ranked, ks=tuple(args.k), thresholds=(args.thresholds[0], args.thresholds[1])
    )
    os.makedirs(args.out_dir, exist_ok=True)
    jsonl.write_jsonl(os.path.join(args.out_dir, "report.jsonl"), evaluation.report_records(rep))
    table = report.format_eval_table(rep)
    jsonl.write_text(os.path.join(args.out_dir, "report.txt"), table)
    if rep.per_confounder is not None:
        report.write_histogram_csv(rep, os.path.join(args.out_dir, "histograms.csv"))
        if not args.no_figures:
            report.render_histogram_figure(rep, os.path.join(args.out_dir, "histograms.png"))
    print(table, end="")
    return 0


def _exchange_text(sample: corpus.Sample, candidate_text: str, max_answer_tokens: int) -> str:
    segments = []
    for q, a in sample.context.history:
        segments.append(q)
        if a:
            segments.append(truncate_tokens(a, max_answer_tokens))
    segments.append(sample.context.current_question)
    if sample.context.current_answer:
        segments.append(truncate_tokens(sample.context.current_answer, max_answer_tokens))
    segments.append(candidate_text)
    return f" {SEP_TOKEN} ".join(segments)


def cmd_export_scoring(args) -> int:
    _require_files(args.dataset)
    samples = corpus.read_samples(args.dataset)

    def records():
        for sample in samples:
            for cand in sample.candidates:
                rec = {
                    "sample_id": sample.sample_id,
                    "candidate_id": cand.candidate_id,
                    "joined_text": _exchange_text(sample, cand.text, args.max_answer_tokens),
                }
                if not args.blind:
                    rec["label"] = cand.label
                yield rec

    jsonl.write_jsonl(args.out, records())
    pair_count = sum(len(s.candidates) for s in samples)
    print(f"exported {pair_count} pairs from {len(samples)} samples -> {args.out}")
    return 0


def cmd_import_scores(args) -> int:
    _require_files(args.dataset, args.scores)
    samples = corpus.read_samples(args.dataset)
    scorer = ranking.ExternalScorer.from_file(args.scores)
    missing = scorer.validate_coverage(samples)
    if missing:
        for sample_id, candidate_id in missing[:50]:
            print(f"missing score: {sample_id}/{candidate_id}", file=sys.stderr)
        if len(missing) > 50:
            print(f"... and {len(missing) - 50} more", file=sys.stderr)
        return _fail(f"score file covers {len(scorer.scores)} pairs; {len(missing)} missing")
    known = {
        (s.sample_id, c.candidate_id) for s in samples for c in s.candidates
    }
    extras = [key for key in scorer.scores if key not in known]
    if extras:
        logger.warning("%d score(s) do not match any dataset pair", len(extras))
    print(f"scores valid: {len(known)} pairs covered")
    return 0


def cmd_stats(args) -> int:
    _require_files(args.corpus, args.dataset)
    conversations, _ = corpus.read_conversations(args.corpus)
    samples = corpus.read_samples(args.dataset)
    stats = report.collect_stats(conversations, samples, fold_partial=args.fold_partial_entity)
    print(report.format_stats_table(stats), end="")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fqkit",
        description="Follow-up question dataset synthesis, ranking, and evaluation.",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("generate", help="synthesize samples with typed confounders")
    p.add_argument("--corpus", required=True, help="conversation JSONL")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--config", help="JSON file with generator settings")
    p.add_argument("--catalog", help="entity catalog (surface<TAB>type)")
    p.add_argument("--first-names", help="first-name lexicon, one per line")
    p.add_argument("--last-names", help="last-name lexicon, one per line")
    p.add_argument("--paraphrases", help="paraphrase import JSONL {question, paraphrase}")
    p.add_argument("--homophone-lexicon", help="token list for local homophones")
    p.add_argument("--sounds-like-url", help="Datamuse-style endpoint for remote homophones")
    p.add_argument("--homophone-cache", help="cache directory for remote lookups")
    p.add_argument("--disable", action="append", metavar="GENERATOR",
                   help="disable a generator (repeatable)")
    p.add_argument("--random-questions", type=int, default=None)
    p.add_argument("--max-entity-swaps", type=int, default=None)
    p.add_argument("--duplicate-policy", choices=confounders.DUPLICATE_POLICIES, default=None)
    p.add_argument("--entity-swap-scope", choices=confounders.SWAP_SCOPES, default=None)
    p.add_argument("--fold-partial-entity", action="store_true",
                   help="report partial-entity swaps inside the irrelevant-entity row")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("index", help="build a BM25 index over a question bank")
    p.add_argument("--bank", required=True, help="question bank JSONL {doc_id, text, conversation_id}")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_index)

    p = sub.add_parser("search", help="query a saved index")
    p.add_argument("--index", required=True)
    p.add_argument("--query", required=True)
    p.add_argument("--k", type=int, default=20)
    p.add_argument("--k1", type=float, default=index.DEFAULT_K1)
    p.add_argument("--b", type=float, default=index.DEFAULT_B)
    p.set_defaults(func=cmd_search)

    p = sub.add_parser("rank", help="rank every sample's candidates with a scorer")
    p.add_argument("--dataset", required=True)
    p.add_argument("--scorer", required=True,
                   choices=["cosine", "bm25", "external", "sentence-import"])
    p.add_argument("--vectors", help="word-vector text file (cosine)")
    p.add_argument("--sentence-vectors", help="sentence-vector JSONL (sentence-import)")
    p.add_argument("--scores", help="score JSONL (external)")
    p.add_argument("--out", required=True)
    p.add_argument("--k1", type=float, default=index.DEFAULT_K1)
    p.add_argument("--b", type=float, default=index.DEFAULT_B)
    p.add_argument("--max-answer-tokens", type=int, default=corpus.DEFAULT_MAX_ANSWER_TOKENS)
    p.set_defaults(func=cmd_rank)

    p = sub.add_parser("eval", help="MRR / HitRatio / score distributions")
    p.add_argument("--ranked", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--k", type=int, nargs="+", default=[1, 3])
    p.add_argument("--thresholds", type=float, nargs=2,
                   default=[evaluation.DEFAULT_THETA_LOW, evaluation.DEFAULT_THETA_HIGH])
    p.add_argument("--no-figures", action="store_true", help="skip the histogram PNG")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("export-scoring", help="write the exchange file for external scorers")
    p.add_argument("--dataset", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--blind", action="store_true", help="omit labels")
    p.add_argument("--max-answer-tokens", type=int, default=corpus.DEFAULT_MAX_ANSWER_TOKENS)
    p.set_defaults(func=cmd_export_scoring)

    p = sub.add_parser("import-scores", help="validate an external score file")
    p.add_argument("--dataset", required=True)
    p.add_argument("--scores", required=True)
    p.set_defaults(func=cmd_import_scores)

    p = sub.add_parser("stats", help="dataset accounting table")
    p.add_argument("--corpus", required=True)
    p.add_argument("--dataset", required=True)
    p.add_argument("--fold-partial-entity", action="store_true")
    p.set_defaults(func=cmd_stats)

    return parser


def main(argv=None) -> int:
    logging.basicConfig(
        level=logging.INFO, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr
    )
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError, KeyError) as exc:
        return _fail(str(exc))


if __name__ == "__main__":
    sys.exit(main())
