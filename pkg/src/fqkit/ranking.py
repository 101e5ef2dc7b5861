"""Candidate scoring and per-sample ranking.

Scorers map (dialog context, candidate text) to a relevance score;
only the ordering feeds evaluation. Ties break by ascending
candidate_id so repeated runs produce identical rankings, and
unscorable candidates sink to the bottom instead of being dropped
(the valid candidate must stay rankable).
"""

from __future__ import annotations

from dataclasses import dataclass

from .corpus import Candidate, DialogContext, Sample, VALID_LABEL
from .embeddings import SentenceVectorTable, VectorStore, cosine, embed_mean
from .index import DEFAULT_B, DEFAULT_K1, BankDocument, QuestionBank, build_index
from .jsonl import iter_jsonl


class ScorerSkip(Exception):
    """A candidate this scorer cannot score; it is ranked last and flagged."""


class MissingScoresError(ValueError):
    """External score file does not cover every (sample_id, candidate_id)."""

    def __init__(self, missing: list[tuple[str, str]]):
        self.missing = missing
        preview = ", ".join(f"{s}/{c}" for s, c in missing[:10])
        more = "" if len(missing) <= 10 else f" (+{len(missing) - 10} more)"
        super().__init__(f"missing scores for: {preview}{more}")


class Scorer:
    name = "scorer"

    def prepare(self, sample: Sample) -> None:
        """Per-sample hook (e.g. building a micro-index); default no-op."""

    def score(self, context: DialogContext, candidate_text: str) -> float:
        raise NotImplementedError

    def score_candidate(self, sample: Sample, candidate: Candidate) -> float:
        return self.score(sample.context, candidate.text)


@dataclass
class RankedCandidate:
    candidate_id: str
    label: str
    score: float | None
    skipped: bool = False


@dataclass
class RankedList:
    sample_id: str
    entries: list[RankedCandidate]
    rank_of_valid: int | None

    def record(self) -> dict:
        return {
            "sample_id": self.sample_id,
            "ranked": [
                {"candidate_id": e.candidate_id, "label": e.label, "score": e.score}
                for e in self.entries
            ],
            "rank_of_valid": self.rank_of_valid,
        }


def ranked_list_from_record(obj: dict) -> RankedList:
    entries = [
        RankedCandidate(
            candidate_id=e["candidate_id"],
            label=e["label"],
            score=e["score"],
            skipped=e["score"] is None,
        )
        for e in obj["ranked"]
    ]
    return RankedList(obj["sample_id"], entries, obj.get("rank_of_valid"))


def rank(sample: Sample, scorer: Scorer) -> RankedList:
    """Scores every candidate once; descending order, ties by candidate_id."""
    scorer.prepare(sample)
    scored: list[RankedCandidate] = []
    skipped: list[RankedCandidate] = []
    for cand in sample.candidates:
        try:
            value = float(scorer.score_candidate(sample, cand))
        except ScorerSkip:
            skipped.append(RankedCandidate(cand.candidate_id, cand.label, None, True))
            continue
        scored.append(RankedCandidate(cand.candidate_id, cand.label, value))
    scored.sort(key=lambda e: (-e.score, e.candidate_id))
    skipped.sort(key=lambda e: e.candidate_id)
    entries = scored + skipped
    rank_of_valid = None
    for position, entry in enumerate(entries, start=1):
        if entry.label == VALID_LABEL:
            rank_of_valid = position
            break
    return RankedList(sample.sample_id, entries, rank_of_valid)


def rank_all(samples, scorer: Scorer) -> list[RankedList]:
    return [rank(sample, scorer) for sample in samples]


class CosineScorer(Scorer):
    """Mean-pooled word-vector cosine between the flattened context and the candidate."""

    name = "cosine"

    def __init__(self, store: VectorStore, max_answer_tokens: int | None = 64):
        self.store = store
        self.max_answer_tokens = max_answer_tokens
        self._context_vector = None

    def prepare(self, sample: Sample) -> None:
        text = sample.context.joined_text(self.max_answer_tokens)
        self._context_vector = embed_mean(text, self.store).vector

    def score(self, context: DialogContext, candidate_text: str) -> float:
        ctx_vec = embed_mean(context.joined_text(self.max_answer_tokens), self.store).vector
        return cosine(ctx_vec, embed_mean(candidate_text, self.store).vector)

    def score_candidate(self, sample: Sample, candidate: Candidate) -> float:
        # prepare() pooled the context once per sample
        return cosine(
            self._context_vector, embed_mean(candidate.text, self.store).vector
        )


class SentenceVectorScorer(Scorer):
    """Cosine over imported sentence vectors; unseen texts raise ScorerSkip."""

    name = "sentence-import"

    def __init__(self, table: SentenceVectorTable, max_answer_tokens: int | None = 64):
        self.table = table
        self.max_answer_tokens = max_answer_tokens

    def score(self, context: DialogContext, candidate_text: str) -> float:
        ctx_vec = self.table.lookup(context.joined_text(self.max_answer_tokens))
        cand_vec = self.table.lookup(candidate_text)
        if ctx_vec is None or cand_vec is None:
            raise ScorerSkip("missing imported sentence vector")
        return cosine(ctx_vec, cand_vec)


class Bm25Scorer(Scorer):
    """Lexical baseline: BM25 over a per-sample micro-index of the candidates.

    The query is the current question followed by the history questions.
    """

    name = "bm25"

    def __init__(self, k1: float = DEFAULT_K1, b: float = DEFAULT_B):
        self.k1 = k1
        self.b = b
        self._index = None
        self._query = ""

    def prepare(self, sample: Sample) -> None:
        bank = QuestionBank(
            [BankDocument(c.candidate_id, c.text) for c in sample.candidates]
        )
        self._index = build_index(bank)
        history_questions = [q for q, _ in sample.context.history]
        self._query = " ".join([sample.context.current_question] + history_questions)

    def score_candidate(self, sample: Sample, candidate: Candidate) -> float:
        return self._index.bm25_score(
            self._query, candidate.candidate_id, k1=self.k1, b=self.b
        )

    def score(self, context: DialogContext, candidate_text: str) -> float:
        raise NotImplementedError("bm25 scorer works per sample; use score_candidate")


class ExternalScorer(Scorer):
    """Lookup-only scorer over an imported score file (scores in [0, 1])."""

    name = "external"

    def __init__(self, scores: dict[tuple[str, str], float]):
        for (sample_id, candidate_id), value in scores.items():
            if not 0.0 <= value <= 1.0:
                raise ValueError(
                    f"score out of range [0,1] for {sample_id}/{candidate_id}: {value}"
                )
        self.scores = scores

    @classmethod
    def from_file(cls, path: str) -> "ExternalScorer":
        scores: dict[tuple[str, str], float] = {}
        for rec in iter_jsonl(path):
            scores[(str(rec["sample_id"]), str(rec["candidate_id"]))] = float(rec["score"])
        return cls(scores)

    def validate_coverage(self, samples) -> list[tuple[str, str]]:
        """Missing (sample_id, candidate_id) pairs, in dataset order."""
        missing = []
        for sample in samples:
            for cand in sample.candidates:
                if (sample.sample_id, cand.candidate_id) not in self.scores:
                    missing.append((sample.sample_id, cand.candidate_id))
        return missing

    def score_candidate(self, sample: Sample, candidate: Candidate) -> float:
        key = (sample.sample_id, candidate.candidate_id)
        if key not in self.scores:
            raise MissingScoresError([key])
        return self.scores[key]

    def score(self, context: DialogContext, candidate_text: str) -> float:
        raise NotImplementedError("external scorer is keyed by ids; use score_candidate")


def write_ranked(path: str, ranked_lists) -> None:
    from .jsonl import write_jsonl

    write_jsonl(path, (rl.record() for rl in ranked_lists))


def read_ranked(path: str) -> list[RankedList]:
    return [ranked_list_from_record(rec) for rec in iter_jsonl(path)]
