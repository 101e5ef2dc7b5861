"""Inverted index with BM25 scoring over a question bank.

Scoring: score(q, d) = sum over query tokens t of
IDF(t) * tf * (k1 + 1) / (tf + k1 * (1 - b + b * dl / avgdl)),
with IDF(t) = ln(1 + (N - df + 0.5) / (df + 0.5)). Repeated query
tokens contribute once per occurrence. Defaults k1=1.2, b=0.75.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass

from .jsonl import iter_jsonl, write_jsonl
from .tokenizer import tokenize

DEFAULT_K1 = 1.2
DEFAULT_B = 0.75

INDEX_FORMAT = "fqkit-index"
INDEX_VERSION = 1


@dataclass
class BankDocument:
    doc_id: str
    text: str
    conversation_id: str = ""


@dataclass
class QuestionBank:
    documents: list[BankDocument]


def load_question_bank(path: str) -> QuestionBank:
    docs = []
    for rec in iter_jsonl(path):
        docs.append(
            BankDocument(
                doc_id=str(rec["doc_id"]),
                text=str(rec["text"]),
                conversation_id=str(rec.get("conversation_id", "")),
            )
        )
    return QuestionBank(docs)


class InvertedIndex:
    """Immutable after build; safe for concurrent searches."""

    def __init__(
        self,
        postings: dict[str, list[tuple[str, int]]],
        doc_lengths: dict[str, int],
    ):
        self.postings = postings
        self.doc_lengths = doc_lengths
        self.doc_count = len(doc_lengths)
        total = sum(doc_lengths.values())
        self.avg_doc_length = total / self.doc_count if self.doc_count else 0.0

    def idf(self, term: str) -> float:
        df = len(self.postings.get(term, ()))
        return math.log(1.0 + (self.doc_count - df + 0.5) / (df + 0.5))

    def term_frequency(self, term: str, doc_id: str) -> int:
        for posted_id, tf in self.postings.get(term, ()):
            if posted_id == doc_id:
                return tf
        return 0

    def bm25_score(
        self, query: str, doc_id: str, k1: float = DEFAULT_K1, b: float = DEFAULT_B
    ) -> float:
        if doc_id not in self.doc_lengths:
            raise KeyError(f"unknown doc_id {doc_id!r}")
        dl = self.doc_lengths[doc_id]
        norm = 1.0 - b + b * (dl / self.avg_doc_length if self.avg_doc_length else 0.0)
        score = 0.0
        for term in tokenize(query):
            tf = self.term_frequency(term, doc_id)
            if tf == 0:
                continue
            score += self.idf(term) * tf * (k1 + 1.0) / (tf + k1 * norm)
        return score

    def search(
        self, query: str, k: int, k1: float = DEFAULT_K1, b: float = DEFAULT_B
    ) -> list[tuple[str, float]]:
        """Top-k (doc_id, score), descending score, ties by ascending doc_id."""
        if k < 1:
            raise ValueError("k must be >= 1")
        scores: dict[str, float] = {}
        query_counts = Counter(tokenize(query))
        for term, count in query_counts.items():
            if term not in self.postings:
                continue
            idf = self.idf(term)
            for doc_id, tf in self.postings[term]:
                dl = self.doc_lengths[doc_id]
                norm = 1.0 - b + b * (
                    dl / self.avg_doc_length if self.avg_doc_length else 0.0
                )
                contribution = idf * tf * (k1 + 1.0) / (tf + k1 * norm)
                scores[doc_id] = scores.get(doc_id, 0.0) + count * contribution
        ranked = sorted(
            ((doc_id, score) for doc_id, score in scores.items() if score > 0.0),
            key=lambda pair: (-pair[1], pair[0]),
        )
        return ranked[:k]


def build_index(bank: QuestionBank) -> InvertedIndex:
    """Postings sorted by doc_id; duplicate doc_ids are a build error."""
    doc_lengths: dict[str, int] = {}
    postings: dict[str, list[tuple[str, int]]] = {}
    for doc in bank.documents:
        if doc.doc_id in doc_lengths:
            raise ValueError(f"duplicate doc_id {doc.doc_id!r}")
        tokens = tokenize(doc.text)
        doc_lengths[doc.doc_id] = len(tokens)
        for term, tf in Counter(tokens).items():
            postings.setdefault(term, []).append((doc.doc_id, tf))
    for term_postings in postings.values():
        term_postings.sort(key=lambda pair: pair[0])
    return InvertedIndex(postings=postings, doc_lengths=doc_lengths)


def save_index(index: InvertedIndex, path: str) -> None:
    def records():
        yield {
            "format": INDEX_FORMAT,
            "version": INDEX_VERSION,
            "doc_count": index.doc_count,
        }
        for doc_id in sorted(index.doc_lengths):
            yield {"record": "doc", "doc_id": doc_id, "length": index.doc_lengths[doc_id]}
        for term in sorted(index.postings):
            yield {
                "record": "term",
                "term": term,
                "postings": [[doc_id, tf] for doc_id, tf in index.postings[term]],
            }

    write_jsonl(path, records())


def load_index(path: str) -> InvertedIndex:
    records = iter_jsonl(path)
    try:
        header = next(records)
    except StopIteration:
        raise ValueError(f"{path}: empty index file") from None
    if header.get("format") != INDEX_FORMAT or header.get("version") != INDEX_VERSION:
        raise ValueError(f"{path}: not a {INDEX_FORMAT} v{INDEX_VERSION} file")
    doc_lengths: dict[str, int] = {}
    postings: dict[str, list[tuple[str, int]]] = {}
    for rec in records:
        if rec.get("record") == "doc":
            doc_lengths[rec["doc_id"]] = int(rec["length"])
        elif rec.get("record") == "term":
            postings[rec["term"]] = [(str(d), int(tf)) for d, tf in rec["postings"]]
    return InvertedIndex(postings=postings, doc_lengths=doc_lengths)
