"""Conversation corpus parsing and per-turn sample skeletons.

A conversation of T question-answer turns yields T-1 samples: for each
turn L in 1..T-1 the dialog context covers turns 1..L (history plus the
current turn) and the rewritten question of turn L+1 is the single valid
follow-up. All questions carried in contexts and candidates use the
context-independent rewritten form.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from typing import Iterable, TextIO

from .jsonl import dumps
from .tokenizer import truncate_tokens

logger = logging.getLogger(__name__)

VALID_LABEL = "valid"
CONFOUNDER_LABELS = (
    "paraphrase",
    "irrelevant_entity",
    "partial_entity",
    "irrelevant_context",
    "asr_error",
    "random_question",
    "history_duplicate",
)
ALL_LABELS = (VALID_LABEL,) + CONFOUNDER_LABELS

DEFAULT_MAX_ANSWER_TOKENS = 64


@dataclass
class Turn:
    question_original: str
    question_rewritten: str
    answer: str
    unanswered: bool = False


@dataclass
class Conversation:
    conversation_id: str
    topic: str
    turns: list[Turn]


@dataclass
class DialogContext:
    """History of (question, answer) pairs plus the current turn."""

    history: list[tuple[str, str]]
    current_question: str
    current_answer: str

    def questions(self) -> list[str]:
        """All context questions, history first, current last."""
        return [q for q, _ in self.history] + [self.current_question]

    def joined_text(self, max_answer_tokens: int | None = DEFAULT_MAX_ANSWER_TOKENS) -> str:
        """Flat scorer input: history questions+answers then the current turn.

        Answers are capped at `max_answer_tokens` tokens; empty answers
        (unanswered turns) are skipped.
        """
        parts: list[str] = []
        for q, a in self.history:
            parts.append(q)
            if a:
                parts.append(truncate_tokens(a, max_answer_tokens))
        parts.append(self.current_question)
        if self.current_answer:
            parts.append(truncate_tokens(self.current_answer, max_answer_tokens))
        return " ".join(parts)


@dataclass
class Candidate:
    candidate_id: str
    text: str
    label: str
    # generator bookkeeping (source spans etc.); never serialized into the dataset
    provenance: dict = field(default_factory=dict, compare=False, repr=False)


@dataclass
class Sample:
    sample_id: str
    context: DialogContext
    candidates: list[Candidate]
    rng_seed_record: int

    def valid_candidate(self) -> Candidate:
        for cand in self.candidates:
            if cand.label == VALID_LABEL:
                return cand
        raise ValueError(f"sample {self.sample_id} has no valid candidate")


@dataclass
class ParseError:
    line_no: int
    message: str


@dataclass
class SampleSkeleton:
    conversation_id: str
    turn_index: int  # 1-based index L of the current turn
    context: DialogContext
    valid_text: str

    @property
    def sample_id(self) -> str:
        return f"{self.conversation_id}:{self.turn_index}"


def _parse_turn(obj: dict, turn_no: int) -> Turn:
    if not isinstance(obj, dict):
        raise ValueError(f"turn {turn_no}: expected an object")
    for key in ("question", "rewritten_question", "answer"):
        if key not in obj:
            raise ValueError(f"turn {turn_no}: missing field '{key}'")
        if not isinstance(obj[key], str):
            raise ValueError(f"turn {turn_no}: field '{key}' must be a string")
    rewritten = obj["rewritten_question"]
    if not rewritten.strip():
        raise ValueError(f"turn {turn_no}: field 'rewritten_question' is empty")
    unanswered = bool(obj.get("unanswered", False))
    answer = obj["answer"]
    if not answer.strip() and not unanswered:
        raise ValueError(f"turn {turn_no}: empty 'answer' without unanswered flag")
    return Turn(
        question_original=obj["question"],
        question_rewritten=rewritten,
        answer=answer,
        unanswered=unanswered,
    )


def conversation_from_record(obj: dict) -> Conversation:
    if not isinstance(obj, dict):
        raise ValueError("record is not an object")
    for key, kind in (("conversation_id", str), ("topic", str), ("turns", list)):
        if key not in obj:
            raise ValueError(f"missing field '{key}'")
        if not isinstance(obj[key], kind):
            raise ValueError(f"field '{key}' has wrong type")
    if not obj["conversation_id"]:
        raise ValueError("field 'conversation_id' is empty")
    turns = [_parse_turn(t, i + 1) for i, t in enumerate(obj["turns"])]
    return Conversation(obj["conversation_id"], obj["topic"], turns)


def conversation_record(conv: Conversation) -> dict:
    turns = []
    for t in conv.turns:
        rec = {
            "question": t.question_original,
            "rewritten_question": t.question_rewritten,
            "answer": t.answer,
        }
        if t.unanswered:
            rec["unanswered"] = True
        turns.append(rec)
    return {"conversation_id": conv.conversation_id, "topic": conv.topic, "turns": turns}


def parse_conversations(
    stream: Iterable[str] | TextIO,
) -> tuple[list[Conversation], list[ParseError]]:
    """Parse line-delimited conversation records, in input order.

    Malformed lines become ParseError entries rather than being dropped;
    empty input is an empty corpus, not an error.
    """
    conversations: list[Conversation] = []
    errors: list[ParseError] = []
    for line_no, line in enumerate(stream, start=1):
        line = line.strip()
        if not line:
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            errors.append(ParseError(line_no, f"invalid JSON: {exc.msg}"))
            continue
        try:
            conversations.append(conversation_from_record(obj))
        except ValueError as exc:
            errors.append(ParseError(line_no, str(exc)))
    return conversations, errors


def read_conversations(path: str) -> tuple[list[Conversation], list[ParseError]]:
    with open(path, encoding="utf-8") as fh:
        return parse_conversations(fh)


def write_conversations(path: str, conversations: Iterable[Conversation]) -> None:
    from .jsonl import write_jsonl

    write_jsonl(path, (conversation_record(c) for c in conversations))


def generate_sample_skeletons(conv: Conversation) -> list[SampleSkeleton]:
    """One skeleton per turn L in 1..T-1; conversations with T < 2 yield none."""
    total = len(conv.turns)
    if total < 2:
        logger.warning(
            "conversation %s has %d turn(s); no samples emitted", conv.conversation_id, total
        )
        return []
    skeletons = []
    for current in range(1, total):  # 1-based current-turn index L
        history = [
            (t.question_rewritten, t.answer) for t in conv.turns[: current - 1]
        ]
        turn = conv.turns[current - 1]
        context = DialogContext(
            history=history,
            current_question=turn.question_rewritten,
            current_answer=turn.answer,
        )
        skeletons.append(
            SampleSkeleton(
                conversation_id=conv.conversation_id,
                turn_index=current,
                context=context,
                valid_text=conv.turns[current].question_rewritten,
            )
        )
    return skeletons


def sample_record(sample: Sample) -> dict:
    return {
        "sample_id": sample.sample_id,
        "context": {
            "history": [{"q": q, "a": a} for q, a in sample.context.history],
            "current_q": sample.context.current_question,
            "current_a": sample.context.current_answer,
        },
        "candidates": [
            {"candidate_id": c.candidate_id, "text": c.text, "label": c.label}
            for c in sample.candidates
        ],
        "seed": sample.rng_seed_record,
    }


def sample_from_record(obj: dict) -> Sample:
    ctx = obj["context"]
    context = DialogContext(
        history=[(h["q"], h["a"]) for h in ctx["history"]],
        current_question=ctx["current_q"],
        current_answer=ctx["current_a"],
    )
    candidates = [
        Candidate(c["candidate_id"], c["text"], c["label"]) for c in obj["candidates"]
    ]
    return Sample(obj["sample_id"], context, candidates, int(obj["seed"]))


def sample_line(sample: Sample) -> str:
    return dumps(sample_record(sample))


def read_samples(path: str) -> list[Sample]:
    from .jsonl import iter_jsonl

    return [sample_from_record(rec) for rec in iter_jsonl(path)]
