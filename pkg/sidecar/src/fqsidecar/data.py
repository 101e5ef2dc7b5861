"""Exchange-file reading, tokenization, and batching.

The exchange format is the only contract with the dataset toolkit:
line records {sample_id, candidate_id, joined_text, label?} where
joined_text is the dialog turns and the candidate pre-joined with a
literal [SEP] token. Labels mark the one valid follow-up; any other
label is a negative (binary target 0).
"""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass

import torch

logger = logging.getLogger(__name__)

SEP_TOKEN = "[SEP]"
PAD, UNK, SEP, CLS = "[PAD]", "[UNK]", "[SEP]", "[CLS]"
SPECIALS = (PAD, UNK, SEP, CLS)

_WORD_RE = re.compile(r"\[sep\]|[^\W_]+(?:['’-][^\W_]+)*", re.UNICODE)

VALID_LABEL = "valid"


@dataclass
class ExchangePair:
    sample_id: str
    candidate_id: str
    text: str
    label: str | None

    @property
    def target(self) -> float:
        return 1.0 if self.label == VALID_LABEL else 0.0


def read_exchange(path: str) -> list[ExchangePair]:
    pairs = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"{path}:{line_no}: invalid JSON: {exc}") from exc
            for key in ("sample_id", "candidate_id", "joined_text"):
                if key not in rec:
                    raise ValueError(f"{path}:{line_no}: missing field '{key}'")
            pairs.append(
                ExchangePair(
                    sample_id=str(rec["sample_id"]),
                    candidate_id=str(rec["candidate_id"]),
                    text=str(rec["joined_text"]),
                    label=rec.get("label"),
                )
            )
    return pairs


def require_labels(pairs: list[ExchangePair], path: str) -> None:
    if any(p.label is None for p in pairs):
        raise ValueError(f"{path}: exchange file carries no labels; cannot train on it")


def word_tokens(text: str) -> list[str]:
    return [SEP if tok == "[sep]" else tok for tok in _WORD_RE.findall(text.casefold())]


def truncate_segments(text: str, max_tokens: int) -> tuple[str, bool]:
    """Drop the oldest [SEP]-delimited segments first until the text fits.

    The trailing segment (the candidate) is always kept. Returns the
    possibly-shortened text and whether anything was dropped.
    """
    segments = text.split(f" {SEP_TOKEN} ")
    dropped = False
    while len(segments) > 1:
        total = sum(len(word_tokens(seg)) for seg in segments) + len(segments) - 1
        if total <= max_tokens:
            break
        segments.pop(0)
        dropped = True
    return f" {SEP_TOKEN} ".join(segments), dropped


class Vocabulary:
    def __init__(self, tokens: list[str]):
        self.index: dict[str, int] = {tok: i for i, tok in enumerate(SPECIALS)}
        for tok in tokens:
            if tok not in self.index:
                self.index[tok] = len(self.index)

    @classmethod
    def build(cls, pairs: list[ExchangePair], max_size: int = 30000) -> "Vocabulary":
        counts: dict[str, int] = {}
        for pair in pairs:
            for tok in word_tokens(pair.text):
                counts[tok] = counts.get(tok, 0) + 1
        ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
        keep = [tok for tok, _ in ranked[: max_size - len(SPECIALS)] if tok not in SPECIALS]
        return cls(keep)

    def __len__(self) -> int:
        return len(self.index)

    def encode(self, text: str, max_len: int) -> list[int]:
        unk = self.index[UNK]
        ids = [self.index[CLS]]
        for tok in word_tokens(text):
            ids.append(self.index.get(tok, unk))
        return ids[:max_len]

    def state(self) -> list[str]:
        ordered = sorted(self.index.items(), key=lambda kv: kv[1])
        return [tok for tok, _ in ordered]

    @classmethod
    def from_state(cls, tokens: list[str]) -> "Vocabulary":
        vocab = cls.__new__(cls)
        vocab.index = {tok: i for i, tok in enumerate(tokens)}
        return vocab


def encode_batch(
    pairs: list[ExchangePair], vocab: Vocabulary, max_len: int, log_truncation: bool = False
) -> tuple[torch.Tensor, torch.Tensor, torch.Tensor]:
    """(token ids, attention mask, targets) for a list of pairs."""
    encoded = []
    for pair in pairs:
        text, dropped = truncate_segments(pair.text, max_len - 1)  # room for [CLS]
        if dropped and log_truncation:
            logger.info("truncated %s/%s to fit %d tokens", pair.sample_id, pair.candidate_id, max_len)
        encoded.append(vocab.encode(text, max_len))
    width = max(len(ids) for ids in encoded) if encoded else 1
    pad = vocab.index[PAD]
    token_ids = torch.full((len(pairs), width), pad, dtype=torch.long)
    mask = torch.zeros((len(pairs), width), dtype=torch.bool)
    for row, ids in enumerate(encoded):
        token_ids[row, : len(ids)] = torch.tensor(ids, dtype=torch.long)
        mask[row, : len(ids)] = True
    targets = torch.tensor([p.target for p in pairs], dtype=torch.float32)
    return token_ids, mask, targets
