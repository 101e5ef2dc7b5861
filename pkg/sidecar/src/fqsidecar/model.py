"""Relevance classifier heads.

Two backends behind one interface: a pretrained language model via
transformers (when the environment can provide weights), and a compact
self-contained transformer encoder trained from scratch for offline or
desk-scale runs. Both end in a single output node squashed to [0, 1].
"""

from __future__ import annotations

from dataclasses import dataclass, field

import torch
from torch import nn

from .data import ExchangePair, Vocabulary, encode_batch

SCRATCH_MODEL = "scratch"


@dataclass
class TrainSpec:
    base_model: str = "bert-base-cased"
    learning_rate: float = 2e-5
    batch_size: int = 64
    max_epochs: int = 20
    patience: int = 3
    max_seq_len: int = 128
    seed: int = 0
    pos_weight: float | None = None  # auto from class balance when None
    # scratch-backend shape
    hidden_size: int = 96
    layers: int = 2
    heads: int = 4
    feedforward: int = 192
    dropout: float = 0.1
    vocab_size: int = 30000

    def to_dict(self) -> dict:
        return dict(self.__dict__)

    @classmethod
    def from_dict(cls, obj: dict) -> "TrainSpec":
        return cls(**obj)


class ScratchEncoder(nn.Module):
    """Word-level transformer encoder with a single-logit head."""

    def __init__(self, vocab_size: int, spec: TrainSpec):
        super().__init__()
        self.embedding = nn.Embedding(vocab_size, spec.hidden_size, padding_idx=0)
        self.positions = nn.Embedding(spec.max_seq_len, spec.hidden_size)
        layer = nn.TransformerEncoderLayer(
            d_model=spec.hidden_size,
            nhead=spec.heads,
            dim_feedforward=spec.feedforward,
            dropout=spec.dropout,
            batch_first=True,
        )
        self.encoder = nn.TransformerEncoder(layer, num_layers=spec.layers)
        self.dropout = nn.Dropout(spec.dropout)
        self.head = nn.Linear(spec.hidden_size, 1)

    def forward(self, token_ids: torch.Tensor, mask: torch.Tensor) -> torch.Tensor:
        positions = torch.arange(token_ids.size(1), device=token_ids.device)
        hidden = self.embedding(token_ids) + self.positions(positions)[None, :, :]
        hidden = self.encoder(hidden, src_key_padding_mask=~mask)
        # mean over real tokens
        denom = mask.sum(dim=1, keepdim=True).clamp(min=1)
        pooled = (hidden * mask.unsqueeze(-1)).sum(dim=1) / denom
        return self.head(self.dropout(pooled)).squeeze(-1)


class ScratchBackend:
    """Owns the vocabulary and the scratch encoder."""

    name = SCRATCH_MODEL

    def __init__(self, spec: TrainSpec, vocab: Vocabulary):
        self.spec = spec
        self.vocab = vocab
        self.module = ScratchEncoder(len(vocab), spec)

    @classmethod
    def for_training(cls, spec: TrainSpec, train_pairs: list[ExchangePair]) -> "ScratchBackend":
        vocab = Vocabulary.build(train_pairs, max_size=spec.vocab_size)
        return cls(spec, vocab)

    def batch(self, pairs: list[ExchangePair]):
        ids, mask, targets = encode_batch(pairs, self.vocab, self.spec.max_seq_len)
        return {"token_ids": ids, "mask": mask}, targets

    def logits(self, inputs: dict) -> torch.Tensor:
        return self.module(inputs["token_ids"], inputs["mask"])

    def checkpoint(self) -> dict:
        return {
            "backend": self.name,
            "spec": self.spec.to_dict(),
            "vocab": self.vocab.state(),
            "state_dict": self.module.state_dict(),
        }

    @classmethod
    def from_checkpoint(cls, payload: dict) -> "ScratchBackend":
        spec = TrainSpec.from_dict(payload["spec"])
        vocab = Vocabulary.from_state(payload["vocab"])
        backend = cls(spec, vocab)
        backend.module.load_state_dict(payload["state_dict"])
        return backend


class HFBackend:
    """Pretrained language model fine-tuned with a single regression node."""

    name = "hf"

    def __init__(self, spec: TrainSpec, module=None, tokenizer=None):
        from transformers import AutoModelForSequenceClassification, AutoTokenizer

        self.spec = spec
        self.tokenizer = tokenizer or AutoTokenizer.from_pretrained(spec.base_model)
        self.module = module or AutoModelForSequenceClassification.from_pretrained(
            spec.base_model, num_labels=1
        )

    def batch(self, pairs: list[ExchangePair]):
        from .data import truncate_segments

        texts = [truncate_segments(p.text, self.spec.max_seq_len)[0] for p in pairs]
        encoded = self.tokenizer(
            texts,
            padding=True,
            truncation=True,
            max_length=self.spec.max_seq_len,
            return_tensors="pt",
        )
        targets = torch.tensor([p.target for p in pairs], dtype=torch.float32)
        return dict(encoded), targets

    def logits(self, inputs: dict) -> torch.Tensor:
        return self.module(**inputs).logits.squeeze(-1)

    def checkpoint(self) -> dict:
        return {
            "backend": self.name,
            "spec": self.spec.to_dict(),
            "state_dict": self.module.state_dict(),
        }

    @classmethod
    def from_checkpoint(cls, payload: dict) -> "HFBackend":
        spec = TrainSpec.from_dict(payload["spec"])
        backend = cls(spec)
        backend.module.load_state_dict(payload["state_dict"])
        return backend


def build_backend(spec: TrainSpec, train_pairs: list[ExchangePair]):
    if spec.base_model == SCRATCH_MODEL:
        return ScratchBackend.for_training(spec, train_pairs)
    return HFBackend(spec)


def load_backend(payload: dict):
    if payload.get("backend") == SCRATCH_MODEL:
        return ScratchBackend.from_checkpoint(payload)
    return HFBackend.from_checkpoint(payload)
