"""Training loop with early stopping, and batch scoring.

Binary relevance over exchange pairs: the valid follow-up is 1, every
confounder 0, optimized with cross-entropy (logit form) and AdamW. The
checkpoint kept is the best validation epoch; patience counts
non-improving epochs.
"""

from __future__ import annotations

import json
import logging

import torch
from torch import nn

from .data import ExchangePair, read_exchange, require_labels
from .model import TrainSpec, build_backend, load_backend

logger = logging.getLogger(__name__)


def _batches(pairs: list[ExchangePair], batch_size: int, generator: torch.Generator | None):
    if generator is None:
        order = range(len(pairs))
    else:
        order = torch.randperm(len(pairs), generator=generator).tolist()
    batch: list[ExchangePair] = []
    for i in order:
        batch.append(pairs[i])
        if len(batch) == batch_size:
            yield batch
            batch = []
    if batch:
        yield batch


def _epoch_loss(backend, pairs, loss_fn, optimizer=None, batch_size=64, generator=None):
    training = optimizer is not None
    backend.module.train(training)
    total = 0.0
    count = 0
    with torch.set_grad_enabled(training):
        for batch in _batches(pairs, batch_size, generator if training else None):
            inputs, targets = backend.batch(batch)
            logits = backend.logits(inputs)
            loss = loss_fn(logits, targets)
            if training:
                optimizer.zero_grad()
                loss.backward()
                optimizer.step()
            total += loss.item() * len(batch)
            count += len(batch)
    return total / max(count, 1)


def train(
    exchange_train: str,
    exchange_val: str,
    spec: TrainSpec,
    out_path: str,
    log_path: str | None = None,
) -> dict:
    """Fine-tune on labelled exchange files; saves the best-val checkpoint.

    Returns the validation metrics of the saved epoch.
    """
    train_pairs = read_exchange(exchange_train)
    val_pairs = read_exchange(exchange_val)
    require_labels(train_pairs, exchange_train)
    require_labels(val_pairs, exchange_val)
    if not train_pairs:
        raise ValueError(f"{exchange_train}: no training pairs")

    torch.manual_seed(spec.seed)
    generator = torch.Generator().manual_seed(spec.seed)

    backend = build_backend(spec, train_pairs)
    positives = sum(p.target for p in train_pairs)
    if spec.pos_weight is not None:
        pos_weight = spec.pos_weight
    else:
        pos_weight = (len(train_pairs) - positives) / max(positives, 1.0)
    loss_fn = nn.BCEWithLogitsLoss(pos_weight=torch.tensor(float(pos_weight)))
    optimizer = torch.optim.AdamW(backend.module.parameters(), lr=spec.learning_rate)

    history = []
    best_val = float("inf")
    best_epoch = -1
    bad_epochs = 0
    best_checkpoint = None
    for epoch in range(1, spec.max_epochs + 1):
        train_loss = _epoch_loss(
            backend, train_pairs, loss_fn, optimizer, spec.batch_size, generator
        )
        val_loss = _epoch_loss(backend, val_pairs, loss_fn, batch_size=spec.batch_size)
        history.append({"epoch": epoch, "train_loss": train_loss, "val_loss": val_loss})
        logger.info("epoch %d: train %.4f val %.4f", epoch, train_loss, val_loss)
        if val_loss < best_val:
            best_val = val_loss
            best_epoch = epoch
            bad_epochs = 0
            best_checkpoint = {
                k: (v.clone() if isinstance(v, torch.Tensor) else v)
                for k, v in backend.checkpoint()["state_dict"].items()
            }
        else:
            bad_epochs += 1
            if bad_epochs >= spec.patience:
                logger.info("early stop after %d non-improving epochs", bad_epochs)
                break

    payload = backend.checkpoint()
    payload["state_dict"] = best_checkpoint
    payload["best_epoch"] = best_epoch
    payload["history"] = history
    torch.save(payload, out_path)
    if log_path:
        with open(log_path, "w", encoding="utf-8") as fh:
            for row in history:
                fh.write(json.dumps(row) + "\n")
    return {"best_epoch": best_epoch, "val_loss": best_val, "epochs_run": len(history)}


def score(exchange_path: str, model_path: str, out_path: str, batch_size: int = 64) -> int:
    """Score every exchange pair with the saved model; returns the pair count."""
    pairs = read_exchange(exchange_path)
    rows = []
    if pairs:
        payload = torch.load(model_path, map_location="cpu", weights_only=False)
        backend = load_backend(payload)
        backend.module.eval()
        with torch.no_grad():
            for start in range(0, len(pairs), batch_size):
                batch = pairs[start : start + batch_size]
                inputs, _ = backend.batch(batch)
                probabilities = torch.sigmoid(backend.logits(inputs))
                for pair, prob in zip(batch, probabilities.tolist()):
                    rows.append(
                        {
                            "sample_id": pair.sample_id,
                            "candidate_id": pair.candidate_id,
                            "score": min(max(prob, 0.0), 1.0),
                        }
                    )
    with open(out_path, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row) + "\n")
    return len(rows)
