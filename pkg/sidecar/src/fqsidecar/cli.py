"""fqsidecar command line: train a relevance classifier, score exchange files."""

from __future__ import annotations

import argparse
import logging
import sys

from .model import TrainSpec
from .train import score, train


def cmd_train(args) -> int:
    spec = TrainSpec(
        base_model=args.base_model,
        learning_rate=args.lr,
        batch_size=args.batch_size,
        max_epochs=args.epochs,
        patience=args.patience,
        max_seq_len=args.max_len,
        seed=args.seed,
        hidden_size=args.hidden_size,
        layers=args.layers,
        heads=args.heads,
    )
    metrics = train(args.train, args.val, spec, args.out, log_path=args.log)
    print(
        f"saved epoch {metrics['best_epoch']} (val loss {metrics['val_loss']:.4f}, "
        f"{metrics['epochs_run']} epochs run) -> {args.out}"
    )
    return 0


def cmd_score(args) -> int:
    count = score(args.exchange, args.model, args.out, batch_size=args.batch_size)
    print(f"scored {count} pairs -> {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fqsidecar")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("train", help="fine-tune the relevance classifier")
    p.add_argument("--train", required=True, help="labelled exchange JSONL")
    p.add_argument("--val", required=True, help="labelled exchange JSONL")
    p.add_argument("--out", required=True, help="model checkpoint path")
    p.add_argument("--log", help="per-epoch loss JSONL")
    p.add_argument("--base-model", default="bert-base-cased",
                   help='HF model name, or "scratch" for the built-in encoder')
    p.add_argument("--lr", type=float, default=2e-5)
    p.add_argument("--batch-size", type=int, default=64)
    p.add_argument("--epochs", type=int, default=20)
    p.add_argument("--patience", type=int, default=3)
    p.add_argument("--max-len", type=int, default=128)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--hidden-size", type=int, default=96)
    p.add_argument("--layers", type=int, default=2)
    p.add_argument("--heads", type=int, default=4)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("score", help="score an exchange file with a trained model")
    p.add_argument("--exchange", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--batch-size", type=int, default=64)
    p.set_defaults(func=cmd_score)

    return parser


def main(argv=None) -> int:
    logging.basicConfig(
        level=logging.INFO, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr
    )
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
