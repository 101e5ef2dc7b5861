import json
import subprocess
import sys

import pytest


def run_fqkit(*args: str) -> None:
    """The dataset toolkit, via its command line (the exchange boundary)."""
    proc = subprocess.run(
        [sys.executable, "-m", "fqkit.cli", *args],
        capture_output=True,
        text=True,
    )
    if proc.returncode != 0:
        raise RuntimeError(f"fqkit {' '.join(args)} failed:\n{proc.stderr}")


def read_jsonl(path) -> list[dict]:
    with open(path, encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]


def write_jsonl(path, records) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec, ensure_ascii=False) + "\n")


@pytest.fixture
def toy_exchange(tmp_path):
    """Trivially separable pairs: positives mention 'stellar', negatives 'mundane'."""
    rows = []
    for i in range(100):
        rows.append(
            {
                "sample_id": f"s{i:03d}",
                "candidate_id": "c00",
                "joined_text": f"context turn {i} [SEP] answer {i} [SEP] a stellar follow-up {i}",
                "label": "valid",
            }
        )
        rows.append(
            {
                "sample_id": f"s{i:03d}",
                "candidate_id": "c01",
                "joined_text": f"context turn {i} [SEP] answer {i} [SEP] a mundane duplicate {i}",
                "label": "history_duplicate",
            }
        )
    train = tmp_path / "train.jsonl"
    val = tmp_path / "val.jsonl"
    write_jsonl(train, rows[:160])
    write_jsonl(val, rows[160:])
    return str(train), str(val)
