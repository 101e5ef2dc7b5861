"""Line-delimited JSON helpers with atomic writes."""

import json
import os
from typing import Iterable, Iterator


def dumps(record: dict) -> str:
    return json.dumps(record, ensure_ascii=False)


def iter_jsonl(path: str) -> Iterator[dict]:
    """Yield one record per non-blank line; raises ValueError with the line number."""
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                yield json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"{path}:{line_no}: invalid JSON: {exc}") from exc


def read_jsonl(path: str) -> list[dict]:
    return list(iter_jsonl(path))


def write_jsonl(path: str, records: Iterable[dict]) -> None:
    """Write records one per line; atomic via a temp file so readers never see partial output."""
    tmp = f"{path}.tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(dumps(rec))
            fh.write("\n")
    os.replace(tmp, path)


def write_text(path: str, text: str) -> None:
    tmp = f"{path}.tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write(text)
    os.replace(tmp, path)
