"""Shared tokenizer for entity matching, indexing, and embeddings.

One tokenizer everywhere keeps token spans consistent across the
modules that locate, replace, and score text: case-fold, split on
whitespace and punctuation, keep internal apostrophes and hyphens.
"""

import re

_TOKEN_RE = re.compile(r"[^\W_]+(?:['’-][^\W_]+)*", re.UNICODE)


def token_spans(text: str) -> list[tuple[str, int, int]]:
    """Case-folded tokens with their (start, end) character spans in `text`."""
    return [(m.group(0).casefold(), m.start(), m.end()) for m in _TOKEN_RE.finditer(text)]


def tokenize(text: str) -> list[str]:
    """Case-folded tokens of `text`."""
    return [m.group(0).casefold() for m in _TOKEN_RE.finditer(text)]


def truncate_tokens(text: str, max_tokens: int | None) -> str:
    """Cut `text` after its first `max_tokens` tokens, keeping original spelling.

    None means no cap. The cut lands at the character end of the last kept
    token, so no partial tokens appear in the output.
    """
    if max_tokens is None:
        return text
    if max_tokens <= 0:
        return ""
    spans = token_spans(text)
    if len(spans) <= max_tokens:
        return text
    return text[: spans[max_tokens - 1][2]]


def normalize_ws(text: str) -> str:
    """Collapse runs of whitespace to single spaces and strip the ends."""
    return " ".join(text.split())


def match_case(template: str, replacement: str) -> str:
    """Shape `replacement` casing after `template` (ALL-CAPS, Title, or as-is)."""
    if template.isupper() and len(template) > 1:
        return replacement.upper()
    if template[:1].isupper():
        return replacement[:1].upper() + replacement[1:]
    return replacement
