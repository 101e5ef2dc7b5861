"""Phonetic keys and homophone lookup for simulating ASR entity errors.

The key is a fixed five-rule consonant-class encoding (metaphone-style
rather than Soundex, which would keep the first letter and split pairs
like Kurt/Curt). Homophones come from a local lexicon indexed by key,
or from a sounds-like web API with a disk cache and local fallback.
"""

from __future__ import annotations

import json
import logging
import os
import urllib.parse
from dataclasses import dataclass, field
from typing import Iterable

import requests

logger = logging.getLogger(__name__)

_VOWELS = "aeiou"


def phonetic_key(token: str) -> str:
    """Deterministic consonant-class key; empty only for tokens with no letters.

    Rules, in order: (1) map the leading letter (c->k before a/o/u or a
    consonant, c->s before e/i/y; q->k; x->ks; ph->f); (2) drop w, y, h
    unless word-initial; (3) collapse doubled letters; (4) drop vowels
    except a word-initial one; (5) uppercase.
    """
    s = "".join(ch for ch in token.casefold() if ch.isalpha())
    if not s:
        return ""
    if s.startswith("ph"):
        s = "f" + s[2:]
    elif s[0] == "c":
        nxt = s[1] if len(s) > 1 else ""
        s = ("s" if nxt in "eiy" else "k") + s[1:]
    elif s[0] == "q":
        s = "k" + s[1:]
    elif s[0] == "x":
        s = "ks" + s[1:]
    s = s[0] + "".join(ch for ch in s[1:] if ch not in "wyh")
    collapsed = [s[0]]
    for ch in s[1:]:
        if ch != collapsed[-1]:
            collapsed.append(ch)
    s = "".join(collapsed)
    s = s[0] + "".join(ch for ch in s[1:] if ch not in _VOWELS)
    return s.upper()


def edit_distance(a: str, b: str) -> int:
    """Levenshtein distance (unit costs)."""
    if len(a) < len(b):
        a, b = b, a
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        cur = [i]
        for j, cb in enumerate(b, start=1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (ca != cb)))
        prev = cur
    return prev[-1]


class PhoneticLexicon:
    """Vocabulary indexed by phonetic key; each token under exactly one key."""

    def __init__(self, tokens: Iterable[str]):
        self.vocabulary: list[str] = []
        self.index: dict[str, list[str]] = {}
        seen: set[str] = set()
        for raw in tokens:
            token = raw.strip().casefold()
            if not token or token in seen:
                continue
            seen.add(token)
            self.vocabulary.append(token)
            self.index.setdefault(phonetic_key(token), []).append(token)

    @classmethod
    def from_file(cls, path: str) -> "PhoneticLexicon":
        with open(path, encoding="utf-8") as fh:
            return cls(fh)

    def __len__(self) -> int:
        return len(self.vocabulary)


def homophones_local(token: str, lexicon: PhoneticLexicon, max_edit: int = 2) -> list[str]:
    """Lexicon tokens with the same key, different spelling, edit distance <= max_edit.

    Sorted by (edit distance, lexicographic).
    """
    needle = token.casefold()
    scored = []
    for mate in lexicon.index.get(phonetic_key(needle), ()):
        if mate == needle:
            continue
        dist = edit_distance(mate, needle)
        if dist <= max_edit:
            scored.append((dist, mate))
    scored.sort()
    return [mate for _, mate in scored]


class RemoteHomophoneError(Exception):
    """Signals the caller to fall back to the local source."""


@dataclass
class DatamuseClient:
    """Sounds-like queries against a Datamuse-style endpoint, cached on disk.

    Cache is one file per token holding the raw response body; no expiry,
    so dataset regeneration replays identical responses.
    """

    base_url: str = "https://api.datamuse.com/words"
    cache_dir: str | None = None
    timeout: float = 5.0

    def _cache_path(self, token: str) -> str | None:
        if self.cache_dir is None:
            return None
        name = urllib.parse.quote(token.casefold(), safe="") + ".json"
        return os.path.join(self.cache_dir, name)

    def sounds_like(self, token: str) -> list[dict]:
        """Raw response objects ({"word": ..., "score": ...}) for `token`."""
        cache_path = self._cache_path(token)
        body: str | None = None
        if cache_path is not None and os.path.exists(cache_path):
            with open(cache_path, encoding="utf-8") as fh:
                body = fh.read()
        if body is None:
            try:
                resp = requests.get(
                    self.base_url, params={"sl": token}, timeout=self.timeout
                )
                resp.raise_for_status()
            except requests.RequestException as exc:
                raise RemoteHomophoneError(f"sounds-like request failed: {exc}") from exc
            body = resp.text
            if cache_path is not None:
                os.makedirs(self.cache_dir, exist_ok=True)
                tmp = cache_path + ".tmp"
                with open(tmp, "w", encoding="utf-8") as fh:
                    fh.write(body)
                os.replace(tmp, cache_path)
        try:
            payload = json.loads(body)
            if not isinstance(payload, list):
                raise ValueError("expected a JSON array")
            return [obj for obj in payload if isinstance(obj, dict)]
        except ValueError as exc:
            raise RemoteHomophoneError(f"malformed sounds-like response: {exc}") from exc


def homophones_remote(token: str, client: DatamuseClient) -> list[str]:
    """Single-word sounds-like results with spelling different from `token`."""
    needle = token.casefold()
    out = []
    for obj in client.sounds_like(needle):
        word = str(obj.get("word", "")).casefold()
        if not word or " " in word or word == needle:
            continue
        out.append(word)
    return out


@dataclass
class LocalHomophones:
    """Homophone source backed by a phonetic lexicon."""

    lexicon: PhoneticLexicon
    max_edit: int = 2

    def lookup(self, token: str) -> list[str]:
        return homophones_local(token, self.lexicon, self.max_edit)


@dataclass
class RemoteHomophones:
    """Remote source with automatic fall back to a local one on failure."""

    client: DatamuseClient
    fallback: LocalHomophones | None = None
    _failed: set = field(default_factory=set, repr=False)

    def lookup(self, token: str) -> list[str]:
        try:
            return homophones_remote(token, self.client)
        except RemoteHomophoneError as exc:
            if token not in self._failed:
                logger.warning("remote homophones for %r failed (%s); using local fallback", token, exc)
                self._failed.add(token)
            if self.fallback is not None:
                return self.fallback.lookup(token)
            return []
