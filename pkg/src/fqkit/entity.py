"""Entity catalog, gazetteer mention matching, and typed replacement sampling.

Recognition is dictionary-based: catalog surface forms are matched
against question tokens with longest-match-wins, leftmost-wins rules.
The same catalog feeds the substitution generators, so a missed mention
only reduces generator yield.
"""

from __future__ import annotations

import logging
import random
from dataclasses import dataclass

from .tokenizer import token_spans, tokenize

logger = logging.getLogger(__name__)

ENTITY_TYPES = ("PERSON", "ORG", "LOCATION", "EVENT", "WORK", "MISC")


@dataclass(frozen=True)
class EntityEntry:
    surface: str
    entity_type: str
    tokens: tuple[str, ...]  # case-folded tokens of surface


@dataclass
class EntityMention:
    start: int  # token index, inclusive
    end: int  # token index, exclusive
    entity_type: str
    tokens: tuple[str, ...]
    surface: str  # catalog surface that matched
    char_start: int
    char_end: int

    @property
    def token_count(self) -> int:
        return self.end - self.start


class EntityCatalog:
    """Immutable after construction; lookups are read-only."""

    def __init__(self, entries: list[EntityEntry]):
        self.entries = entries
        self.by_type: dict[str, list[EntityEntry]] = {}
        self.by_first_token: dict[str, list[EntityEntry]] = {}
        for entry in entries:
            self.by_type.setdefault(entry.entity_type, []).append(entry)
            self.by_first_token.setdefault(entry.tokens[0], []).append(entry)
        # longest surface first so the scan can stop at the first hit
        for bucket in self.by_first_token.values():
            bucket.sort(key=lambda e: -len(e.tokens))

    def __len__(self) -> int:
        return len(self.entries)


def build_catalog(pairs: list[tuple[str, str]]) -> tuple[EntityCatalog, list[str]]:
    """Catalog from (surface, type) pairs; returns it with per-line warnings.

    Unknown types are rejected; duplicate surfaces (case-folded) keep the
    first occurrence.
    """
    warnings: list[str] = []
    entries: list[EntityEntry] = []
    seen: set[str] = set()
    for surface, entity_type in pairs:
        if entity_type not in ENTITY_TYPES:
            warnings.append(f"unknown entity type {entity_type!r} for {surface!r}; skipped")
            continue
        tokens = tuple(tokenize(surface))
        if not tokens:
            warnings.append(f"surface {surface!r} has no tokens; skipped")
            continue
        key = surface.casefold()
        if key in seen:
            continue
        seen.add(key)
        entries.append(EntityEntry(surface=surface, entity_type=entity_type, tokens=tokens))
    return EntityCatalog(entries), warnings


def load_catalog(path: str) -> EntityCatalog:
    """Load tab-separated "surface<TAB>type" lines."""
    pairs: list[tuple[str, str]] = []
    malformed = 0
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            if "\t" not in line:
                logger.warning("%s:%d: no tab separator; skipped", path, line_no)
                malformed += 1
                continue
            surface, _, entity_type = line.partition("\t")
            pairs.append((surface.strip(), entity_type.strip()))
    catalog, warnings = build_catalog(pairs)
    for warning in warnings:
        logger.warning("%s: %s", path, warning)
    return catalog


def find_entities(question: str, catalog: EntityCatalog) -> list[EntityMention]:
    """Non-overlapping catalog mentions; longest match wins, leftmost first."""
    spans = token_spans(question)
    tokens = [tok for tok, _, _ in spans]
    mentions: list[EntityMention] = []
    i = 0
    while i < len(tokens):
        hit = None
        for entry in catalog.by_first_token.get(tokens[i], ()):
            n = len(entry.tokens)
            if tuple(tokens[i : i + n]) == entry.tokens:
                hit = entry
                break  # buckets are longest-first
        if hit is None:
            i += 1
            continue
        n = len(hit.tokens)
        mentions.append(
            EntityMention(
                start=i,
                end=i + n,
                entity_type=hit.entity_type,
                tokens=hit.tokens,
                surface=hit.surface,
                char_start=spans[i][1],
                char_end=spans[i + n - 1][2],
            )
        )
        i += n
    return mentions


def sample_replacement(
    catalog: EntityCatalog, entity_type: str, exclude: str, rng: random.Random
) -> EntityEntry | None:
    """A same-type entry whose surface differs from `exclude` (case-folded).

    None signals the generator to skip: fewer than two entries of the type.
    """
    bucket = catalog.by_type.get(entity_type, [])
    if len(bucket) < 2:
        return None
    excluded = exclude.casefold()
    options = [e for e in bucket if e.surface.casefold() != excluded]
    if not options:
        return None
    return rng.choice(options)


@dataclass
class NameLexicon:
    first_names: tuple[str, ...]
    last_names: tuple[str, ...]

    def __bool__(self) -> bool:
        return bool(self.first_names or self.last_names)


def _read_token_lines(path: str) -> tuple[str, ...]:
    seen: set[str] = set()
    out: list[str] = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            token = line.strip()
            if not token or token.casefold() in seen:
                continue
            seen.add(token.casefold())
            out.append(token)
    return tuple(out)


def load_name_lexicon(first_path: str, last_path: str) -> NameLexicon:
    """Two plain-text files, one token per line."""
    return NameLexicon(
        first_names=_read_token_lines(first_path),
        last_names=_read_token_lines(last_path),
    )
