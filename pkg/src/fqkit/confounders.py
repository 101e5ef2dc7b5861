"""Typed confounder generators and sample assembly.

Each generator produces negatives of one category: paraphrases of the
current question, same-type entity swaps, partial entity-token swaps,
context swaps into foreign questions, random questions from other
conversations, homophone corruptions, and duplicates of the dialog
history. Assembly merges them with the single valid follow-up,
deduplicates case-folded, shuffles with a per-sample derived seed, and
records every emit/skip/dedup decision in an audit trail.
"""

from __future__ import annotations

import hashlib
import logging
import random
import re
from dataclasses import dataclass, field, replace

from .corpus import Candidate, DialogContext, Sample, SampleSkeleton, VALID_LABEL
from .entity import (
    EntityCatalog,
    EntityMention,
    NameLexicon,
    find_entities,
    sample_replacement,
)
from .phonetics import phonetic_key
from .tokenizer import match_case, normalize_ws, token_spans

logger = logging.getLogger(__name__)

GENERATORS = (
    "paraphrase",
    "irrelevant_entity",
    "partial_entity",
    "irrelevant_context",
    "random_question",
    "asr_error",
    "history_duplicate",
)

ENTITY_GENERATORS = ("irrelevant_entity", "partial_entity", "irrelevant_context", "asr_error")

DUPLICATE_POLICIES = ("all_context_questions", "current_only")
SWAP_SCOPES = ("current", "all_context_questions")


@dataclass(frozen=True)
class GeneratorConfig:
    enabled: frozenset = frozenset(GENERATORS)
    random_question_count: int = 3
    # cap applied per generator family (irrelevant_entity, partial_entity)
    max_entity_swaps_per_sample: int = 4
    duplicate_policy: str = "all_context_questions"
    entity_swap_scope: str = "current"
    seed: int = 0

    def __post_init__(self):
        if self.random_question_count < 0:
            raise ValueError("random_question_count must be >= 0")
        if self.duplicate_policy not in DUPLICATE_POLICIES:
            raise ValueError(f"unknown duplicate_policy {self.duplicate_policy!r}")
        if self.entity_swap_scope not in SWAP_SCOPES:
            raise ValueError(f"unknown entity_swap_scope {self.entity_swap_scope!r}")
        unknown = set(self.enabled) - set(GENERATORS)
        if unknown:
            raise ValueError(f"unknown generators: {sorted(unknown)}")


@dataclass
class AuditEvent:
    sample_id: str
    generator: str
    action: str  # emitted | skipped | deduped
    reason: str = ""
    detail: dict = field(default_factory=dict)

    def record(self) -> dict:
        rec = {
            "sample_id": self.sample_id,
            "generator": self.generator,
            "action": self.action,
            "reason": self.reason,
        }
        rec.update(self.detail)
        return rec


class AuditTrail:
    def __init__(self, sample_id: str):
        self.sample_id = sample_id
        self.events: list[AuditEvent] = []

    def emitted(self, generator: str, **detail) -> None:
        self.events.append(AuditEvent(self.sample_id, generator, "emitted", "", detail))

    def skipped(self, generator: str, reason: str, **detail) -> None:
        self.events.append(AuditEvent(self.sample_id, generator, "skipped", reason, detail))

    def deduped(self, generator: str, reason: str, **detail) -> None:
        self.events.append(AuditEvent(self.sample_id, generator, "deduped", reason, detail))


# --- paraphrase providers ---------------------------------------------------


class ParaphraseProvider:
    mode = "abstract"

    def paraphrase(self, question: str) -> str | None:
        raise NotImplementedError


class FileParaphrases(ParaphraseProvider):
    """Externally generated paraphrases keyed by the source question."""

    mode = "file_import"

    def __init__(self, mapping: dict[str, str] | None = None):
        self.mapping: dict[str, str] = {}
        for question, paraphrase in (mapping or {}).items():
            self.mapping.setdefault(normalize_ws(question).casefold(), paraphrase)

    @classmethod
    def from_file(cls, path: str) -> "FileParaphrases":
        from .jsonl import iter_jsonl

        provider = cls()
        for rec in iter_jsonl(path):
            key = normalize_ws(str(rec["question"])).casefold()
            provider.mapping.setdefault(key, str(rec["paraphrase"]))
        return provider

    def paraphrase(self, question: str) -> str | None:
        return self.mapping.get(normalize_ws(question).casefold())


# Deterministic surface templates: wh-movement, age/birth-year flips, aux
# swaps, possessive rewrites. First matching rule wins.
_PARAPHRASE_RULES: list[tuple[re.Pattern, str]] = [
    (re.compile(r"when was (.+) born", re.IGNORECASE), "What year was {0} born"),
    (re.compile(r"what year was (.+) born", re.IGNORECASE), "When was {0} born"),
    (re.compile(r"how old is (.+)", re.IGNORECASE), "What is the age of {0}"),
    (re.compile(r"what is the age of (.+)", re.IGNORECASE), "How old is {0}"),
    (re.compile(r"where was (.+) born", re.IGNORECASE), "What is the birthplace of {0}"),
    (re.compile(r"where did (.+) go to school", re.IGNORECASE), "Which school did {0} attend"),
    (re.compile(r"when did (.+) die", re.IGNORECASE), "What year did {0} die"),
    (re.compile(r"where is (.+) located", re.IGNORECASE), "Where can {0} be found"),
    (re.compile(r"what is the ([^\W_]+) of (.+)", re.IGNORECASE), "What is {1}'s {0}"),
    (re.compile(r"who was (.+) married to", re.IGNORECASE), "Whom did {0} marry"),
]


class RuleParaphrases(ParaphraseProvider):
    """Template rewrites; None when no rule matches."""

    mode = "rule_based"

    def paraphrase(self, question: str) -> str | None:
        body = question.strip()
        had_mark = body.endswith("?")
        if had_mark:
            body = body[:-1].rstrip()
        for pattern, template in _PARAPHRASE_RULES:
            m = pattern.fullmatch(body)
            if m:
                out = template.format(*m.groups())
                return out + ("?" if had_mark else "")
        return None


# --- dataset-wide question pool ---------------------------------------------


@dataclass
class PoolEntry:
    text: str
    conversation_id: str
    mentions: list[EntityMention]


class QuestionPool:
    """Every rewritten question in the corpus, with its detected mentions."""

    def __init__(self, entries: list[PoolEntry]):
        self.entries = entries
        self.by_type: dict[str, list[int]] = {}
        for i, entry in enumerate(entries):
            for mention in entry.mentions:
                bucket = self.by_type.setdefault(mention.entity_type, [])
                if not bucket or bucket[-1] != i:
                    bucket.append(i)

    @classmethod
    def build(cls, conversations, catalog: EntityCatalog | None) -> "QuestionPool":
        entries = []
        for conv in conversations:
            for turn in conv.turns:
                question = turn.question_rewritten
                mentions = find_entities(question, catalog) if catalog else []
                entries.append(PoolEntry(question, conv.conversation_id, mentions))
        return cls(entries)

    def __len__(self) -> int:
        return len(self.entries)


# --- generators ---------------------------------------------------------------


def gen_paraphrase(
    question: str,
    provider: ParaphraseProvider,
    mentions: list[EntityMention] | None = None,
    trail: AuditTrail | None = None,
) -> Candidate | None:
    """Paraphrase confounder; must differ case-folded and keep mentions verbatim."""
    text = provider.paraphrase(question)
    if text is None or not text.strip():
        if trail:
            trail.skipped("paraphrase", "no_paraphrase_available")
        return None
    if text.casefold() == question.casefold():
        if trail:
            trail.skipped("paraphrase", "paraphrase_equals_source")
        return None
    for mention in mentions or []:
        surface = question[mention.char_start : mention.char_end]
        if surface not in text:
            if trail:
                trail.skipped("paraphrase", "mention_not_preserved", mention=surface)
            return None
    return Candidate(
        "", text, "paraphrase", provenance={"source_question": question}
    )


def _splice(question: str, char_start: int, char_end: int, replacement: str) -> str:
    return question[:char_start] + replacement + question[char_end:]


def gen_irrelevant_entity(
    question: str,
    mentions: list[EntityMention],
    catalog: EntityCatalog,
    rng: random.Random,
    cap: int | None = None,
    trail: AuditTrail | None = None,
) -> list[Candidate]:
    """One same-type entity swap per mention, up to `cap`."""
    out: list[Candidate] = []
    for mention in mentions:
        if cap is not None and len(out) >= cap:
            break
        entry = sample_replacement(catalog, mention.entity_type, mention.surface, rng)
        if entry is None:
            if trail:
                trail.skipped(
                    "irrelevant_entity", "no_same_type_replacement",
                    entity=mention.surface,
                )
            continue
        text = _splice(question, mention.char_start, mention.char_end, entry.surface)
        out.append(
            Candidate(
                "", text, "irrelevant_entity",
                provenance={
                    "source_question": question,
                    "span": [mention.start, mention.end],
                    "replacement": entry.surface,
                },
            )
        )
    return out


def gen_partial_entity(
    question: str,
    mention: EntityMention,
    lexicon: NameLexicon,
    rng: random.Random,
    trail: AuditTrail | None = None,
) -> Candidate | None:
    """Swap the first or last mention token for a random first/last name."""
    if mention.token_count < 2:
        if trail:
            trail.skipped("partial_entity", "single_token_mention", entity=mention.surface)
        return None
    position = rng.choice([0, mention.token_count - 1])
    pool = lexicon.first_names if position == 0 else lexicon.last_names
    spans = token_spans(question)
    tok, char_start, char_end = spans[mention.start + position]
    options = [name for name in pool if name.casefold() != tok]
    if not options:
        if trail:
            trail.skipped("partial_entity", "no_replacement_name", entity=mention.surface)
        return None
    name = match_case(question[char_start:char_end], rng.choice(options))
    text = _splice(question, char_start, char_end, name)
    return Candidate(
        "", text, "partial_entity",
        provenance={
            "source_question": question,
            "span": [mention.start + position, mention.start + position + 1],
            "replacement": name,
        },
    )


def gen_irrelevant_context(
    current_mention: EntityMention,
    current_surface: str,
    pool: QuestionPool,
    conversation_id: str,
    rng: random.Random,
    trail: AuditTrail | None = None,
) -> Candidate | None:
    """Pull a same-entity-type question from another conversation and plant
    the current entity in it."""
    eligible = [
        i
        for i in pool.by_type.get(current_mention.entity_type, ())
        if pool.entries[i].conversation_id != conversation_id
    ]
    if not eligible:
        if trail:
            trail.skipped(
                "irrelevant_context", "no_same_type_pool_question",
                entity_type=current_mention.entity_type,
            )
        return None
    entry = pool.entries[rng.choice(eligible)]
    donor = next(
        m for m in entry.mentions if m.entity_type == current_mention.entity_type
    )
    text = _splice(entry.text, donor.char_start, donor.char_end, current_surface)
    return Candidate(
        "", text, "irrelevant_context",
        provenance={
            "source_question": entry.text,
            "source_conversation": entry.conversation_id,
            "span": [donor.start, donor.end],
            "replacement": current_surface,
        },
    )


def gen_random_questions(
    pool: QuestionPool,
    conversation_id: str,
    rng: random.Random,
    k: int,
    trail: AuditTrail | None = None,
) -> list[Candidate]:
    """k questions from k distinct other conversations, without replacement."""
    if k <= 0:
        return []
    eligible = [
        i for i, e in enumerate(pool.entries) if e.conversation_id != conversation_id
    ]
    out: list[Candidate] = []
    used_conversations: set[str] = set()
    used_entries: set[int] = set()
    attempts = 0
    while len(out) < k and attempts < 20 * k and len(used_entries) < len(eligible):
        attempts += 1
        i = eligible[rng.randrange(len(eligible))]
        if i in used_entries:
            continue
        used_entries.add(i)
        entry = pool.entries[i]
        if entry.conversation_id in used_conversations:
            continue
        used_conversations.add(entry.conversation_id)
        out.append(
            Candidate(
                "", entry.text, "random_question",
                provenance={"source_conversation": entry.conversation_id},
            )
        )
    if len(out) < k:
        # small pools: deterministic sweep over what's left
        remaining = [i for i in eligible if i not in used_entries]
        rng.shuffle(remaining)
        for i in remaining:
            if len(out) >= k:
                break
            entry = pool.entries[i]
            if entry.conversation_id in used_conversations:
                continue
            used_conversations.add(entry.conversation_id)
            out.append(
                Candidate(
                    "", entry.text, "random_question",
                    provenance={"source_conversation": entry.conversation_id},
                )
            )
    if len(out) < k:
        logger.warning(
            "random-question pool exhausted: wanted %d, emitted %d", k, len(out)
        )
        if trail:
            trail.skipped("random_question", "pool_exhausted", wanted=k, emitted=len(out))
    return out


def gen_asr_error(
    question: str,
    mention: EntityMention,
    homophone_source,
    trail: AuditTrail | None = None,
) -> list[Candidate]:
    """One candidate per mention token that has a homophone, replacing only
    that token. Replacements must share the source token's phonetic key and
    differ in spelling, whichever source produced them."""
    out: list[Candidate] = []
    spans = token_spans(question)
    for position in range(mention.start, mention.end):
        tok, char_start, char_end = spans[position]
        key = phonetic_key(tok)
        replacement = None
        for hom in homophone_source.lookup(tok):
            if hom.casefold() != tok and phonetic_key(hom) == key:
                replacement = hom
                break
        if replacement is None:
            if trail:
                trail.skipped("asr_error", "no_homophone", token=tok)
            continue
        cased = match_case(question[char_start:char_end], replacement)
        text = _splice(question, char_start, char_end, cased)
        out.append(
            Candidate(
                "", text, "asr_error",
                provenance={
                    "source_question": question,
                    "span": [position, position + 1],
                    "replacement": cased,
                },
            )
        )
    return out


def gen_history_duplicates(context: DialogContext, policy: str) -> list[Candidate]:
    """Copies of context questions; `current_only` keeps just the current one."""
    if policy == "current_only":
        questions = [context.current_question]
    else:
        questions = context.questions()
    return [Candidate("", q, "history_duplicate") for q in questions]


# --- suite + assembly ---------------------------------------------------------


class GeneratorSuite:
    """Bundles the resources the generators need; immutable and shareable."""

    def __init__(
        self,
        config: GeneratorConfig,
        catalog: EntityCatalog | None = None,
        lexicon: NameLexicon | None = None,
        paraphrases: ParaphraseProvider | None = None,
        homophones=None,
        pool: QuestionPool | None = None,
    ):
        self.config = config
        self.catalog = catalog
        self.lexicon = lexicon
        self.paraphrases = paraphrases
        self.homophones = homophones
        self.pool = pool
        needs_catalog = [g for g in ENTITY_GENERATORS if g in config.enabled]
        if needs_catalog and (catalog is None or len(catalog) == 0):
            raise ValueError(
                f"entity generators {needs_catalog} enabled but the catalog is empty"
            )
        if "partial_entity" in config.enabled and not (lexicon and bool(lexicon)):
            raise ValueError("partial_entity enabled but the name lexicon is empty")
        if "paraphrase" in config.enabled and paraphrases is None:
            raise ValueError("paraphrase enabled but no provider configured")
        if "asr_error" in config.enabled and homophones is None:
            raise ValueError("asr_error enabled but no homophone source configured")
        if {"irrelevant_context", "random_question"} & set(config.enabled) and pool is None:
            raise ValueError("pool-based generators enabled but no question pool given")

    def _swap_sources(self, context: DialogContext) -> list[tuple[str, list[EntityMention]]]:
        if self.config.entity_swap_scope == "all_context_questions":
            questions = context.questions()
        else:
            questions = [context.current_question]
        return [(q, find_entities(q, self.catalog)) for q in questions]

    def confounders_for(
        self, skeleton: SampleSkeleton, rng: random.Random, trail: AuditTrail
    ) -> list[Candidate]:
        cfg = self.config
        context = skeleton.context
        current = context.current_question
        current_mentions = (
            find_entities(current, self.catalog) if self.catalog is not None else []
        )
        out: list[Candidate] = []

        if "paraphrase" in cfg.enabled:
            cand = gen_paraphrase(current, self.paraphrases, current_mentions, trail)
            if cand:
                out.append(cand)

        if "irrelevant_entity" in cfg.enabled:
            budget = cfg.max_entity_swaps_per_sample
            for question, mentions in self._swap_sources(context):
                if budget <= 0:
                    break
                swaps = gen_irrelevant_entity(
                    question, mentions, self.catalog, rng, cap=budget, trail=trail
                )
                budget -= len(swaps)
                out.extend(swaps)

        if "partial_entity" in cfg.enabled:
            budget = cfg.max_entity_swaps_per_sample
            for question, mentions in self._swap_sources(context):
                for mention in mentions:
                    if budget <= 0:
                        break
                    cand = gen_partial_entity(question, mention, self.lexicon, rng, trail)
                    if cand:
                        out.append(cand)
                        budget -= 1

        if "irrelevant_context" in cfg.enabled:
            if current_mentions:
                mention = current_mentions[0]
                cand = gen_irrelevant_context(
                    mention,
                    current[mention.char_start : mention.char_end],
                    self.pool,
                    skeleton.conversation_id,
                    rng,
                    trail,
                )
                if cand:
                    out.append(cand)
            else:
                trail.skipped("irrelevant_context", "no_mention_in_current_question")

        if "random_question" in cfg.enabled:
            out.extend(
                gen_random_questions(
                    self.pool, skeleton.conversation_id, rng,
                    cfg.random_question_count, trail,
                )
            )

        if "asr_error" in cfg.enabled:
            for mention in current_mentions:
                out.extend(gen_asr_error(current, mention, self.homophones, trail))

        if "history_duplicate" in cfg.enabled:
            out.extend(gen_history_duplicates(context, cfg.duplicate_policy))

        return out


def derive_seed(run_seed: int, sample_id: str) -> int:
    """Stable per-sample sub-seed so output is independent of scheduling."""
    digest = hashlib.sha256(f"{run_seed}:{sample_id}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


def assemble_sample(
    skeleton: SampleSkeleton, suite: GeneratorSuite, config: GeneratorConfig
) -> tuple[Sample, list[AuditEvent]]:
    """Valid follow-up plus confounders, deduplicated and shuffled.

    Dedup is case-folded and always keeps the valid candidate; the
    shuffle uses a sub-seed derived from (run seed, sample id) and is
    recorded on the sample.
    """
    sample_id = skeleton.sample_id
    sub_seed = derive_seed(config.seed, sample_id)
    rng = random.Random(sub_seed)
    trail = AuditTrail(sample_id)

    valid = Candidate("", skeleton.valid_text, VALID_LABEL)
    kept: list[Candidate] = [valid]
    seen: dict[str, Candidate] = {valid.text.casefold(): valid}
    for cand in suite.confounders_for(skeleton, rng, trail):
        key = cand.text.casefold()
        holder = seen.get(key)
        if holder is not None:
            reason = (
                "duplicate_of_valid" if holder.label == VALID_LABEL else "duplicate_of_candidate"
            )
            trail.deduped(cand.label, reason, text=cand.text)
            continue
        seen[key] = cand
        kept.append(cand)

    if len(kept) == 1:
        logger.warning("sample %s has no confounders", sample_id)
        trail.skipped("assemble", "no_confounders")

    rng.shuffle(kept)
    final = []
    for i, cand in enumerate(kept):
        cand = replace(cand, candidate_id=f"c{i:02d}")
        final.append(cand)
        generator = "valid" if cand.label == VALID_LABEL else cand.label
        trail.emitted(generator, candidate_id=cand.candidate_id, text=cand.text, **cand.provenance)

    sample = Sample(
        sample_id=sample_id,
        context=skeleton.context,
        candidates=final,
        rng_seed_record=sub_seed,
    )
    return sample, trail.events
