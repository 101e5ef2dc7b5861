"""Dataset generation orchestration.

Each sample draws from its own sub-seed derived from (run seed,
sample id), so the output is byte-identical across runs and worker
counts; workers only change who does the work, never the result.
"""

from __future__ import annotations

import multiprocessing

from .confounders import AuditEvent, GeneratorConfig, GeneratorSuite, assemble_sample
from .corpus import Conversation, Sample, SampleSkeleton, generate_sample_skeletons

_WORKER_SUITE: GeneratorSuite | None = None
_WORKER_CONFIG: GeneratorConfig | None = None


def _init_worker(suite: GeneratorSuite, config: GeneratorConfig) -> None:
    global _WORKER_SUITE, _WORKER_CONFIG
    _WORKER_SUITE = suite
    _WORKER_CONFIG = config


def _build_one(skeleton: SampleSkeleton) -> tuple[Sample, list[AuditEvent]]:
    return assemble_sample(skeleton, _WORKER_SUITE, _WORKER_CONFIG)


def generate_dataset(
    conversations: list[Conversation],
    suite: GeneratorSuite,
    config: GeneratorConfig,
    workers: int = 1,
) -> tuple[list[Sample], list[AuditEvent]]:
    """All samples for a corpus, in conversation-then-turn order."""
    skeletons = [
        skeleton
        for conv in conversations
        for skeleton in generate_sample_skeletons(conv)
    ]
    if workers <= 1:
        results = [assemble_sample(s, suite, config) for s in skeletons]
    else:
        with multiprocessing.Pool(
            processes=workers, initializer=_init_worker, initargs=(suite, config)
        ) as pool:
            results = pool.map(_build_one, skeletons)
    samples = [sample for sample, _ in results]
    events = [event for _, sample_events in results for event in sample_events]
    return samples, events
