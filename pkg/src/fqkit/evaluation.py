"""Ranking metrics: MRR, HitRatio@k, per-confounder score distributions.

MRR is the mean over samples of 1/rank of the valid candidate;
HitRatio@k is the percentage of samples whose valid candidate lands in
the top k. Score distributions are only computed when every score lies
in [0, 1] (the external-scorer convention); otherwise the report is
rank-based only.
"""

from __future__ import annotations

from dataclasses import dataclass

from .corpus import VALID_LABEL
from .ranking import RankedList

HISTOGRAM_BINS = 20
DEFAULT_THETA_LOW = 0.1
DEFAULT_THETA_HIGH = 0.4
_EPS = 1e-9


def _require_valid(ranked_lists: list[RankedList]) -> None:
    for rl in ranked_lists:
        if rl.rank_of_valid is None or rl.rank_of_valid < 1:
            raise ValueError(f"ranked list {rl.sample_id} lacks a valid candidate")


def mrr(ranked_lists: list[RankedList]) -> float:
    """Arithmetic mean of reciprocal ranks of the valid candidate."""
    if not ranked_lists:
        raise ValueError("mrr of an empty set is undefined")
    _require_valid(ranked_lists)
    total = 0.0
    for rl in ranked_lists:
        total += 1.0 / rl.rank_of_valid
    return total / len(ranked_lists)


def hit_ratio(ranked_lists: list[RankedList], k: int) -> float:
    """100 x fraction of lists whose valid candidate ranks within the top k."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if not ranked_lists:
        raise ValueError("hit_ratio of an empty set is undefined")
    _require_valid(ranked_lists)
    hits = sum(1 for rl in ranked_lists if rl.rank_of_valid <= k)
    return 100.0 * hits / len(ranked_lists)


@dataclass
class LabelDistribution:
    label: str
    count: int
    fraction_below: float  # score < theta_low
    fraction_above: float  # score > theta_high
    histogram: list[int]  # HISTOGRAM_BINS equal bins over [0, 1]


def confounder_distribution(
    ranked_lists: list[RankedList],
    theta_low: float = DEFAULT_THETA_LOW,
    theta_high: float = DEFAULT_THETA_HIGH,
) -> dict[str, LabelDistribution] | None:
    """Per-label score stats over candidates, valid included; None when any
    score is missing or outside [0, 1] (rank-based report only)."""
    buckets: dict[str, list[float]] = {}
    for rl in ranked_lists:
        for entry in rl.entries:
            if entry.score is None or not -_EPS <= entry.score <= 1.0 + _EPS:
                return None
            buckets.setdefault(entry.label, []).append(
                min(max(entry.score, 0.0), 1.0)
            )
    out: dict[str, LabelDistribution] = {}
    for label, scores in sorted(buckets.items()):
        histogram = [0] * HISTOGRAM_BINS
        below = 0
        above = 0
        for s in scores:
            histogram[min(int(s * HISTOGRAM_BINS), HISTOGRAM_BINS - 1)] += 1
            if s < theta_low:
                below += 1
            if s > theta_high:
                above += 1
        out[label] = LabelDistribution(
            label=label,
            count=len(scores),
            fraction_below=below / len(scores),
            fraction_above=above / len(scores),
            histogram=histogram,
        )
    return out


@dataclass
class EvalReport:
    mrr: float
    hit_ratio: dict[int, float]
    sample_count: int
    per_confounder: dict[str, LabelDistribution] | None
    thresholds: tuple[float, float]


def evaluate(
    ranked_lists: list[RankedList],
    ks: tuple[int, ...] = (1, 3),
    thresholds: tuple[float, float] = (DEFAULT_THETA_LOW, DEFAULT_THETA_HIGH),
) -> EvalReport:
    return EvalReport(
        mrr=mrr(ranked_lists),
        hit_ratio={k: hit_ratio(ranked_lists, k) for k in ks},
        sample_count=len(ranked_lists),
        per_confounder=confounder_distribution(ranked_lists, *thresholds),
        thresholds=thresholds,
    )


def report_records(report: EvalReport) -> list[dict]:
    """Line-record form of the report (summary first, then one row per label)."""
    records = [
        {
            "record": "summary",
            "mrr": report.mrr,
            "hit_ratio": {str(k): v for k, v in sorted(report.hit_ratio.items())},
            "sample_count": report.sample_count,
            "theta_low": report.thresholds[0],
            "theta_high": report.thresholds[1],
        }
    ]
    for label, dist in sorted((report.per_confounder or {}).items()):
        records.append(
            {
                "record": "distribution",
                "label": label,
                "count": dist.count,
                "fraction_below": dist.fraction_below,
                "fraction_above": dist.fraction_above,
                "histogram": dist.histogram,
            }
        )
    return records


_VALID_FIRST = (VALID_LABEL,)


def distribution_order(labels) -> list[str]:
    """Valid candidate row first, then confounder labels alphabetically."""
    rest = sorted(l for l in labels if l not in _VALID_FIRST)
    return [l for l in _VALID_FIRST if l in labels] + rest
