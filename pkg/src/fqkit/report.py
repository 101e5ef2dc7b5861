"""Human-readable tables, CSV export, and histogram figures.

The eval report is emitted three ways: line records for machines, an
aligned text table for people, and histogram data as CSV with a
rendered PNG alongside. Dataset statistics follow the usual corpus
accounting layout: dialogs, turns, token averages, then per-confounder
counts with per-dialog averages.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

from .corpus import CONFOUNDER_LABELS, Conversation, Sample, VALID_LABEL  # noqa: E402
from .evaluation import HISTOGRAM_BINS, EvalReport, distribution_order  # noqa: E402
from .tokenizer import tokenize  # noqa: E402


def format_eval_table(report: EvalReport) -> str:
    lines = ["Ranking evaluation", "=================="]
    lines.append(f"Samples            {report.sample_count}")
    lines.append(f"MRR                {report.mrr:.4f}")
    for k in sorted(report.hit_ratio):
        lines.append(f"HitRatio@{k:<2}        {report.hit_ratio[k]:.1f}")
    if report.per_confounder is None:
        lines.append("")
        lines.append("Score distributions unavailable (scores missing or outside [0,1]);")
        lines.append("rank-based metrics only.")
        return "\n".join(lines) + "\n"
    lo, hi = report.thresholds
    lines.append("")
    lines.append(f"{'Label':<22}{'Count':>8}{f'  <{lo}':>10}{f'  >{hi}':>10}")
    lines.append("-" * 50)
    for label in distribution_order(report.per_confounder):
        dist = report.per_confounder[label]
        lines.append(
            f"{label:<22}{dist.count:>8}{dist.fraction_below:>10.3f}{dist.fraction_above:>10.3f}"
        )
    return "\n".join(lines) + "\n"


def write_histogram_csv(report: EvalReport, path: str) -> None:
    """One row per (label, bin): label, bin_low, bin_high, count."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["label", "bin_low", "bin_high", "count"])
        for label in distribution_order(report.per_confounder or {}):
            dist = report.per_confounder[label]
            for i, count in enumerate(dist.histogram):
                writer.writerow(
                    [label, f"{i / HISTOGRAM_BINS:.2f}", f"{(i + 1) / HISTOGRAM_BINS:.2f}", count]
                )


def render_histogram_figure(report: EvalReport, path: str) -> None:
    """Grid of per-label score histograms, saved as one image."""
    labels = distribution_order(report.per_confounder or {})
    if not labels:
        return
    cols = 2
    rows = (len(labels) + cols - 1) // cols
    fig, axes = plt.subplots(rows, cols, figsize=(9, 2.6 * rows), squeeze=False)
    edges = [i / HISTOGRAM_BINS for i in range(HISTOGRAM_BINS)]
    flat_axes = [ax for row in axes for ax in row]
    for ax, label in zip(flat_axes, labels):
        dist = report.per_confounder[label]
        ax.bar(edges, dist.histogram, width=1 / HISTOGRAM_BINS, align="edge",
               color="tab:green" if label == VALID_LABEL else "tab:blue")
        ax.set_title(f"{label} (n={dist.count})", fontsize=9)
        ax.set_xlim(0, 1)
        ax.tick_params(labelsize=7)
    for ax in flat_axes[len(labels):]:
        ax.axis("off")
    fig.suptitle("Candidate score distributions", fontsize=11)
    fig.tight_layout(rect=(0, 0, 1, 0.97))
    fig.savefig(path, dpi=120)
    plt.close(fig)


# --- dataset statistics -------------------------------------------------------


@dataclass
class DatasetStats:
    dialogs: int
    turns: int
    samples: int
    tokens_per_question: float
    tokens_per_answer: float
    confounder_counts: dict[str, int]
    total_confounders: int

    def per_dialog(self, count: int) -> float:
        return count / self.dialogs if self.dialogs else 0.0


_STATS_ROW_TITLES = {
    "paraphrase": "Paraphrase",
    "irrelevant_entity": "Irrelevant entity",
    "partial_entity": "Partial entity match",
    "irrelevant_context": "Irrelevant context",
    "asr_error": "ASR error",
    "random_question": "Random utterance",
    "history_duplicate": "Duplication of dialog history",
}


def collect_stats(
    conversations: list[Conversation],
    samples: list[Sample],
    fold_partial: bool = False,
) -> DatasetStats:
    """Corpus and confounder accounting.

    `fold_partial` reports partial-entity swaps inside the irrelevant-entity
    row (the two categories share a generator family).
    """
    turns = sum(len(c.turns) for c in conversations)
    question_tokens = 0
    answer_tokens = 0
    for conv in conversations:
        for turn in conv.turns:
            question_tokens += len(tokenize(turn.question_rewritten))
            answer_tokens += len(tokenize(turn.answer))
    counts = {label: 0 for label in CONFOUNDER_LABELS}
    for sample in samples:
        for cand in sample.candidates:
            if cand.label != VALID_LABEL:
                counts[cand.label] += 1
    if fold_partial:
        counts["irrelevant_entity"] += counts.pop("partial_entity")
    return DatasetStats(
        dialogs=len(conversations),
        turns=turns,
        samples=len(samples),
        tokens_per_question=question_tokens / turns if turns else 0.0,
        tokens_per_answer=answer_tokens / turns if turns else 0.0,
        confounder_counts=counts,
        total_confounders=sum(counts.values()),
    )


def format_stats_table(stats: DatasetStats) -> str:
    lines = []
    lines.append(f"{'':<34}{'Count':>12}{'Per dialog':>14}")
    lines.append("-" * 60)
    lines.append(f"{'Dialogs':<34}{stats.dialogs:>12,}")
    lines.append(
        f"{'Turns (question-answer pairs)':<34}{stats.turns:>12,}{stats.per_dialog(stats.turns):>14.2f}"
    )
    lines.append(f"{'Samples':<34}{stats.samples:>12,}{stats.per_dialog(stats.samples):>14.2f}")
    lines.append(f"{'Tokens per question':<34}{stats.tokens_per_question:>12.2f}")
    lines.append(f"{'Tokens per answer':<34}{stats.tokens_per_answer:>12.2f}")
    lines.append("")
    lines.append("Confounders")
    lines.append("-" * 60)
    for label in CONFOUNDER_LABELS:
        if label not in stats.confounder_counts:
            continue
        count = stats.confounder_counts[label]
        title = _STATS_ROW_TITLES[label]
        lines.append(f"{title:<34}{count:>12,}{stats.per_dialog(count):>14.2f}")
    lines.append(
        f"{'Total':<34}{stats.total_confounders:>12,}{stats.per_dialog(stats.total_confounders):>14.2f}"
    )
    return "\n".join(lines) + "\n"


def stats_record(stats: DatasetStats) -> dict:
    return {
        "dialogs": stats.dialogs,
        "turns": stats.turns,
        "samples": stats.samples,
        "tokens_per_question": round(stats.tokens_per_question, 4),
        "tokens_per_answer": round(stats.tokens_per_answer, 4),
        "confounders": dict(sorted(stats.confounder_counts.items())),
        "total_confounders": stats.total_confounders,
    }
