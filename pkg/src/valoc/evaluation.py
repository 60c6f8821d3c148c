"""Span-overlap metrics, a random baseline, and report formatting.

Metrics follow the standard moment-retrieval convention: per-sample
temporal IoU, its mean over the test set, and recall at IoU thresholds
0.3 / 0.5 / 0.7 (the system emits one span per sample, so recall is R@1).
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence, TextIO

from .model import InValSample, Span

DEFAULT_MUS = (0.3, 0.5, 0.7)


@dataclass(frozen=True)
class EvalReport:
    n_samples: int
    miou: float
    recall_at: Mapping[float, float]
    per_sample: tuple[tuple[str, float], ...]


def interval_iou(a: Span, b: Span) -> float:
    """Temporal intersection over union; touching spans count as disjoint."""
    inter = max(0.0, min(a.end_s, b.end_s) - max(a.start_s, b.start_s))
    if inter == 0.0:
        return 0.0
    union = (a.end_s - a.start_s) + (b.end_s - b.start_s) - inter
    return inter / union


def evaluate(
    predictions: Sequence[tuple[str, Span]],
    truths: Sequence[tuple[str, Span]],
    mus: Sequence[float] = DEFAULT_MUS,
) -> EvalReport:
    truth_by_id = {sid: span for sid, span in truths}
    per_sample = []
    for sid, pred in predictions:
        if sid not in truth_by_id:
            raise ValueError(f"no ground truth for sample {sid!r}")
        per_sample.append((sid, interval_iou(pred, truth_by_id[sid])))
    n = len(per_sample)
    miou = sum(iou for _, iou in per_sample) / n if n else 0.0
    recall_at = {
        mu: (sum(1 for _, iou in per_sample if iou >= mu) / n if n else 0.0) for mu in mus
    }
    return EvalReport(
        n_samples=n, miou=miou, recall_at=recall_at, per_sample=tuple(per_sample)
    )


def random_guess(samples: Sequence[InValSample], seed: int) -> list[tuple[str, Span]]:
    """Uniform contiguous segment-block baseline.

    Picks a start segment uniformly, then an end segment at or after it,
    and converts the block to a span the same way the localizer does.
    The protocol and seed should always be reported alongside the scores.
    """
    rng = random.Random(seed)
    predictions = []
    for sample in samples:
        n = len(sample.segments)
        if n == 0:
            raise ValueError(f"sample {sample.sample_id!r} has no segments")
        i = rng.randrange(n)
        j = rng.randrange(i, n)
        first, last = sample.segments[i], sample.segments[j]
        predictions.append(
            (sample.sample_id, Span(first.start_s, last.start_s + last.duration_s))
        )
    return predictions


def random_guess_label(seed: int) -> str:
    """Protocol name + seed, for report rows (the baseline is a protocol
    choice, so scores are only meaningful alongside it)."""
    return f"RandomGuess(uniform contiguous block, seed={seed})"


def format_report(report: EvalReport, method: str = "method") -> str:
    """One table row in the conventional layout, values as percentages."""
    mus = sorted(report.recall_at)
    header = f"{'Method':<28}" + "".join(f"IoU={mu:<6}" for mu in mus) + "mIoU"
    row = f"{method:<28}" + "".join(
        f"{report.recall_at[mu] * 100:<10.2f}" for mu in mus
    ) + f"{report.miou * 100:.2f}"
    return header + "\n" + row


def write_per_sample(report: EvalReport, fp: TextIO) -> None:
    """Machine-readable ``sample_id,iou`` lines."""
    for sid, iou in report.per_sample:
        fp.write(f"{sid},{iou:.6f}\n")
