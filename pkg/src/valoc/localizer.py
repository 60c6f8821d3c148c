"""Convert per-segment labels into an answer time span and a cut spec.

The span starts at the earliest labeled-1 segment and ends at the latest
labeled-1 segment's start plus its duration; gaps between positives are
bridged.  When no segment is labeled positive, the single highest-
probability segment stands in (ties go to the smaller seg_id) and the
result is flagged as a fallback.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, TextIO

from .model import Span, VideoSegment


@dataclass(frozen=True)
class LocalizationResult:
    video_id: str
    span: Span
    per_segment: tuple[tuple[int, float, int], ...]  # (seg_id, prob, label)
    fallback_used: bool


def lookup_span(segments: list[VideoSegment] | tuple[VideoSegment, ...]) -> LocalizationResult:
    if not segments:
        raise ValueError("lookup_span needs at least one segment")
    for seg in segments:
        if seg.label is None or seg.predicted_prob is None:
            raise ValueError(f"segment {seg.seg_id}: missing prob/label")

    positives = [s for s in segments if s.label == 1]
    fallback = not positives
    if fallback:
        best = max(segments, key=lambda s: (s.predicted_prob, -s.seg_id))
        positives = [best]

    start = min(s.start_s for s in positives)
    last = max(positives, key=lambda s: (s.start_s, s.seg_id))
    span = Span(start_s=start, end_s=last.start_s + last.duration_s)

    per_segment = tuple(
        (s.seg_id, float(s.predicted_prob), int(s.label))
        for s in sorted(segments, key=lambda s: s.seg_id)
    )
    return LocalizationResult(
        video_id=segments[0].video_id,
        span=span,
        per_segment=per_segment,
        fallback_used=fallback,
    )


def emit_cut_spec(result: LocalizationResult, source_path: str) -> str:
    """One CSV record: ``video_id,source_path,start_s,end_s`` at 3 decimals."""
    return f"{result.video_id},{source_path},{result.span.start_s:.3f},{result.span.end_s:.3f}"


def write_cut_specs(results: Iterable[tuple[LocalizationResult, str]], fp: TextIO) -> None:
    """Write cut records in input order, LF line endings, newline-terminated."""
    for result, source_path in results:
        fp.write(emit_cut_spec(result, source_path) + "\n")
