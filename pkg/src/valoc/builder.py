"""Dataset reconstruction: raw (question, subtitles, span) inputs become
fully interactive samples, persisted as JSON Lines.

Each sample runs ingest -> clarification dialogue -> question/subtitle
rewriting -> context search -> binary labeling.  A segment is labeled 1
iff the ground-truth span covers more than half of it (threshold
configurable and recorded in the manifest).  Failures are isolated per
sample; the corpus file only ever contains complete samples.  With a warm
response cache a rerun issues zero provider calls and writes a
byte-identical file.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

from .errors import DatasetError, ValocError
from .ingest import align_segments, merge_dedupe, parse_subtitles
from .interact import engine
from .model import (
    Dialogue,
    DialogueTurn,
    InValSample,
    PipelineConfig,
    Span,
    VideoSegment,
    overlap_seconds,
    validate_sample,
)
from .providers import ChatProvider, TextEmbedder, VisualProvider
from .relevance import RelevanceHead, top_k_context

log = logging.getLogger(__name__)

SPAN_DESCRIPTIONS = "span_descriptions"
ALL_DESCRIPTIONS = "all_descriptions"

LABEL_OVERLAP_THRESHOLD = 0.5


@dataclass(frozen=True)
class RawValSample:
    """One pre-interaction input: a question, a subtitle file, a true span."""

    sample_id: str
    video_id: str
    question: str
    subtitle_file: str
    answer_span: Span
    lang: str = "en"
    split: str = "train"


@dataclass(frozen=True)
class ProviderBundle:
    chat: ChatProvider
    embedder: TextEmbedder
    visual: Optional[VisualProvider] = None

    def cache_stats(self) -> dict:
        stats = {}
        for name, p in (("chat", self.chat), ("embedder", self.embedder)):
            made = getattr(p, "calls_made", None)
            saved = getattr(p, "calls_saved", None)
            if made is not None:
                stats[name] = {"calls_made": made, "calls_saved": saved}
        return stats


@dataclass
class BuildManifest:
    config: dict
    providers: dict
    description_spans_mode: str
    label_overlap_threshold: float
    statuses: dict[str, tuple[str, str]] = field(default_factory=dict)  # id -> (status, reason)
    cache: dict = field(default_factory=dict)

    def counts(self) -> dict[str, int]:
        out = {"built": 0, "skipped": 0, "failed": 0}
        for status, _ in self.statuses.values():
            out[status] += 1
        return out

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "providers": self.providers,
            "description_spans_mode": self.description_spans_mode,
            "label_overlap_threshold": self.label_overlap_threshold,
            "counts": self.counts(),
            "statuses": {k: {"status": s, "reason": r} for k, (s, r) in self.statuses.items()},
            "cache": self.cache,
        }

    def save(self, path: str | Path) -> None:
        Path(path).write_text(
            json.dumps(self.to_dict(), indent=2, sort_keys=True, ensure_ascii=False) + "\n",
            encoding="utf-8",
        )


def segment_label(seg: VideoSegment, span: Span, threshold: float = LABEL_OVERLAP_THRESHOLD) -> int:
    """1 iff the answer span covers strictly more than ``threshold`` of the segment."""
    covered = overlap_seconds(seg.start_s, seg.end_s, span.start_s, span.end_s)
    return int(covered > threshold * seg.duration_s)


def assign_labels(
    segments: tuple[VideoSegment, ...], span: Span, threshold: float = LABEL_OVERLAP_THRESHOLD
) -> tuple[VideoSegment, ...]:
    return tuple(replace(s, label=segment_label(s, span, threshold)) for s in segments)


def build_sample(
    raw: RawValSample,
    cfg: PipelineConfig,
    providers: ProviderBundle,
    relevance_head: RelevanceHead | None = None,
    description_spans_mode: str = SPAN_DESCRIPTIONS,
    label_overlap_threshold: float = LABEL_OVERLAP_THRESHOLD,
) -> InValSample:
    """Run every interactive stage over one raw sample.

    ``description_spans_mode`` controls what the questioning agent sees as
    candidate descriptions: the subtitles inside the ground-truth span
    (the truth guides the dialogue) or all subtitles of the video.
    """
    stage = "ingest"
    try:
        data = Path(raw.subtitle_file).read_bytes()
        doc = parse_subtitles(data)
        segments = align_segments(merge_dedupe(doc), raw.video_id)

        stage = "chatting"
        if description_spans_mode == SPAN_DESCRIPTIONS:
            guided = [
                s for s in segments
                if segment_label(s, raw.answer_span, label_overlap_threshold)
            ]
            spans_blob = engine.subtitles_blob(guided or segments)
        elif description_spans_mode == ALL_DESCRIPTIONS:
            spans_blob = engine.subtitles_blob(segments)
        else:
            raise ValueError(f"unknown description_spans_mode {description_spans_mode!r}")
        dialogue = engine.run_chat(
            raw.question,
            segments,
            cfg.rounds,
            providers.chat,
            lang=raw.lang,
            chatting=cfg.chatting,
            description_spans=spans_blob,
        )

        stage = "rewriting"
        if cfg.rewriting:
            q_desc = engine.rewrite_question(dialogue, providers.chat, lang=raw.lang)
            descriptions = engine.rewrite_subtitles(segments, providers.chat, lang=raw.lang)
            segments = tuple(
                replace(s, description=d) for s, d in zip(segments, descriptions)
            )
        else:
            q_desc = None

        stage = "searching"
        if len(segments) >= 2:
            segments = top_k_context(
                segments,
                raw.question,
                relevance_head,
                cfg.top_k,
                embedder=providers.embedder,
                searching=cfg.searching,
            )

        stage = "labeling"
        segments = assign_labels(segments, raw.answer_span, label_overlap_threshold)
        if providers.visual is not None:
            segments = tuple(replace(s, visual_feature_ref=s.seg_id) for s in segments)

        sample = InValSample(
            sample_id=raw.sample_id,
            video_id=raw.video_id,
            question=raw.question,
            dialogue=dialogue,
            segments=segments,
            question_description=q_desc,
            answer_span=raw.answer_span,
            split=raw.split,
            lang=raw.lang,
        )

        stage = "validate"
        violations = validate_sample(sample, cfg)
        if violations:
            raise ValocError("; ".join(violations))
        return sample
    except ValocError as e:
        raise ValocError(f"{stage}: {e}") from e
    except (OSError, ValueError) as e:
        raise ValocError(f"{stage}: {e}") from e


def build_corpus(
    raws: list[RawValSample],
    cfg: PipelineConfig,
    providers: ProviderBundle,
    out_path: str | Path,
    relevance_head: RelevanceHead | None = None,
    description_spans_mode: str = SPAN_DESCRIPTIONS,
    label_overlap_threshold: float = LABEL_OVERLAP_THRESHOLD,
) -> BuildManifest:
    """Build every sample, then write the dataset file once, in id order.

    Per-sample failures are recorded and excluded from the file; the
    manifest covers every input exactly once.
    """
    manifest = BuildManifest(
        config=cfg.to_dict(),
        providers={
            "chat": getattr(providers.chat, "model_name", "?"),
            "embedder": getattr(providers.embedder, "model_name", "?"),
        },
        description_spans_mode=description_spans_mode,
        label_overlap_threshold=label_overlap_threshold,
    )
    built: list[InValSample] = []
    for raw in sorted(raws, key=lambda r: r.sample_id):
        if raw.sample_id in manifest.statuses:
            manifest.statuses[raw.sample_id] = ("skipped", "duplicate sample_id")
            continue
        try:
            sample = build_sample(
                raw, cfg, providers,
                relevance_head=relevance_head,
                description_spans_mode=description_spans_mode,
                label_overlap_threshold=label_overlap_threshold,
            )
        except ValocError as e:
            log.warning("sample %s failed: %s", raw.sample_id, e)
            manifest.statuses[raw.sample_id] = ("failed", str(e))
            continue
        manifest.statuses[raw.sample_id] = ("built", "")
        built.append(sample)
    store_dataset(built, out_path)
    manifest.cache = providers.cache_stats()
    return manifest


# --- persistence -----------------------------------------------------------

_SEGMENT_FIELDS = {
    "seg_id", "start_s", "duration_s", "subtitle", "description",
    "context_ids", "visual_feature_ref", "label",
}
_SAMPLE_FIELDS = {
    "sample_id", "video_id", "lang", "split", "question", "dialogue",
    "question_description", "segments", "answer_span",
}


def _sample_to_dict(sample: InValSample) -> dict:
    return {
        "sample_id": sample.sample_id,
        "video_id": sample.video_id,
        "lang": sample.lang,
        "split": sample.split,
        "question": sample.question,
        "dialogue": [{"q": t.question, "a": t.answer} for t in sample.dialogue.turns],
        "question_description": sample.question_description,
        "segments": [
            {
                "seg_id": s.seg_id,
                "start_s": s.start_s,
                "duration_s": s.duration_s,
                "subtitle": s.subtitle,
                "description": s.description,
                "context_ids": list(s.context_ids),
                "visual_feature_ref": s.visual_feature_ref,
                "label": s.label,
            }
            for s in sample.segments
        ],
        "answer_span": (
            {"start_s": sample.answer_span.start_s, "end_s": sample.answer_span.end_s}
            if sample.answer_span is not None
            else None
        ),
    }


def store_dataset(samples: list[InValSample], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for sample in samples:
            f.write(json.dumps(_sample_to_dict(sample), sort_keys=True, ensure_ascii=False))
            f.write("\n")


def _require(record: dict, key: str, line: int):
    if key not in record:
        raise DatasetError(f"missing field {key!r}", line)
    return record[key]


def _sample_from_dict(record: dict, line: int) -> InValSample:
    unknown = set(record) - _SAMPLE_FIELDS
    if unknown:
        raise DatasetError(f"unknown fields {sorted(unknown)}", line)
    segments = []
    video_id = _require(record, "video_id", line)
    for i, s in enumerate(_require(record, "segments", line)):
        unknown = set(s) - _SEGMENT_FIELDS
        if unknown:
            raise DatasetError(f"segments[{i}]: unknown fields {sorted(unknown)}", line)
        label = s.get("label")
        if label is not None and label not in (0, 1):
            raise DatasetError(f"segments[{i}].label: must be 0 or 1, got {label!r}", line)
        segments.append(
            VideoSegment(
                seg_id=_require(s, "seg_id", line),
                video_id=video_id,
                start_s=float(_require(s, "start_s", line)),
                duration_s=float(_require(s, "duration_s", line)),
                subtitle=_require(s, "subtitle", line),
                description=s.get("description"),
                context_ids=tuple(s.get("context_ids") or ()),
                visual_feature_ref=s.get("visual_feature_ref"),
                label=label,
            )
        )
    turns = tuple(
        DialogueTurn(question=t["q"], answer=t["a"])
        for t in _require(record, "dialogue", line)
    )
    span = record.get("answer_span")
    return InValSample(
        sample_id=_require(record, "sample_id", line),
        video_id=video_id,
        question=_require(record, "question", line),
        dialogue=Dialogue(initial_question=record["question"], turns=turns),
        segments=tuple(segments),
        question_description=record.get("question_description"),
        answer_span=Span(float(span["start_s"]), float(span["end_s"])) if span else None,
        split=_require(record, "split", line),
        lang=_require(record, "lang", line),
    )


def load_dataset(path: str | Path) -> list[InValSample]:
    """Load a JSONL dataset; any schema violation names its line.

    A missing segment description is legal and means downstream stages
    fall back to the raw subtitle.
    """
    samples = []
    with open(path, encoding="utf-8") as f:
        for line_no, raw_line in enumerate(f, 1):
            if not raw_line.strip():
                continue
            try:
                record = json.loads(raw_line)
            except json.JSONDecodeError as e:
                raise DatasetError(f"invalid JSON: {e}", line_no) from None
            sample = _sample_from_dict(record, line_no)
            violations = validate_sample(sample)
            if violations:
                raise DatasetError("; ".join(violations), line_no)
            samples.append(sample)
    return samples


def corpus_stats(samples: list[InValSample]) -> dict:
    """Headline dataset statistics (videos, questions, lengths, split sizes)."""
    videos = {}
    for s in samples:
        videos.setdefault(s.video_id, s.segments)
    n_q = len(samples)
    video_lengths = [
        (segs[-1].start_s + segs[-1].duration_s) if segs else 0.0 for segs in videos.values()
    ]
    subtitle_words = [
        sum(len(seg.subtitle.split()) for seg in s.segments) for s in samples
    ]
    answer_lengths = [s.answer_span.length_s for s in samples if s.answer_span]
    mean = lambda xs: (sum(xs) / len(xs)) if xs else 0.0
    return {
        "videos": len(videos),
        "questions": n_q,
        "avg_video_len_s": mean(video_lengths),
        "avg_subtitle_words": mean(subtitle_words),
        "avg_answer_len_s": mean(answer_lengths),
        "train": sum(1 for s in samples if s.split == "train"),
        "test": sum(1 for s in samples if s.split == "test"),
    }


def load_raw_samples(path: str | Path) -> list[RawValSample]:
    """Read builder inputs (JSONL, one raw sample per line)."""
    raws = []
    with open(path, encoding="utf-8") as f:
        for line_no, raw_line in enumerate(f, 1):
            if not raw_line.strip():
                continue
            try:
                r = json.loads(raw_line)
                span = r["answer_span"]
                raws.append(
                    RawValSample(
                        sample_id=r["sample_id"],
                        video_id=r["video_id"],
                        question=r["question"],
                        subtitle_file=r["subtitle_file"],
                        answer_span=Span(float(span["start_s"]), float(span["end_s"])),
                        lang=r.get("lang", "en"),
                        split=r.get("split", "train"),
                    )
                )
            except (json.JSONDecodeError, KeyError, TypeError) as e:
                raise DatasetError(f"bad raw sample: {e}", line_no) from None
    return raws
