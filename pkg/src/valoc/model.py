"""Shared value objects for the localization pipeline.

All types are immutable after construction and safe to share between
threads.  Invariants are reported by :func:`validate_sample` rather than
enforced in constructors, so invalid data read from disk can be inspected
and reported instead of crashing mid-load.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional

YES = "yes"
NO = "no"
SPLITS = ("train", "test")
LANGS = ("en", "zh")


@dataclass(frozen=True)
class SubtitleCue:
    """One timed caption line; times are real-valued seconds."""

    index: int
    start_s: float
    end_s: float
    text: str


@dataclass(frozen=True)
class VideoSegment:
    """A subtitle-aligned unit of one video.

    ``description`` and ``context_ids`` stay unset until the rewriting and
    searching stages run; ``label``/``predicted_prob`` until labeling or
    prediction.  ``predicted_prob`` is kept next to ``label`` so the
    no-positive fallback in the localizer has a score to rank by.
    """

    seg_id: int
    video_id: str
    start_s: float
    duration_s: float
    subtitle: str
    description: Optional[str] = None
    context_ids: tuple[int, ...] = ()
    visual_feature_ref: Optional[int] = None
    label: Optional[int] = None
    predicted_prob: Optional[float] = None

    @property
    def end_s(self) -> float:
        return self.start_s + self.duration_s


@dataclass(frozen=True)
class DialogueTurn:
    """One clarification round: a follow-up question and its yes/no answer."""

    question: str
    answer: str


@dataclass(frozen=True)
class Dialogue:
    initial_question: str
    turns: tuple[DialogueTurn, ...] = ()

    def with_turn(self, turn: DialogueTurn) -> "Dialogue":
        return replace(self, turns=self.turns + (turn,))


@dataclass(frozen=True)
class Span:
    """A time interval in seconds; the answer and the ground truth are spans."""

    start_s: float
    end_s: float

    @property
    def length_s(self) -> float:
        return self.end_s - self.start_s


@dataclass(frozen=True)
class InValSample:
    """One question over one video, with everything the pipeline attaches."""

    sample_id: str
    video_id: str
    question: str
    dialogue: Dialogue
    segments: tuple[VideoSegment, ...]
    question_description: Optional[str] = None
    answer_span: Optional[Span] = None
    split: str = "train"
    lang: str = "en"


@dataclass(frozen=True)
class PipelineConfig:
    """Run-wide knobs; defaults follow the reference configuration.

    ``rounds=0`` is accepted and means the clarification dialogue is
    disabled (equivalent to ``chatting=False``).  Any toggle set to False
    must still yield a runnable pipeline.
    """

    rounds: int = 3
    top_k: int = 3
    relevance_epochs: int = 2
    detector_epochs: int = 8
    learning_rate: float = 5e-5
    threshold: float = 0.5
    seed: int = 0
    chatting: bool = True
    rewriting: bool = True
    searching: bool = True
    embedding_dim: int = 64
    visual_dim: int = 32

    @classmethod
    def from_dict(cls, data: dict) -> "PipelineConfig":
        toggles = data.pop("module_toggles", None) or {}
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config fields: {sorted(unknown)}")
        cfg = cls(**data, **{k: bool(v) for k, v in toggles.items()})
        return cfg

    def to_dict(self) -> dict:
        return {
            "rounds": self.rounds,
            "top_k": self.top_k,
            "relevance_epochs": self.relevance_epochs,
            "detector_epochs": self.detector_epochs,
            "learning_rate": self.learning_rate,
            "threshold": self.threshold,
            "seed": self.seed,
            "chatting": self.chatting,
            "rewriting": self.rewriting,
            "searching": self.searching,
            "embedding_dim": self.embedding_dim,
            "visual_dim": self.visual_dim,
        }


def overlap_seconds(a_start: float, a_end: float, b_start: float, b_end: float) -> float:
    """Length of the intersection of two intervals (0 when disjoint)."""
    return max(0.0, min(a_end, b_end) - max(a_start, b_start))


def validate_sample(sample: InValSample, cfg: Optional[PipelineConfig] = None) -> list[str]:
    """Check every documented invariant; returns one message per violation.

    With ``cfg=None`` the config-dependent caps (dialogue rounds, context
    size) are skipped, which is what dataset loading wants: a file built
    under one configuration must load under another.
    """
    v: list[str] = []

    if sample.split not in SPLITS:
        v.append(f"split: must be one of {SPLITS}, got {sample.split!r}")
    if sample.lang not in LANGS:
        v.append(f"lang: must be one of {LANGS}, got {sample.lang!r}")

    seen_ids: set[int] = set()
    prev_start = None
    for i, seg in enumerate(sample.segments):
        where = f"segments[{i}]"
        if seg.video_id != sample.video_id:
            v.append(f"{where}.video_id: {seg.video_id!r} != sample video_id {sample.video_id!r}")
        if seg.start_s < 0:
            v.append(f"{where}.start_s: must be >= 0")
        if not seg.duration_s > 0:
            v.append(f"{where}.duration_s: must be > 0")
        if not seg.subtitle:
            v.append(f"{where}.subtitle: must be non-empty")
        if seg.seg_id in seen_ids:
            v.append(f"{where}.seg_id: duplicate id {seg.seg_id}")
        seen_ids.add(seg.seg_id)
        if seg.seg_id in seg.context_ids:
            v.append(f"{where}.context_ids: contains own seg_id {seg.seg_id}")
        if cfg is not None and len(seg.context_ids) > cfg.top_k:
            v.append(f"{where}.context_ids: {len(seg.context_ids)} entries exceeds top_k={cfg.top_k}")
        if seg.label is not None and seg.label not in (0, 1):
            v.append(f"{where}.label: must be 0 or 1, got {seg.label!r}")
        if seg.predicted_prob is not None and not 0.0 <= seg.predicted_prob <= 1.0:
            v.append(f"{where}.predicted_prob: must be in [0, 1], got {seg.predicted_prob!r}")
        if prev_start is not None and seg.start_s < prev_start:
            v.append("segments: not sorted by start_s")
            prev_start = None  # report once
        else:
            prev_start = seg.start_s

    for i, turn in enumerate(sample.dialogue.turns):
        if turn.answer not in (YES, NO):
            v.append(f"dialogue.turns[{i}].answer: must be 'yes' or 'no', got {turn.answer!r}")
    if cfg is not None and len(sample.dialogue.turns) > cfg.rounds:
        v.append(
            f"dialogue.turns: {len(sample.dialogue.turns)} turns exceeds round cap R={cfg.rounds}"
        )

    span = sample.answer_span
    if span is not None:
        if not (0 <= span.start_s < span.end_s):
            v.append("answer_span: must satisfy 0 <= start_s < end_s")
        elif sample.segments and not any(
            overlap_seconds(span.start_s, span.end_s, s.start_s, s.end_s) > 0
            for s in sample.segments
        ):
            v.append("answer_span: does not overlap any segment")

    return v
