import random
from pathlib import Path

import pytest

from valoc.builder import ProviderBundle, RawValSample
from valoc.model import Span, VideoSegment
from valoc.providers import MockVisualProvider, SimulatedChat, mock_embedder_build

BACKGROUND = [f"filler{i}" for i in range(40)]
MARKERS = ["insert", "needle", "press", "swab", "site", "firmly", "gauze", "sterile"]


def make_segments(starts_durations, video_id="v", labels=None, probs=None):
    segs = []
    for i, (start, dur) in enumerate(starts_durations):
        segs.append(
            VideoSegment(
                seg_id=i,
                video_id=video_id,
                start_s=float(start),
                duration_s=float(dur),
                subtitle=f"segment text {i}",
                label=None if labels is None else labels[i],
                predicted_prob=None if probs is None else probs[i],
            )
        )
    return tuple(segs)


def _srt_timestamp(t):
    total_ms = round(t * 1000)
    h, rest = divmod(total_ms, 3_600_000)
    m, rest = divmod(rest, 60_000)
    s, ms = divmod(rest, 1000)
    return f"{h:02d}:{m:02d}:{s:02d},{ms:03d}"


def write_srt(path, lines, seg_dur=5.0):
    blocks = []
    for i, text in enumerate(lines):
        blocks.append(
            f"{i + 1}\n{_srt_timestamp(i * seg_dur)} --> {_srt_timestamp((i + 1) * seg_dur)}\n{text}\n"
        )
    Path(path).write_text("\n".join(blocks), encoding="utf-8")


def make_synthetic_corpus(
    tmp_path, n_videos=20, n_segments=12, seg_dur=5.0, seed=0, n_test=6
):
    """Raw inputs with a planted in-span token signal.

    Subtitles inside the answer span share marker vocabulary across all
    videos, so in-span segments carry a fixed embedding direction that a
    trained detector can separate; out-of-span text is disjoint filler.
    """
    rng = random.Random(seed)
    subs_dir = tmp_path / "subs"
    subs_dir.mkdir(exist_ok=True)
    raws = []
    for v in range(n_videos):
        vid = f"vid{v:03d}"
        span_len = rng.randint(3, 5)
        span_start = rng.randint(0, n_segments - span_len)
        topic = f"topic{v}"
        theme = rng.sample(BACKGROUND, 10)  # videos keep a consistent voice
        lines = []
        for i in range(n_segments):
            if span_start <= i < span_start + span_len:
                words = rng.sample(MARKERS, 6) + [f"step{i}"]
            else:
                words = rng.sample(theme, 6) + [f"noise{v}x{i}"]
            rng.shuffle(words)
            lines.append(" ".join(words))
        sub_path = subs_dir / f"{vid}.srt"
        write_srt(sub_path, lines, seg_dur)
        raws.append(
            RawValSample(
                sample_id=f"s{v:03d}",
                video_id=vid,
                question=f"How do you handle {topic} safely?",
                subtitle_file=str(sub_path),
                answer_span=Span(span_start * seg_dur, (span_start + span_len) * seg_dur),
                lang="en",
                split="test" if v >= n_videos - n_test else "train",
            )
        )
    return raws


def mock_bundle(seed=0, dim=32, visual_dim=16):
    return ProviderBundle(
        chat=SimulatedChat(seed=seed),
        embedder=mock_embedder_build(seed, dim),
        visual=MockVisualProvider(seed, visual_dim),
    )


@pytest.fixture
def bundle():
    return mock_bundle()
