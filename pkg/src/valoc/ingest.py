"""Subtitle ingestion: SRT/VTT parsing, cue merging, segment alignment.

Input must be UTF-8 (a BOM is tolerated, other encodings are rejected
rather than guessed).  Timestamps are ``HH:MM:SS,mmm`` for SRT and
``[HH:]MM:SS.mmm`` for VTT and convert to seconds at millisecond
precision; the canonical writer emits SRT with LF line endings and comma
millisecond separators, so parse -> serialize -> parse is the identity on
the cue list.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .errors import IngestError, SubtitleParseError
from .model import SubtitleCue, VideoSegment

SRT = "srt"
VTT = "vtt"

_TAG_RE = re.compile(r"<[^>]*>")
_SRT_TIME_RE = re.compile(r"^(\d{2,}):(\d{2}):(\d{2}),(\d{3})$")
_VTT_TIME_RE = re.compile(r"^(?:(\d{2,}):)?(\d{2}):(\d{2})\.(\d{3})$")


@dataclass(frozen=True)
class RawSubtitleDocument:
    """Parse result before merging; cues may overlap or repeat."""

    format: str
    cues: tuple[SubtitleCue, ...]


def _parse_timestamp(token: str, pattern: re.Pattern, line_no: int) -> float:
    m = pattern.match(token)
    if not m:
        raise SubtitleParseError(f"malformed timestamp {token!r}", line_no)
    h, mi, s, ms = (int(g) if g is not None else 0 for g in m.groups())
    if mi >= 60 or s >= 60:
        raise SubtitleParseError(f"timestamp out of range {token!r}", line_no)
    return h * 3600 + mi * 60 + s + ms / 1000.0


def _parse_timing_line(line: str, pattern: re.Pattern, line_no: int) -> tuple[float, float]:
    if "-->" not in line:
        raise SubtitleParseError(f"expected timing line, got {line!r}", line_no)
    left, _, right = line.partition("-->")
    # VTT allows cue settings after the end timestamp
    end_token = right.strip().split(" ")[0] if right.strip() else ""
    start = _parse_timestamp(left.strip(), pattern, line_no)
    end = _parse_timestamp(end_token, pattern, line_no)
    if not start < end:
        raise SubtitleParseError(f"cue end {end_token!r} not after start", line_no)
    return start, end


def _clean_text(lines: list[str]) -> str:
    joined = " ".join(_TAG_RE.sub("", ln).strip() for ln in lines)
    return " ".join(joined.split())


def _blocks(lines: list[str]) -> list[tuple[int, list[str]]]:
    """Group lines into blank-separated blocks, keeping 1-based line numbers."""
    blocks = []
    current: list[str] = []
    start = 0
    for no, line in enumerate(lines, 1):
        if line.strip():
            if not current:
                start = no
            current.append(line)
        elif current:
            blocks.append((start, current))
            current = []
    if current:
        blocks.append((start, current))
    return blocks


def _parse_srt(lines: list[str]) -> list[SubtitleCue]:
    cues = []
    for start_no, block in _blocks(lines):
        i = 0
        if "-->" not in block[0]:
            # leading counter line; the file numbering is ignored in favor
            # of sequential ordinals so round trips are canonical
            if not block[0].strip().isdigit():
                raise SubtitleParseError(f"expected cue number, got {block[0]!r}", start_no)
            i = 1
            if i >= len(block):
                raise SubtitleParseError("cue without timing line", start_no)
        start, end = _parse_timing_line(block[i].strip(), _SRT_TIME_RE, start_no + i)
        text = _clean_text(block[i + 1 :])
        if text:
            cues.append(SubtitleCue(len(cues) + 1, start, end, text))
    return cues


def _parse_vtt(lines: list[str]) -> list[SubtitleCue]:
    # drop everything through the WEBVTT header block
    body_at = 0
    for i, line in enumerate(lines):
        if not line.strip():
            body_at = i + 1
            break
    else:
        body_at = len(lines)
    cues = []
    offset = body_at
    for start_no, block in _blocks(lines[body_at:]):
        start_no += offset
        head = block[0].strip()
        if head.startswith(("NOTE", "STYLE", "REGION")):
            continue
        i = 0
        if "-->" not in block[0]:
            i = 1  # optional cue identifier
            if i >= len(block):
                continue
        start, end = _parse_timing_line(block[i].strip(), _VTT_TIME_RE, start_no + i)
        text = _clean_text(block[i + 1 :])
        if text:
            cues.append(SubtitleCue(len(cues) + 1, start, end, text))
    return cues


def parse_subtitles(data: bytes, format_hint: str | None = None) -> RawSubtitleDocument:
    """Parse raw SRT/VTT bytes into cues in file order.

    Format is taken from ``format_hint`` when given, otherwise detected
    from a leading ``WEBVTT`` header (SRT assumed otherwise).
    """
    try:
        text = data.decode("utf-8-sig")
    except UnicodeDecodeError as e:
        raise SubtitleParseError(f"input is not valid UTF-8: {e}") from None
    lines = text.splitlines()

    fmt = format_hint
    if fmt is None:
        first = next((ln for ln in lines if ln.strip()), "")
        fmt = VTT if first.lstrip().startswith("WEBVTT") else SRT
    if fmt not in (SRT, VTT):
        raise SubtitleParseError(f"unknown subtitle format {fmt!r}")

    cues = _parse_vtt(lines) if fmt == VTT else _parse_srt(lines)
    if not cues:
        raise SubtitleParseError("no cues")
    return RawSubtitleDocument(format=fmt, cues=tuple(cues))


def _mergeable(a: SubtitleCue, b: SubtitleCue) -> bool:
    # identical or rolling-caption style, where one text extends the other
    return a.text == b.text or b.text.startswith(a.text) or a.text.startswith(b.text)


def merge_dedupe(doc: RawSubtitleDocument) -> tuple[SubtitleCue, ...]:
    """Sort cues and collapse auto-caption artifacts.

    Consecutive cues with identical text, or where one text is a prefix of
    the other (rolling captions), merge into one cue spanning their union
    with the longer text.  Overlapping distinct cues are clipped so the
    earlier cue ends where the later one starts.  The result is sorted and
    strictly non-overlapping.
    """
    pending = sorted(doc.cues, key=lambda c: (c.start_s, c.end_s))
    out: list[SubtitleCue] = []
    for cue in pending:
        while out:
            prev = out[-1]
            if _mergeable(prev, cue):
                out.pop()
                text = cue.text if len(cue.text) >= len(prev.text) else prev.text
                cue = SubtitleCue(
                    0, min(prev.start_s, cue.start_s), max(prev.end_s, cue.end_s), text
                )
                continue
            if prev.end_s > cue.start_s:
                out.pop()
                if prev.start_s < cue.start_s:
                    out.append(SubtitleCue(0, prev.start_s, cue.start_s, prev.text))
                continue
            break
        out.append(cue)
    return tuple(SubtitleCue(i + 1, c.start_s, c.end_s, c.text) for i, c in enumerate(out))


def align_segments(cues: list[SubtitleCue] | tuple[SubtitleCue, ...], video_id: str) -> tuple[VideoSegment, ...]:
    """One segment per merged cue, ids assigned by position."""
    if not cues:
        raise IngestError("no segments")
    return tuple(
        VideoSegment(
            seg_id=i,
            video_id=video_id,
            start_s=cue.start_s,
            duration_s=cue.end_s - cue.start_s,
            subtitle=cue.text,
        )
        for i, cue in enumerate(cues)
    )


def format_timestamp_srt(seconds: float) -> str:
    total_ms = round(seconds * 1000)
    h, rest = divmod(total_ms, 3_600_000)
    m, rest = divmod(rest, 60_000)
    s, ms = divmod(rest, 1000)
    return f"{h:02d}:{m:02d}:{s:02d},{ms:03d}"


def serialize_srt(cues: list[SubtitleCue] | tuple[SubtitleCue, ...]) -> str:
    """Canonical SRT writer: LF endings, comma millisecond separator."""
    blocks = []
    for i, cue in enumerate(cues, 1):
        blocks.append(
            f"{i}\n{format_timestamp_srt(cue.start_s)} --> {format_timestamp_srt(cue.end_s)}\n{cue.text}\n"
        )
    return "\n".join(blocks)
