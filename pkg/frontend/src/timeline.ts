// Pure timeline geometry: segments scaled by duration, the predicted span
// shaded, per-segment probabilities surfaced for hover. No DOM here.

import type { ResultWire, SegmentWire } from "./types.js";

export interface TimelineCell {
  seg_id: number;
  /** fraction of the full timeline width, in [0, 1] */
  left: number;
  width: number;
  shaded: boolean;
  prob: number | null;
  label: number | null;
  subtitle: string;
}

export function overlaps(
  segStart: number,
  segEnd: number,
  spanStart: number,
  spanEnd: number,
): boolean {
  return Math.min(segEnd, spanEnd) - Math.max(segStart, spanStart) > 0;
}

export function layoutTimeline(
  segments: SegmentWire[],
  result: ResultWire | null,
): TimelineCell[] {
  if (segments.length === 0) {
    return [];
  }
  const ordered = [...segments].sort((a, b) => a.seg_id - b.seg_id);
  const origin = Math.min(...ordered.map((s) => s.start_s));
  const end = Math.max(...ordered.map((s) => s.start_s + s.duration_s));
  const total = end - origin || 1;
  const probs = new Map<number, { prob: number; label: number }>();
  for (const p of result?.per_segment ?? []) {
    probs.set(p.seg_id, { prob: p.prob, label: p.label });
  }
  return ordered.map((seg) => {
    const scored = probs.get(seg.seg_id);
    return {
      seg_id: seg.seg_id,
      left: (seg.start_s - origin) / total,
      width: seg.duration_s / total,
      shaded:
        result !== null &&
        overlaps(
          seg.start_s,
          seg.start_s + seg.duration_s,
          result.span.start_s,
          result.span.end_s,
        ),
      prob: scored?.prob ?? null,
      label: scored?.label ?? null,
      subtitle: seg.subtitle,
    };
  });
}

export function formatProb(p: number): string {
  return p.toFixed(2);
}

export function formatSeconds(s: number): string {
  const minutes = Math.floor(s / 60);
  const rest = s - minutes * 60;
  return `${String(minutes).padStart(2, "0")}:${rest.toFixed(1).padStart(4, "0")}`;
}

export function formatSpan(start: number, end: number): string {
  return `${formatSeconds(start)} – ${formatSeconds(end)}`;
}
