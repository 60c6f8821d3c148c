// Maps flow state to a plain render model. Every number shown in the UI
// is taken verbatim from a server payload; the DOM layer only binds this
// model, so snapshot tests can compare it directly against fixtures.

import type { FlowState } from "./state.js";
import { roundCounter } from "./state.js";
import { formatProb, formatSpan, layoutTimeline, type TimelineCell } from "./timeline.js";

export interface TranscriptRow {
  question: string;
  answer: string;
}

export interface RenderModel {
  screen: "start" | "dialogue" | "result";
  busy: boolean;
  errorBanner: string | null;
  canRetry: boolean;
  initialQuestion: string | null;
  transcript: TranscriptRow[];
  pendingQuestion: string | null;
  roundCounter: string | null;
  answerButtonsEnabled: boolean;
  localizeVisible: boolean;
  failureReason: string | null;
  rewrittenIntent: string | null;
  timeline: TimelineCell[];
  spanLabel: string | null;
  fallbackBadge: boolean;
  hoverTitles: Map<number, string>;
}

export function renderModel(state: FlowState): RenderModel {
  const session = state.session;
  const result = session?.result ?? null;
  const timeline =
    state.screen === "result" ? layoutTimeline(state.segments, result) : [];
  const hoverTitles = new Map<number, string>();
  for (const cell of timeline) {
    if (cell.prob !== null) {
      hoverTitles.set(cell.seg_id, `p=${formatProb(cell.prob)} — ${cell.subtitle}`);
    }
  }
  return {
    screen: state.screen,
    busy: state.busy,
    errorBanner: state.error,
    canRetry: state.error !== null,
    initialQuestion: session?.dialogue.initial_question ?? null,
    transcript: session?.dialogue.turns.map((t) => ({ question: t.q, answer: t.a })) ?? [],
    pendingQuestion: session?.pending_question ?? null,
    roundCounter: session ? roundCounter(session) : null,
    answerButtonsEnabled:
      !state.busy && session !== null && session.state === "awaiting_answer",
    localizeVisible: session !== null && session.state === "ready",
    failureReason: session?.failure_reason ?? null,
    rewrittenIntent: null,
    timeline,
    spanLabel: result ? formatSpan(result.span.start_s, result.span.end_s) : null,
    fallbackBadge: result?.fallback_used ?? false,
    hoverTitles,
  };
}
