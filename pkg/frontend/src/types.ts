// Wire types mirroring the session service JSON exactly. The UI renders
// exclusively from these payloads and never derives pipeline values itself.

export interface DialogueTurn {
  q: string;
  a: string;
}

export interface SessionDialogue {
  initial_question: string;
  turns: DialogueTurn[];
}

export interface SpanWire {
  start_s: number;
  end_s: number;
}

export interface PerSegmentWire {
  seg_id: number;
  prob: number;
  label: number;
}

export interface ResultWire {
  video_id: string;
  span: SpanWire;
  per_segment: PerSegmentWire[];
  fallback_used: boolean;
}

export type SessionState = "awaiting_answer" | "ready" | "localized" | "failed";

export interface SessionWire {
  session_id: string;
  video_id: string;
  state: SessionState;
  dialogue: SessionDialogue;
  pending_question: string | null;
  result: ResultWire | null;
  created_at: number;
  failure_reason: string | null;
  rounds_total: number;
}

export interface SegmentWire {
  seg_id: number;
  start_s: number;
  duration_s: number;
  subtitle: string;
}

export interface ErrorWire {
  error: {
    code: string;
    stage: string;
    message: string;
  };
}
