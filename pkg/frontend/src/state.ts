// Session flow view-model. All pipeline state lives on the server; this
// holds only the last server response plus UI bookkeeping (busy flag,
// error banner, retry hook). At most one mutation is ever in flight, so a
// double-click cannot add two transcript turns.

import { ApiError, Client } from "./api.js";
import type { SegmentWire, SessionWire } from "./types.js";

export type Screen = "start" | "dialogue" | "result";

export interface FlowState {
  screen: Screen;
  session: SessionWire | null;
  segments: SegmentWire[];
  busy: boolean;
  error: string | null;
}

export type Listener = (state: FlowState) => void;

export class SessionFlow {
  private state: FlowState = {
    screen: "start",
    session: null,
    segments: [],
    busy: false,
    error: null,
  };
  private retryAction: (() => Promise<void>) | null = null;
  private listeners: Listener[] = [];

  constructor(private readonly client: Client) {}

  subscribe(listener: Listener): void {
    this.listeners.push(listener);
    listener(this.state);
  }

  snapshot(): FlowState {
    return this.state;
  }

  private emit(patch: Partial<FlowState>): void {
    this.state = { ...this.state, ...patch };
    for (const listener of this.listeners) {
      listener(this.state);
    }
  }

  /** Runs one server mutation; concurrent invocations are ignored. */
  private async mutate(action: () => Promise<void>): Promise<void> {
    if (this.state.busy) {
      return;
    }
    this.emit({ busy: true, error: null });
    try {
      await action();
      this.retryAction = null;
    } catch (err) {
      // transcript and screen are preserved; the banner offers a retry
      this.retryAction = action;
      this.emit({ error: describeError(err) });
    } finally {
      this.emit({ busy: false });
    }
  }

  async start(videoId: string, question: string): Promise<void> {
    await this.mutate(async () => {
      const session = await this.client.createSession(videoId, question);
      const segments = await this.client.segments(videoId);
      this.emit({
        session,
        segments,
        screen: session.state === "localized" ? "result" : "dialogue",
      });
    });
  }

  async clickAnswer(answer: "yes" | "no"): Promise<void> {
    const session = this.state.session;
    if (!session || session.state !== "awaiting_answer") {
      return;
    }
    await this.mutate(async () => {
      this.emit({ session: await this.client.answer(session.session_id, answer) });
    });
  }

  async clickLocalize(): Promise<void> {
    const session = this.state.session;
    if (!session || session.state !== "ready") {
      return;
    }
    await this.mutate(async () => {
      const updated = await this.client.localize(session.session_id);
      this.emit({
        session: updated,
        screen: updated.state === "localized" ? "result" : this.state.screen,
      });
    });
  }

  async retry(): Promise<void> {
    const action = this.retryAction;
    if (!action) {
      return;
    }
    await this.mutate(action);
  }
}

export function describeError(err: unknown): string {
  if (err instanceof ApiError) {
    return err.stage ? `${err.stage}: ${err.message}` : err.message;
  }
  return err instanceof Error ? err.message : String(err);
}

/** Display counter: answered turns count the session toward "r of R". */
export function roundCounter(session: SessionWire): string {
  const total = session.rounds_total;
  if (session.state === "awaiting_answer") {
    return `round ${session.dialogue.turns.length + 1} of ${total}`;
  }
  return `${session.dialogue.turns.length} of ${total} rounds answered`;
}

export function elapsedSeconds(session: SessionWire, nowEpochSeconds: number): number {
  return Math.max(0, nowEpochSeconds - session.created_at);
}
