import { expect } from "vitest";
import type { FetchLike, HttpResponse } from "../src/api.js";

export interface ScriptEntry {
  method: string;
  path: string;
  status?: number;
  payload?: unknown;
  /** reject instead of responding, simulating a network failure */
  fail?: string;
}

export interface ScriptedServer {
  fetch: FetchLike;
  calls: string[];
  /** entries consumed so far */
  consumed(): number;
}

export function scriptedServer(script: ScriptEntry[]): ScriptedServer {
  let index = 0;
  const calls: string[] = [];
  const fetchFn: FetchLike = async (url, init) => {
    const method = init?.method ?? "GET";
    calls.push(`${method} ${url}`);
    const entry = script[index++];
    expect(entry, `unexpected request ${method} ${url}`).toBeDefined();
    expect(`${method} ${url}`).toBe(`${entry.method} ${entry.path}`);
    if (entry.fail) {
      throw new Error(entry.fail);
    }
    const response: HttpResponse = {
      status: entry.status ?? 200,
      json: async () => entry.payload,
    };
    return response;
  };
  return { fetch: fetchFn, calls, consumed: () => index };
}

/** A fetch whose next response resolves only when `release` is called. */
export function gatedServer(entry: ScriptEntry): ScriptedServer & { release: () => void } {
  let releaseFn: (() => void) | null = null;
  const gate = new Promise<void>((resolve) => {
    releaseFn = resolve;
  });
  const calls: string[] = [];
  let index = 0;
  const fetchFn: FetchLike = async (url, init) => {
    calls.push(`${init?.method ?? "GET"} ${url}`);
    index += 1;
    await gate;
    return { status: entry.status ?? 200, json: async () => entry.payload };
  };
  return {
    fetch: fetchFn,
    calls,
    consumed: () => index,
    release: () => releaseFn?.(),
  };
}
