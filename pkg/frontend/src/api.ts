/** Typed client for the session HTTP API. All writes go through
 * postDecision; a 409 is a first-class result, not an exception, so the
 * caller can re-sync instead of crashing. */

import type { DecisionBody, IterationRecordView, SessionView } from "./types.js";

export type DecisionResult =
  | { ok: true; state: SessionView }
  | { ok: false; status: number; error: string };

export class ApiClient {
  constructor(private readonly baseUrl: string) {}

  private url(path: string): string {
    return this.baseUrl.replace(/\/$/, "") + path;
  }

  async fetchSession(): Promise<SessionView> {
    const response = await fetch(this.url("/session"));
    if (!response.ok) {
      throw new Error(`GET /session failed: ${response.status}`);
    }
    return (await response.json()) as SessionView;
  }

  async fetchIteration(index: number): Promise<IterationRecordView | null> {
    const response = await fetch(this.url(`/session/iterations/${index}`));
    if (response.status === 404) {
      return null;
    }
    if (!response.ok) {
      throw new Error(`GET /session/iterations/${index} failed: ${response.status}`);
    }
    return (await response.json()) as IterationRecordView;
  }

  async postDecision(decision: DecisionBody): Promise<DecisionResult> {
    const response = await fetch(this.url("/session/decision"), {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(decision),
    });
    if (response.ok) {
      return { ok: true, state: (await response.json()) as SessionView };
    }
    let detail = `HTTP ${response.status}`;
    try {
      const body = (await response.json()) as { error?: string; detail?: string };
      detail = body.error ?? body.detail ?? detail;
    } catch {
      // body was not JSON; keep the status text
    }
    return { ok: false, status: response.status, error: detail };
  }

  eventsUrl(): string {
    return this.url("/session/events");
  }
}
