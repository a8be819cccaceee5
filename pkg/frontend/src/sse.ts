/** Server-sent event consumption via streaming fetch (works in browsers and
 * Node alike), with a polling fallback for flaky local setups. */

import type { WorkflowEventView } from "./types.js";

export function parseSseChunk(chunk: string): WorkflowEventView | null {
  let id = -1;
  let data = "";
  for (const line of chunk.split("\n")) {
    if (line.startsWith("id: ")) {
      id = Number(line.slice(4));
    } else if (line.startsWith("data: ")) {
      data = line.slice(6);
    }
  }
  if (!data) {
    return null;
  }
  const parsed = JSON.parse(data) as { event: string; at: string; data: Record<string, unknown> };
  return { id, event: parsed.event, at: parsed.at, data: parsed.data };
}

/** Reads the event stream until the server closes it (terminal session) or
 * the signal aborts. Events arrive in session-log order. */
export async function readEventStream(
  url: string,
  onEvent: (event: WorkflowEventView) => void,
  signal?: AbortSignal,
): Promise<void> {
  const response = await fetch(url, {
    signal: signal ?? null,
    headers: { Accept: "text/event-stream" },
  });
  if (!response.ok || !response.body) {
    throw new Error(`event stream failed: ${response.status}`);
  }
  const reader = response.body.getReader();
  const decoder = new TextDecoder();
  let buffer = "";
  for (;;) {
    const { done, value } = await reader.read();
    if (done) {
      break;
    }
    buffer += decoder.decode(value, { stream: true });
    let boundary = buffer.indexOf("\n\n");
    while (boundary !== -1) {
      const event = parseSseChunk(buffer.slice(0, boundary));
      buffer = buffer.slice(boundary + 2);
      if (event) {
        onEvent(event);
      }
      boundary = buffer.indexOf("\n\n");
    }
  }
}

export interface Subscription {
  stop: () => void;
}

/** Prefer the event stream; on stream failure fall back to polling the
 * session document so the view keeps moving. */
export function subscribeEvents(
  eventsUrl: string,
  onEvent: (event: WorkflowEventView) => void,
  onFallbackTick: () => void,
  pollIntervalMs = 1000,
): Subscription {
  const controller = new AbortController();
  let pollTimer: ReturnType<typeof setInterval> | null = null;

  readEventStream(eventsUrl, onEvent, controller.signal).catch(() => {
    if (controller.signal.aborted) {
      return;
    }
    pollTimer = setInterval(onFallbackTick, pollIntervalMs);
  });

  return {
    stop: () => {
      controller.abort();
      if (pollTimer !== null) {
        clearInterval(pollTimer);
      }
    },
  };
}
