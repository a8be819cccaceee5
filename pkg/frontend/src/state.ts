/** Session view store. The single way state changes is ingesting an API
 * response: the UI never fabricates engine state on its own. */

import type { SessionView, WorkflowEventView } from "./types.js";

export interface ViewState {
  session: SessionView | null;
  events: WorkflowEventView[];
  offline: boolean;
  notice: string | null;
}

export type Listener = (state: ViewState) => void;

export interface SessionStore {
  getState(): ViewState;
  subscribe(listener: Listener): () => void;
  ingestSession(session: SessionView): void;
  ingestEvent(event: WorkflowEventView): void;
  setOffline(offline: boolean): void;
  setNotice(notice: string | null): void;
}

export function createSessionStore(): SessionStore {
  let state: ViewState = { session: null, events: [], offline: false, notice: null };
  const listeners = new Set<Listener>();

  function update(next: Partial<ViewState>): void {
    state = { ...state, ...next };
    for (const listener of listeners) {
      listener(state);
    }
  }

  return {
    getState: () => state,
    subscribe(listener) {
      listeners.add(listener);
      return () => listeners.delete(listener);
    },
    ingestSession(session) {
      update({ session, offline: false });
    },
    ingestEvent(event) {
      // Events arrive in log order; drop anything already seen.
      const last = state.events.length > 0 ? state.events[state.events.length - 1] : undefined;
      if (last !== undefined && event.id >= 0 && event.id <= last.id) {
        return;
      }
      update({ events: [...state.events, event] });
    },
    setOffline(offline) {
      update({ offline });
    },
    setNotice(notice) {
      update({ notice });
    },
  };
}
