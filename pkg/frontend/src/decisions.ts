/** Decision construction and the submit/re-sync loop.
 *
 * A 409 means the displayed state went stale: the decision is discarded, the
 * view re-syncs from the API, and the user gets an explanation instead of a
 * silently forced transition. */

import type { ApiClient } from "./api.js";
import type { SessionStore } from "./state.js";
import type { DecisionBody } from "./types.js";

export interface EditPayload {
  testSource?: string;
  productionSource?: string;
  prompt?: string;
  note?: string;
}

export function approve(): DecisionBody {
  return { kind: "approve" };
}

export function requestRegeneration(): DecisionBody {
  return { kind: "request-regeneration" };
}

export function declareFeatureComplete(): DecisionBody {
  return { kind: "declare-feature-complete" };
}

export function abort(): DecisionBody {
  return { kind: "abort" };
}

export function editThenApprove(edit: EditPayload): DecisionBody {
  if (
    edit.testSource === undefined &&
    edit.productionSource === undefined &&
    edit.prompt === undefined
  ) {
    throw new Error("edit-then-approve needs at least one modification");
  }
  return {
    kind: "edit-then-approve",
    test_source: edit.testSource,
    production_source: edit.productionSource,
    prompt: edit.prompt,
    note: edit.note,
  };
}

/** POST the decision; on success ingest the fresh state, on a 409 conflict
 * re-sync and surface the explanation. Network failure flips the offline
 * flag so the UI blocks stale submissions. */
export async function submitDecision(
  api: ApiClient,
  store: SessionStore,
  decision: DecisionBody,
): Promise<boolean> {
  let result;
  try {
    result = await api.postDecision(decision);
  } catch {
    store.setOffline(true);
    store.setNotice("backend unreachable; decision not sent");
    return false;
  }
  if (result.ok) {
    store.ingestSession(result.state);
    store.setNotice(null);
    return true;
  }
  if (result.status === 409) {
    try {
      store.ingestSession(await api.fetchSession());
    } catch {
      store.setOffline(true);
    }
    store.setNotice(`decision discarded: ${result.error}`);
    return false;
  }
  store.setNotice(`decision rejected: ${result.error}`);
  return false;
}
