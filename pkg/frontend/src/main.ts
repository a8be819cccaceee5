/** Browser glue: wires the store, the event stream, and the decision form
 * into the page. Everything interesting lives in the imported modules. */

import { ApiClient } from "./api.js";
import {
  abort,
  approve,
  declareFeatureComplete,
  editThenApprove,
  requestRegeneration,
  submitDecision,
} from "./decisions.js";
import {
  renderOfflineBanner,
  renderProposal,
  renderStatusLine,
  renderTimeline,
} from "./render.js";
import { createSessionStore } from "./state.js";
import { subscribeEvents } from "./sse.js";

const BASE_URL = (window as { TDDLOOP_API?: string }).TDDLOOP_API ?? "http://127.0.0.1:8765";

function controlsMarkup(disabled: boolean): string {
  const d = disabled ? "disabled" : "";
  return `
  <section class="editors">
    <label>test document<br><textarea id="test-editor" rows="14" cols="60"></textarea></label>
    <label>prompt<br><textarea id="prompt-editor" rows="4" cols="60"></textarea></label>
  </section>
  <section class="controls">
    <button id="btn-approve" ${d}>approve</button>
    <button id="btn-edit" ${d}>edit + approve</button>
    <button id="btn-regenerate" ${d}>regenerate</button>
    <button id="btn-complete" ${d}>declare complete</button>
    <button id="btn-abort" ${d}>abort</button>
  </section>`;
}

function main(): void {
  const root = document.getElementById("app");
  if (!root) {
    return;
  }
  const api = new ApiClient(BASE_URL);
  const store = createSessionStore();

  function render(): void {
    const { session, events, offline, notice } = store.getState();
    if (!session) {
      root!.innerHTML = renderOfflineBanner(offline) || "<p>loading session…</p>";
      return;
    }
    const terminal = session.status === "completed" || session.status === "halted";
    root!.innerHTML = [
      renderOfflineBanner(offline),
      notice ? `<div class="notice">${notice}</div>` : "",
      renderStatusLine(session),
      renderProposal(session),
      controlsMarkup(offline || terminal),
      renderTimeline(events),
    ].join("\n");
    wireButtons();
  }

  function currentEditorText(id: string): string | undefined {
    const editor = document.getElementById(id) as HTMLTextAreaElement | null;
    const value = editor?.value ?? "";
    return value.trim() === "" ? undefined : value;
  }

  function wireButtons(): void {
    const send = (body: Parameters<typeof submitDecision>[2]) => () =>
      void submitDecision(api, store, body);
    document.getElementById("btn-approve")?.addEventListener("click", send(approve()));
    document.getElementById("btn-regenerate")?.addEventListener(
      "click",
      send(requestRegeneration()),
    );
    document.getElementById("btn-complete")?.addEventListener(
      "click",
      send(declareFeatureComplete()),
    );
    document.getElementById("btn-abort")?.addEventListener("click", send(abort()));
    document.getElementById("btn-edit")?.addEventListener("click", () => {
      try {
        const decision = editThenApprove({
          testSource: currentEditorText("test-editor"),
          prompt: currentEditorText("prompt-editor"),
        });
        void submitDecision(api, store, decision);
      } catch (error) {
        store.setNotice(String(error));
      }
    });
  }

  store.subscribe(render);

  api
    .fetchSession()
    .then((session) => store.ingestSession(session))
    .catch(() => store.setOffline(true));

  subscribeEvents(
    api.eventsUrl(),
    (event) => {
      store.ingestEvent(event);
      // Any event may change session state; re-fetch the projection.
      api
        .fetchSession()
        .then((session) => store.ingestSession(session))
        .catch(() => store.setOffline(true));
    },
    () => {
      api
        .fetchSession()
        .then((session) => store.ingestSession(session))
        .catch(() => store.setOffline(true));
    },
  );
}

main();
