/** HTML renderers. Pure string builders so they test without a DOM. */

import { diffLines, diffStats } from "./diff.js";
import type { ArtifactsView, SessionView, WorkflowEventView } from "./types.js";

export function escapeHtml(text: string): string {
  return text
    .replaceAll("&", "&amp;")
    .replaceAll("<", "&lt;")
    .replaceAll(">", "&gt;")
    .replaceAll('"', "&quot;");
}

export function phaseLabel(phase: string): string {
  if (phase === "refactor") return "Refactor";
  if (phase === "first") return "First iteration";
  return "Intermediate iteration";
}

function renderDiffTable(title: string, previous: string, proposed: string): string {
  const rows = diffLines(previous, proposed);
  const stats = diffStats(rows);
  const body = rows
    .map((row) => {
      const left = row.left === null ? "" : escapeHtml(row.left);
      const right = row.right === null ? "" : escapeHtml(row.right);
      return `<tr class="diff-${row.kind}"><td><pre>${left}</pre></td><td><pre>${right}</pre></td></tr>`;
    })
    .join("");
  return `
  <section class="diff">
    <h3>${escapeHtml(title)} <small>+${stats.added} -${stats.removed}</small></h3>
    <table class="diff-table">
      <thead><tr><th>previous</th><th>proposed</th></tr></thead>
      <tbody>${body}</tbody>
    </table>
  </section>`;
}

export function renderWarnings(warnings: string[]): string {
  if (warnings.length === 0) {
    return "";
  }
  const items = warnings.map((w) => `<li>${escapeHtml(w)}</li>`).join("");
  return `<div class="warning-banner" role="alert"><strong>warnings</strong><ul>${items}</ul></div>`;
}

export function renderTestLog(log: string | null): string {
  if (!log) {
    return `<section class="test-log"><h3>test output</h3><pre>(no run yet)</pre></section>`;
  }
  return `<section class="test-log"><h3>test output</h3><pre>${escapeHtml(log)}</pre></section>`;
}

/** The proposal review panel: previous vs proposed documents side by side,
 * warnings on top, the captured test output underneath. */
export function renderProposal(view: SessionView): string {
  const previous: ArtifactsView = view.previous_artifacts;
  const proposed: ArtifactsView = view.artifacts;
  return `
  <div class="proposal">
    <h2>Iteration ${view.current.index}: ${phaseLabel(view.current.phase)}</h2>
    ${renderWarnings(view.warnings)}
    ${renderDiffTable(proposed.test.filename, previous.test.text, proposed.test.text)}
    ${renderDiffTable(
      proposed.production.filename,
      previous.production.text,
      proposed.production.text,
    )}
    ${renderTestLog(view.last_outcome ? view.last_outcome.log : null)}
  </div>`;
}

export function renderStatusLine(view: SessionView): string {
  return `<p class="status">session <code>${escapeHtml(view.id)}</code> is <strong>${escapeHtml(
    view.status,
  )}</strong> (${view.iterations_done} iterations done, awaiting: ${escapeHtml(
    view.current.awaiting,
  )})</p>`;
}

export function renderOfflineBanner(offline: boolean): string {
  if (!offline) {
    return "";
  }
  return `<div class="offline-banner" role="alert">backend unreachable; submissions disabled</div>`;
}

export function renderTimeline(events: WorkflowEventView[]): string {
  const items = events
    .map((e) => `<li><code>${e.id}</code> ${escapeHtml(e.event)}</li>`)
    .join("");
  return `<section class="timeline"><h3>events</h3><ol>${items}</ol></section>`;
}
