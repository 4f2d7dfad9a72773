import type { SessionView } from "./state.js";
import type { BacklogOut } from "./types.js";

function escapeHtml(text: string): string {
  return text
    .replaceAll("&", "&amp;")
    .replaceAll("<", "&lt;")
    .replaceAll(">", "&gt;")
    .replaceAll('"', "&quot;");
}

export function renderTranscript(view: SessionView): string {
  const lines = view.transcript.map(
    (line) =>
      `<li class="line" data-seq="${line.sequence_no}">` +
      `<span class="speaker">${escapeHtml(line.speaker)}</span>` +
      `<span class="phase">${escapeHtml(line.phase)}</span>` +
      `<pre>${escapeHtml(line.content)}</pre></li>`,
  );
  return `<ol class="transcript">${lines.join("")}</ol>`;
}

/** Rank and score cells show the backend strings verbatim (ties as "1.5"). */
export function renderBacklog(backlog: BacklogOut): string {
  const rows = backlog.entries.map(
    (e) =>
      `<tr><td class="rank">${escapeHtml(e.rank)}</td>` +
      `<td>${escapeHtml(e.story_id)}</td>` +
      `<td class="score">${escapeHtml(e.score)}</td>` +
      `<td>${escapeHtml(e.justification)}</td></tr>`,
  );
  return (
    `<table class="backlog" data-technique="${escapeHtml(backlog.technique)}">` +
    `<thead><tr><th>Rank</th><th>Story</th><th>Score</th><th>Justification</th></tr></thead>` +
    `<tbody>${rows.join("")}</tbody></table>`
  );
}

export function renderSession(view: SessionView): string {
  const parts = [renderTranscript(view)];
  for (const backlog of view.backlogs) parts.push(renderBacklog(backlog));
  if (view.metrics) {
    parts.push(
      `<dl class="metrics">` +
        `<dt>Model</dt><dd>${escapeHtml(view.metrics.model_name)}</dd>` +
        `<dt>Distinct epics</dt><dd>${view.metrics.distinct_epics}</dd>` +
        `<dt>Distinct stories</dt><dd>${view.metrics.distinct_stories}</dd>` +
        `<dt>Response time (s)</dt><dd>${view.metrics.api_response_time}</dd>` +
        `<dt>Mean similarity</dt><dd>${view.metrics.mean_similarity}</dd>` +
        `</dl>`,
    );
  }
  if (view.error) parts.push(`<p class="error">${escapeHtml(view.error)}</p>`);
  return `<section class="session">${parts.join("")}</section>`;
}
