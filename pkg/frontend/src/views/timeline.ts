import { escapeHtml, numSpan } from "../format.js";
import type { CommitRecord } from "../types.js";

// Committed steps, newest last. Entries render identically whether they came
// from live commit responses or from GET /log after a reload.

export function renderTimeline(records: CommitRecord[]): string {
  if (records.length === 0) {
    return `<h2>Timeline</h2><p class="placeholder">no committed steps yet</p>`;
  }
  const entries = records
    .map((record) => {
      const rows = Object.entries(record.structures)
        .map(
          ([sid, outcome]) => `
          <tr class="${outcome.failed ? "failed" : ""}">
            <td>${escapeHtml(sid)}</td>
            <td>${escapeHtml(outcome.action)}</td>
            <td>${escapeHtml(outcome.observation)}</td>
            <td>${numSpan(outcome.realized_utility, "realized-utility")}</td>
            <td>${outcome.failed ? "failed" : "ok"}</td>
          </tr>`,
        )
        .join("");
      const env = record.env ? ` &middot; environment ${escapeHtml(record.env)}` : "";
      const popFlag = record.population_failed
        ? `<span class="pop-failed">population failure mode active</span>`
        : "";
      return `
      <details class="timeline-step">
        <summary>step ${record.step}${env} &middot; availability
          ${numSpan(record.availability, "availability")} ${popFlag}</summary>
        <table><thead>
          <tr><th>structure</th><th>action</th><th>new obs</th><th>realized utility</th><th>state</th></tr>
        </thead><tbody>${rows}</tbody></table>
      </details>`;
    })
    .join("");
  return `<h2>Timeline</h2>${entries}`;
}
