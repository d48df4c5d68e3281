import { escapeHtml, numSpan } from "../format.js";
import type { WhatIfPayload } from "../types.js";

// Per-action expected-utility bars. The recommended highlight is the
// server's argmax (ties included); the client only displays it.

export function renderWhatIf(payload: WhatIfPayload | null, staleStep: boolean): string {
  if (!payload) {
    return `<h2>What-if</h2><p class="placeholder">explore a structure to compare actions</p>`;
  }
  const values = payload.actions.map((row) => row.expected_utility);
  const max = Math.max(...values);
  const min = Math.min(...values);
  const span = max - min || 1; // bar geometry only
  const rows = payload.actions
    .map((row) => {
      const recommended = row.action === payload.recommended;
      const width = ((row.expected_utility - min) / span) * 100;
      return `
      <tr class="${recommended ? "recommended" : ""}">
        <td class="action">${escapeHtml(row.action)}${recommended ? " &#9733;" : ""}</td>
        <td>${numSpan(row.expected_utility, "expected-utility")}</td>
        <td>${numSpan(row.forecast_failure_probability, "forecast-failure")}</td>
        <td class="bar-cell"><div class="bar eu" style="width: ${width}%"></div></td>
        <td><button class="commit" data-action="${escapeHtml(row.action)}"
                    data-structure="${escapeHtml(payload.structure)}">commit</button></td>
      </tr>`;
    })
    .join("");
  const conflict = staleStep
    ? `<p class="conflict">The session advanced since this panel was computed.
       <button id="refresh-whatif">Refresh</button></p>`
    : "";
  return `
    <h2>What-if: ${escapeHtml(payload.structure)} <small>step ${payload.step}</small></h2>
    ${conflict}
    <table class="whatif">
      <thead><tr><th>action</th><th>expected utility</th><th>forecast P(fail)</th><th></th><th></th></tr></thead>
      <tbody>${rows}</tbody>
    </table>
    <p class="note">recommended: <strong data-recommended>${escapeHtml(payload.recommended)}</strong></p>`;
}
