import { escapeHtml, numSpan } from "../format.js";
import type { VoiPayload } from "../types.js";

export function renderVoi(payload: VoiPayload | null): string {
  const report = payload
    ? `
    <dl class="voi">
      <dt>kind</dt><dd>${escapeHtml(payload.kind)}</dd>
      <dt>value</dt><dd>${numSpan(payload.value, "voi-value")}</dd>
      <dt>baseline</dt><dd>${numSpan(payload.baseline, "voi-baseline")}</dd>
      <dt>informed</dt><dd>${numSpan(payload.informed, "voi-informed")}</dd>
      <dt>trials</dt><dd>${numSpan(payload.n)}</dd>
      <dt>std. error</dt><dd>${numSpan(payload.stderr)}</dd>
    </dl>`
    : `<p class="placeholder">no report requested</p>`;
  return `
    <h2>Value of information</h2>
    <div class="voi-buttons">
      <button id="voi-obs">observation VoI</button>
      <button id="voi-transfer">transfer VoI</button>
    </div>
    ${report}`;
}
