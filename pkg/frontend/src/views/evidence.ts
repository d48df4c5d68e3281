import { escapeHtml } from "../format.js";

// Observation entry. Symbols are validated against the session's declared
// domain before anything is POSTed; after a bare reload the domain is
// unknown and the server's validation is the backstop.

export function renderEvidence(
  structures: string[],
  observations: string[],
  selected: string | null,
): string {
  const structureOptions = structures
    .map(
      (s) =>
        `<option value="${escapeHtml(s)}" ${s === selected ? "selected" : ""}>${escapeHtml(s)}</option>`,
    )
    .join("");
  const symbolOptions = observations
    .map((o) => `<option value="${escapeHtml(o)}">${escapeHtml(o)}</option>`)
    .join("");
  return `
    <h2>Evidence entry</h2>
    <form id="evidence-form">
      <label>structure
        <select id="evidence-structure">${structureOptions}</select>
      </label>
      <label>observation
        <input id="evidence-obs" list="evidence-symbols" autocomplete="off" />
        <datalist id="evidence-symbols">${symbolOptions}</datalist>
      </label>
      <button type="submit">post</button>
      <span id="evidence-error" class="field-error"></span>
    </form>`;
}
