import { escapeHtml, numSpan } from "../format.js";
import type { PosteriorPayload } from "../types.js";

export function renderPosterior(payload: PosteriorPayload | null): string {
  if (!payload) {
    return `<h2>Posterior</h2><p class="placeholder">select a structure</p>`;
  }
  const beliefRows = Object.entries(payload.belief)
    .map(
      ([state, p]) => `
      <tr>
        <td class="state">${escapeHtml(state)}</td>
        <td>${numSpan(p, "belief")}</td>
        <td class="bar-cell"><div class="bar" style="width: ${Math.min(1, Math.max(0, p)) * 100}%"></div></td>
      </tr>`,
    )
    .join("");
  const componentRows = Object.entries(payload.failure.components)
    .map(
      ([component, p]) => `
      <tr><td class="state">${escapeHtml(component)}</td><td>${numSpan(p, "component-failure")}</td></tr>`,
    )
    .join("");
  const substructureRows = Object.entries(payload.failure.substructures)
    .map(
      ([gate, p]) => `
      <tr><td class="state">${escapeHtml(gate)}</td><td>${numSpan(p, "substructure-failure")}</td></tr>`,
    )
    .join("");
  const observation = payload.observation
    ? `<span class="obs">observation ${escapeHtml(payload.observation)}</span>`
    : `<span class="obs none">no evidence this step</span>`;
  return `
    <h2>Posterior: ${escapeHtml(payload.structure)}</h2>
    <p>${observation}</p>
    <table class="belief"><thead><tr><th>health state</th><th>P</th><th></th></tr></thead>
      <tbody>${beliefRows}</tbody></table>
    <h3>Failure risk</h3>
    <p>structure ${numSpan(payload.failure.structure, "structure-failure")}
       &middot; population ${numSpan(payload.failure.population.failure_probability, "population-failure")}</p>
    <table class="failures"><thead><tr><th>component</th><th>P(failed)</th></tr></thead>
      <tbody>${componentRows}</tbody></table>
    <table class="failures"><thead><tr><th>substructure gate</th><th>P(failed)</th></tr></thead>
      <tbody>${substructureRows}</tbody></table>`;
}
