import { escapeHtml, fmtNumber, numSpan } from "../format.js";
import type { HierarchyNodePayload, HierarchyPayload, PopulationFailure } from "../types.js";

// Collapsible S1-S6 tree. Probabilities are printed exactly as the server
// sent them; bar widths and the gauge marker are CSS geometry only.

function gauge(population: PopulationFailure): string {
  const expected = Math.max(0, Math.min(1, population.expected_availability));
  const marker = Math.max(0, Math.min(1, Number(population.availability_threshold)));
  return `
    <div class="gauge" title="population availability vs threshold">
      <div class="gauge-bar" style="width: ${expected * 100}%"></div>
      <div class="gauge-marker" style="left: ${marker * 100}%"></div>
    </div>
    <div class="gauge-caption">
      expected availability ${numSpan(population.expected_availability, "availability")}
      / threshold <span data-num class="threshold">${escapeHtml(
        population.availability_threshold,
      )}</span>
      (fails at ${numSpan(population.k, "k")} down,
      P = ${numSpan(population.failure_probability, "population-failure")})
    </div>`;
}

function renderNode(node: HierarchyNodePayload, selected: string | null): string {
  const badge = `<span class="badge badge-${node.level.toLowerCase()}">${node.level}</span>`;
  const tag = node.type_tag ? `<span class="tag">${escapeHtml(node.type_tag)}</span>` : "";
  const prob =
    node.failure_probability === null || node.failure_probability === undefined
      ? ""
      : `<span class="prob">P(fail) ${numSpan(node.failure_probability)}</span>`;
  const selectable = node.level === "S3";
  const cls = [
    "node-label",
    selectable ? "selectable" : "",
    selected === node.id ? "selected" : "",
  ]
    .filter(Boolean)
    .join(" ");
  const label = `<span class="${cls}" data-node="${escapeHtml(node.id)}" ${
    selectable ? `data-structure="${escapeHtml(node.id)}"` : ""
  }>${badge} ${escapeHtml(node.id)} ${tag} ${prob}</span>`;
  const pop = node.population ? gauge(node.population) : "";
  if (!node.children || node.children.length === 0) {
    return `<div class="leaf">${label}${pop}</div>`;
  }
  const children = node.children.map((c) => renderNode(c, selected)).join("");
  return `<details open><summary>${label}</summary>${pop}<div class="children">${children}</div></details>`;
}

export function renderHierarchy(
  payload: HierarchyPayload | null,
  selected: string | null,
): string {
  if (!payload) {
    return `<h2>Hierarchy</h2><p class="placeholder">no session</p>`;
  }
  return `
    <h2>Hierarchy <small>step ${fmtNumber(payload.step)}</small></h2>
    <div class="tree">${renderNode(payload.root, selected)}</div>`;
}
