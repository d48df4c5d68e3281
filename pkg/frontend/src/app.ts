import { ApiClient, ApiError } from "./api.js";
import { escapeHtml } from "./format.js";
import { ConsoleStore } from "./state.js";
import type { HierarchyNodePayload } from "./types.js";
import { renderEvidence } from "./views/evidence.js";
import { renderHierarchy } from "./views/hierarchy.js";
import { renderPosterior } from "./views/posterior.js";
import { renderTimeline } from "./views/timeline.js";
import { renderVoi } from "./views/voi.js";
import { renderWhatIf } from "./views/whatif.js";

/**
 * The operator console. One store, one render pass; every number on screen
 * is a verbatim server value. Mutating calls happen only in response to an
 * explicit operator action, and only `commit` advances the session.
 */
export class ConsoleApp {
  readonly store = new ConsoleStore();
  private lastOp: (() => Promise<void>) | null = null;

  constructor(
    readonly root: HTMLElement,
    private readonly api: ApiClient,
  ) {
    this.root.addEventListener("click", (event) => this.onClick(event));
    this.root.addEventListener("submit", (event) => this.onSubmit(event));
    this.render();
  }

  // --- operator actions -------------------------------------------------------

  async open(scenario: string | object): Promise<void> {
    await this.guard(async () => {
      const session = await this.api.createSession(scenario);
      this.store.sessionId = session.session_id;
      this.store.session = session;
      this.store.structures = session.structures;
      this.store.observations = session.observations;
      this.store.step = 0;
      this.store.timeline = [];
      this.store.hierarchy = await this.api.hierarchy(session.session_id);
      const first = session.structures[0] ?? null;
      if (first) {
        this.store.selected = first;
        this.store.posterior = await this.api.posterior(session.session_id, first);
      }
    });
  }

  /** Rebuild every view of an existing session from GET /log + GET endpoints. */
  async loadSession(sessionId: string): Promise<void> {
    await this.guard(async () => {
      const log = await this.api.log(sessionId);
      this.store.sessionId = sessionId;
      this.store.session = null;
      this.store.step = log.step;
      this.store.timeline = log.trajectory;
      this.store.hierarchy = await this.api.hierarchy(sessionId);
      this.store.structures = collectStructures(this.store.hierarchy.root);
      const first = this.store.structures[0] ?? null;
      if (first) {
        this.store.selected = first;
        this.store.posterior = await this.api.posterior(sessionId, first);
      }
    });
  }

  async select(structure: string): Promise<void> {
    await this.guard(async () => {
      this.store.selected = structure;
      this.store.posterior = await this.api.posterior(this.sessionId(), structure);
    });
  }

  async enterEvidence(structure: string, obs: string): Promise<void> {
    // reject unknown symbols before anything leaves the browser
    if (this.store.observations.length > 0 && !this.store.observations.includes(obs)) {
      this.store.error = null;
      this.render();
      this.setFieldError(`unknown observation symbol "${obs}"`);
      return;
    }
    await this.guard(async () => {
      const posterior = await this.api.postEvidence(this.sessionId(), structure, obs);
      this.store.selected = structure;
      this.store.posterior = posterior;
      this.store.hierarchy = await this.api.hierarchy(this.sessionId());
    });
  }

  async explore(structure: string): Promise<void> {
    await this.guard(async () => {
      this.store.whatif = await this.api.whatIf(this.sessionId(), structure);
    });
  }

  async commit(structure: string, action: string): Promise<void> {
    await this.guard(async () => {
      const record = await this.api.commit(
        this.sessionId(),
        structure,
        action,
        this.store.step,
      );
      this.store.timeline = [...this.store.timeline, record];
      this.store.step += 1;
      this.store.whatif = null;
      this.store.staleStep = false;
      this.store.posterior = await this.api.posterior(
        this.sessionId(),
        this.store.selected ?? structure,
      );
      this.store.hierarchy = await this.api.hierarchy(this.sessionId());
    });
  }

  /** Resync after a stale-step commit rejection. */
  async refresh(): Promise<void> {
    await this.guard(async () => {
      const log = await this.api.log(this.sessionId());
      this.store.step = log.step;
      this.store.timeline = log.trajectory;
      this.store.hierarchy = await this.api.hierarchy(this.sessionId());
      if (this.store.selected) {
        this.store.posterior = await this.api.posterior(this.sessionId(), this.store.selected);
      }
      if (this.store.whatif) {
        this.store.whatif = await this.api.whatIf(this.sessionId(), this.store.whatif.structure);
      }
      this.store.staleStep = false;
    });
  }

  async fetchVoi(kind: string): Promise<void> {
    await this.guard(async () => {
      this.store.voi = await this.api.voi(this.sessionId(), kind);
    });
  }

  async retry(): Promise<void> {
    const op = this.lastOp;
    if (op) {
      this.lastOp = null;
      await this.guard(op);
    }
  }

  // --- plumbing ----------------------------------------------------------------

  private sessionId(): string {
    if (!this.store.sessionId) throw new Error("no active session");
    return this.store.sessionId;
  }

  private async guard(op: () => Promise<void>): Promise<void> {
    try {
      this.store.error = null;
      await op();
    } catch (error) {
      if (error instanceof ApiError && error.status === 409) {
        this.store.staleStep = true;
      } else if (error instanceof ApiError) {
        this.store.error = error.detail;
        this.lastOp = op;
      } else {
        this.store.error = String(error);
        this.lastOp = op;
      }
    }
    this.render();
  }

  private onClick(event: Event): void {
    const target = event.target as HTMLElement;
    const structureNode = target.closest("[data-structure]") as HTMLElement | null;
    if (target.classList.contains("commit") && structureNode) {
      void this.commit(structureNode.dataset.structure!, target.dataset.action!);
      return;
    }
    if (target.id === "refresh-whatif") {
      void this.refresh();
      return;
    }
    if (target.id === "explore-btn" && this.store.selected) {
      void this.explore(this.store.selected);
      return;
    }
    if (target.id === "voi-obs") {
      void this.fetchVoi("obs");
      return;
    }
    if (target.id === "voi-transfer") {
      void this.fetchVoi("transfer");
      return;
    }
    if (target.id === "retry-last") {
      void this.retry();
      return;
    }
    if (structureNode?.dataset.structure) {
      void this.select(structureNode.dataset.structure);
    }
  }

  private onSubmit(event: Event): void {
    const form = event.target as HTMLFormElement;
    if (form.id !== "evidence-form") return;
    event.preventDefault();
    const structure = (this.root.querySelector("#evidence-structure") as HTMLSelectElement)
      .value;
    const obs = (this.root.querySelector("#evidence-obs") as HTMLInputElement).value.trim();
    void this.enterEvidence(structure, obs);
  }

  private setFieldError(message: string): void {
    const slot = this.root.querySelector("#evidence-error");
    if (slot) slot.textContent = message;
  }

  render(): void {
    const s = this.store;
    const header = s.sessionId
      ? `session <code>${escapeHtml(s.sessionId)}</code>
         ${s.session ? `&middot; scenario <strong>${escapeHtml(s.session.scenario)}</strong>` : ""}
         &middot; step <span data-step>${s.step}</span>`
      : "no session";
    const banner = s.error
      ? `<div id="error-banner" role="alert">${escapeHtml(s.error)}
           <button id="retry-last">retry</button></div>`
      : "";
    const explore = s.selected
      ? `<button id="explore-btn">explore what-if for ${escapeHtml(s.selected)}</button>`
      : "";
    this.root.innerHTML = `
      <header><h1>riskdesk console</h1><p>${header}</p></header>
      ${banner}
      <main>
        <section id="hierarchy-panel">${renderHierarchy(s.hierarchy, s.selected)}</section>
        <div class="column">
          <section id="evidence-panel">
            ${renderEvidence(s.structures, s.observations, s.selected)}
          </section>
          <section id="posterior-panel">${renderPosterior(s.posterior)}${explore}</section>
          <section id="whatif-panel">${renderWhatIf(s.whatif, s.staleStep)}</section>
          <section id="timeline-panel">${renderTimeline(s.timeline)}</section>
          <section id="voi-panel">${renderVoi(s.voi)}</section>
        </div>
      </main>`;
  }
}

function collectStructures(root: HierarchyNodePayload): string[] {
  const out: string[] = [];
  const walk = (node: HierarchyNodePayload) => {
    if (node.level === "S3") out.push(node.id);
    (node.children ?? []).forEach(walk);
  };
  walk(root);
  return out;
}
