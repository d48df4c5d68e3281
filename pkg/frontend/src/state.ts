import type {
  CommitRecord,
  HierarchyPayload,
  PosteriorPayload,
  SessionInfo,
  VoiPayload,
  WhatIfPayload,
} from "./types.js";

/**
 * Everything the console shows lives here, and every field is a verbatim
 * server payload (or a selection over them). Views render from this store
 * and nothing else, so reconstructing it from GET /log + GET endpoints
 * reconstructs the whole UI.
 */
export class ConsoleStore {
  sessionId: string | null = null;
  session: SessionInfo | null = null; // present only for sessions created in this tab
  structures: string[] = [];
  observations: string[] = []; // known symbol domain (empty after a bare reload)
  step = 0;
  selected: string | null = null;
  posterior: PosteriorPayload | null = null; // for the selected structure
  hierarchy: HierarchyPayload | null = null;
  whatif: WhatIfPayload | null = null;
  timeline: CommitRecord[] = [];
  voi: VoiPayload | null = null;
  error: string | null = null;
  staleStep = false; // a commit was rejected: prompt for refresh
}
