// Shapes of the service payloads, mirrored 1:1. The console never derives
// numbers from these; it displays them.

export interface SessionInfo {
  session_id: string;
  created_at: string;
  scenario: string;
  structures: string[];
  actions: string[];
  observations: string[];
}

export interface PopulationFailure {
  k: number;
  availability_threshold: string;
  expected_availability: number;
  failure_probability: number;
}

export interface FailureBlock {
  components: Record<string, number>;
  substructures: Record<string, number>;
  structure: number;
  population: PopulationFailure;
}

export interface PosteriorPayload {
  structure: string;
  step: number;
  observation: string | null;
  belief: Record<string, number>;
  failure: FailureBlock;
}

export interface HierarchyNodePayload {
  id: string;
  level: string;
  kind: string;
  type_tag: string | null;
  failure_probability: number | null;
  population?: PopulationFailure | null;
  children?: HierarchyNodePayload[];
}

export interface HierarchyPayload {
  session_id: string;
  step: number;
  root: HierarchyNodePayload;
}

export interface WhatIfRow {
  action: string;
  expected_utility: number;
  forecast_failure_probability: number;
}

export interface WhatIfPayload {
  structure: string;
  step: number;
  actions: WhatIfRow[];
  recommended: string;
}

export interface CommitOutcome {
  action: string;
  observation: string;
  realized_utility: number;
  failed: boolean;
}

export interface CommitRecord {
  step: number;
  env: string | null;
  structures: Record<string, CommitOutcome>;
  availability: number;
  population_failed: boolean;
}

export interface VoiPayload {
  kind: string;
  value: number;
  baseline: number;
  informed: number;
  n: number | null;
  stderr: number | null;
  seed: number | null;
}

export interface LogPayload {
  session_id: string;
  created_at: string;
  updated_at: string;
  step: number;
  events: Array<Record<string, unknown>>;
  trajectory: CommitRecord[];
}
