/** Mirrors of the backend HTTP API documents. The UI never invents state:
 * everything here is exactly what the endpoints return. */

export type SessionStatus = "running" | "awaiting-developer" | "completed" | "halted";

export type IterationPhase = "first" | "intermediate" | "refactor";

export type DecisionKind =
  | "approve"
  | "edit-then-approve"
  | "request-regeneration"
  | "declare-feature-complete"
  | "abort";

export interface DocumentView {
  filename: string;
  text: string;
}

export interface ArtifactsView {
  test: DocumentView;
  production: DocumentView;
}

export interface OutcomeView {
  status: "passed" | "failed" | "error" | "timeout";
  exit_code: number;
  log: string;
  duration_seconds: number;
}

export interface CurrentStepView {
  index: number;
  phase: IterationPhase;
  attempts: number;
  awaiting: "start" | "retry" | "review";
  proposed_prompt: string;
  failure_log: string;
}

export interface SessionView {
  id: string;
  pattern: string;
  status: SessionStatus;
  feature: { description: string };
  iterations_done: number;
  current: CurrentStepView;
  artifacts: ArtifactsView;
  previous_artifacts: ArtifactsView;
  warnings: string[];
  last_outcome: OutcomeView | null;
  event_position: number;
}

export interface IterationRecordView {
  index: number;
  phase: IterationPhase;
  prompt_sent: string;
  raw_replies: string[];
  attempts: number;
  artifacts_after: ArtifactsView;
  outcome: OutcomeView;
  developer_edits: string | null;
  warnings: string[];
}

export interface WorkflowEventView {
  id: number;
  event: string;
  at: string;
  data: Record<string, unknown>;
}

export interface DecisionBody {
  kind: DecisionKind;
  test_source?: string;
  production_source?: string;
  prompt?: string;
  note?: string;
}
