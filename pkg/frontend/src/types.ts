/**
 * Wire types for the annotation service API.
 *
 * These mirror the server's task and answer schemas exactly; the client
 * validates drafts against the same rules before enabling submission so
 * a well-behaved session can never draw a 409.
 */

export type TaskKind =
  | "subcluster"
  | "topic"
  | "causal_pair"
  | "topic_match"
  | "reeval_with_context";

export type TaskStatus = "open" | "complete" | "escalated";

export type CausalLabel = "a_causes_b" | "b_causes_a" | "none";

export const CAUSAL_LABELS: readonly CausalLabel[] = [
  "a_causes_b",
  "b_causes_a",
  "none",
];

export interface TaskSummary {
  task_id: string;
  kind: TaskKind;
  status: TaskStatus;
  batch_id: string | null;
  assigned_to: string[];
}

export interface SubclusterPayload {
  cluster_id: string;
  members: string[];
  member_texts: Record<string, string>;
}

export interface CausalPairPayload {
  cluster_a: string;
  cluster_b: string;
  topics: [string, string];
  contexts?: string[];
  flagged?: boolean;
}

export interface TaskDetail extends TaskSummary {
  payload: SubclusterPayload & CausalPairPayload & Record<string, unknown>;
}

export interface SubclusterGroup {
  members: string[];
  topic: string;
}

export interface SubclusterAnswer {
  groups: SubclusterGroup[];
  outliers: string[];
}

export interface CausalAnswer {
  label: CausalLabel;
}

export type Answer = SubclusterAnswer | CausalAnswer | Record<string, unknown>;

export interface SubmitResponse {
  accepted: boolean;
  timestamp: number;
  task_status: TaskStatus;
}

export interface ProgressResponse {
  batches: Record<
    string,
    { total: number; complete: number; escalated: number }
  >;
}

export interface AgreementResponse {
  alpha: number | null;
  escalations: string[];
  final_labels: Record<string, string>;
}
