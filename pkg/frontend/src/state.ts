/**
 * Draft state for the task being annotated.
 *
 * A TaskView wraps the task payload served by the API together with the
 * annotator's in-progress answer (group assignments, typed topics, or a
 * selected label). Validation mirrors the server's answer schemas, so
 * submit stays disabled until the draft would be accepted, and drafts
 * survive page reloads through a pluggable storage.
 */

import type {
  Answer,
  CausalLabel,
  SubclusterAnswer,
  TaskDetail,
} from "./types.js";
import { CAUSAL_LABELS } from "./types.js";

/** Assignment of one member: a group number, explicit outlier, or nothing. */
export type MemberSlot = number | "outlier" | null;

export interface DraftState {
  /** member id -> slot, for sub-clustering tasks */
  slots: Record<string, MemberSlot>;
  /** group number -> topic text */
  topics: Record<number, string>;
  /** selected label, for causal and re-evaluation tasks */
  label: CausalLabel | null;
  /** chosen candidate, for topic-match tasks (null = no match) */
  chosenCluster: string | null;
}

export interface KeyValueStorage {
  getItem(key: string): string | null;
  setItem(key: string, value: string): void;
  removeItem(key: string): void;
}

/** In-memory fallback used in tests and non-browser environments. */
export class MemoryStorage implements KeyValueStorage {
  private readonly map = new Map<string, string>();
  getItem(key: string): string | null {
    return this.map.get(key) ?? null;
  }
  setItem(key: string, value: string): void {
    this.map.set(key, value);
  }
  removeItem(key: string): void {
    this.map.delete(key);
  }
}

function emptyDraft(): DraftState {
  return { slots: {}, topics: {}, label: null, chosenCluster: null };
}

export class TaskView {
  readonly task: TaskDetail;
  draft: DraftState;
  submitted = false;
  private readonly storage: KeyValueStorage;
  private readonly annotatorId: string;

  constructor(
    task: TaskDetail,
    annotatorId: string,
    storage: KeyValueStorage = new MemoryStorage(),
  ) {
    this.task = task;
    this.annotatorId = annotatorId;
    this.storage = storage;
    this.draft = this.restore() ?? emptyDraft();
  }

  private get draftKey(): string {
    return `draft:${this.annotatorId}:${this.task.task_id}`;
  }

  private restore(): DraftState | null {
    const raw = this.storage.getItem(this.draftKey);
    if (raw === null) return null;
    try {
      return JSON.parse(raw) as DraftState;
    } catch {
      return null;
    }
  }

  /** Persist the draft so a mid-task refresh loses nothing. */
  persist(): void {
    this.storage.setItem(this.draftKey, JSON.stringify(this.draft));
  }

  clearDraft(): void {
    this.storage.removeItem(this.draftKey);
  }

  // -- mutations ----------------------------------------------------------

  assign(member: string, slot: MemberSlot): void {
    this.draft.slots[member] = slot;
    this.persist();
  }

  setTopic(group: number, topic: string): void {
    this.draft.topics[group] = topic;
    this.persist();
  }

  selectLabel(label: CausalLabel): void {
    this.draft.label = label;
    this.persist();
  }

  chooseCluster(clusterId: string | null): void {
    this.draft.chosenCluster = clusterId;
    this.persist();
  }

  // -- validation (mirrors the server's answer schemas) ---------------------

  /** Group numbers that currently hold at least one member. */
  private liveGroups(): Map<number, string[]> {
    const groups = new Map<number, string[]>();
    for (const [member, slot] of Object.entries(this.draft.slots)) {
      if (typeof slot === "number") {
        const list = groups.get(slot) ?? [];
        list.push(member);
        groups.set(slot, list);
      }
    }
    return groups;
  }

  /** Human-readable reasons the draft cannot be submitted yet. */
  validationErrors(): string[] {
    const errors: string[] = [];
    const kind = this.task.kind;
    if (kind === "subcluster") {
      const members: string[] = this.task.payload.members ?? [];
      const unassigned = members.filter(
        (m) => this.draft.slots[m] === null || this.draft.slots[m] === undefined,
      );
      if (unassigned.length > 0) {
        errors.push(
          `${unassigned.length} event(s) still need a group or the outlier bin`,
        );
      }
      for (const [group, list] of this.liveGroups()) {
        if (list.length < 2) {
          errors.push(
            `group ${group + 1} has a single event; move it to outliers`,
          );
        }
        if (!(this.draft.topics[group] ?? "").trim()) {
          errors.push(`group ${group + 1} needs a topic sentence`);
        }
      }
    } else if (kind === "causal_pair" || kind === "reeval_with_context") {
      if (
        this.draft.label === null ||
        !CAUSAL_LABELS.includes(this.draft.label)
      ) {
        errors.push("choose exactly one of the three relations");
      }
    } else if (kind === "topic_match") {
      const candidates =
        (this.task.payload.candidates as string[] | undefined) ?? [];
      if (
        this.draft.chosenCluster !== null &&
        !candidates.includes(this.draft.chosenCluster)
      ) {
        errors.push("chosen topic is not among the candidates");
      }
    } else if (kind === "topic") {
      if (!(this.draft.topics[0] ?? "").trim()) {
        errors.push("enter a topic sentence");
      }
    }
    return errors;
  }

  canSubmit(): boolean {
    return this.validationErrors().length === 0;
  }

  /** Build the wire answer; only valid when canSubmit() holds. */
  answer(): Answer {
    const kind = this.task.kind;
    if (kind === "subcluster") {
      const groups = [...this.liveGroups().entries()]
        .sort(([a], [b]) => a - b)
        .map(([group, list]) => ({
          members: [...list].sort(),
          topic: (this.draft.topics[group] ?? "").trim(),
        }));
      const outliers = Object.entries(this.draft.slots)
        .filter(([, slot]) => slot === "outlier")
        .map(([member]) => member)
        .sort();
      return { groups, outliers } satisfies SubclusterAnswer;
    }
    if (kind === "causal_pair" || kind === "reeval_with_context") {
      return { label: this.draft.label as CausalLabel };
    }
    if (kind === "topic_match") {
      return { cluster_id: this.draft.chosenCluster };
    }
    return { topic: (this.draft.topics[0] ?? "").trim() };
  }
}

/** Oldest open task assigned to the annotator, or null for the idle screen. */
export function nextTaskId(
  tasks: { task_id: string; status: string }[],
): string | null {
  const open = tasks.filter((t) => t.status === "open");
  if (open.length === 0) return null;
  return open.map((t) => t.task_id).sort()[0];
}
