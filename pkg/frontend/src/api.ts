/**
 * Thin fetch client for the annotation service.
 *
 * The UI talks to exactly these five endpoints and nothing else; the
 * base URL is the single piece of configuration.
 */

import type {
  AgreementResponse,
  Answer,
  ProgressResponse,
  SubmitResponse,
  TaskDetail,
  TaskSummary,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    message: string,
  ) {
    super(message);
  }
}

export class SchemaRejectedError extends ApiError {
  constructor(message: string) {
    super(409, message);
  }
}

async function asJson<T>(resp: Response): Promise<T> {
  if (!resp.ok) {
    let detail = resp.statusText;
    try {
      const body = (await resp.json()) as { detail?: string };
      if (body.detail) detail = body.detail;
    } catch {
      // non-JSON error body: keep the status text
    }
    if (resp.status === 409) throw new SchemaRejectedError(detail);
    throw new ApiError(resp.status, detail);
  }
  return (await resp.json()) as T;
}

export class ApiClient {
  constructor(private readonly baseUrl: string) {}

  async openTasks(annotatorId: string): Promise<TaskSummary[]> {
    const url = new URL(`${this.baseUrl}/api/tasks`);
    url.searchParams.set("annotator", annotatorId);
    url.searchParams.set("status", "open");
    const body = await asJson<{ tasks: TaskSummary[] }>(await fetch(url));
    return body.tasks;
  }

  async task(taskId: string): Promise<TaskDetail> {
    return asJson<TaskDetail>(
      await fetch(`${this.baseUrl}/api/tasks/${encodeURIComponent(taskId)}`),
    );
  }

  async submit(
    taskId: string,
    annotatorId: string,
    answer: Answer,
  ): Promise<SubmitResponse> {
    const resp = await fetch(
      `${this.baseUrl}/api/tasks/${encodeURIComponent(taskId)}/result`,
      {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify({ annotator_id: annotatorId, answer }),
      },
    );
    return asJson<SubmitResponse>(resp);
  }

  async progress(): Promise<ProgressResponse> {
    return asJson<ProgressResponse>(
      await fetch(`${this.baseUrl}/api/progress`),
    );
  }

  async agreement(): Promise<AgreementResponse> {
    return asJson<AgreementResponse>(
      await fetch(`${this.baseUrl}/api/agreement`),
    );
  }
}
