/**
 * Browser wiring: fetch the next open task for the annotator, render it,
 * track the draft, submit, advance. The dashboard refreshes after every
 * submission.
 */

import { ApiClient, SchemaRejectedError } from "./api.js";
import { nextTaskId, TaskView, type KeyValueStorage } from "./state.js";
import {
  renderDashboard,
  renderIdle,
  renderRetryBanner,
  renderTask,
} from "./render.js";
import type { CausalLabel } from "./types.js";

interface AppConfig {
  baseUrl: string;
  annotatorId: string;
  root: HTMLElement;
  dashboard: HTMLElement;
  storage?: KeyValueStorage;
}

export async function startApp(config: AppConfig): Promise<void> {
  const api = new ApiClient(config.baseUrl);
  const storage = config.storage ?? window.localStorage;
  let groupCount = 2;

  async function refreshDashboard(): Promise<void> {
    try {
      const [progress, agreement] = await Promise.all([
        api.progress(),
        api.agreement(),
      ]);
      config.dashboard.innerHTML = renderDashboard(progress, agreement);
    } catch {
      const stamp = new Date().toISOString();
      config.dashboard.innerHTML = renderDashboard(
        { batches: {} },
        { alpha: null, escalations: [], final_labels: {} },
        stamp,
      );
    }
  }

  async function showNext(): Promise<void> {
    let tasks;
    try {
      tasks = await api.openTasks(config.annotatorId);
    } catch (err) {
      config.root.innerHTML = renderRetryBanner(String(err));
      bindRetry();
      return;
    }
    const taskId = nextTaskId(tasks);
    if (taskId === null) {
      config.root.innerHTML = renderIdle();
      return;
    }
    const detail = await api.task(taskId);
    const view = new TaskView(detail, config.annotatorId, storage);
    groupCount = Math.max(
      2,
      ...Object.values(view.draft.slots).filter(
        (s): s is number => typeof s === "number",
      ).map((g) => g + 1),
    );
    paint(view);
  }

  function paint(view: TaskView): void {
    config.root.innerHTML = renderTask(view, groupCount);
    bind(view);
  }

  function bindRetry(): void {
    config.root
      .querySelector('[data-action="retry"]')
      ?.addEventListener("click", () => void showNext());
  }

  function bind(view: TaskView): void {
    for (const select of config.root.querySelectorAll("select[data-member]")) {
      select.addEventListener("change", (event) => {
        const el = event.target as HTMLSelectElement;
        const member = el.dataset.member as string;
        const value = el.value;
        view.assign(
          member,
          value === "" ? null : value === "outlier" ? "outlier" : Number(value),
        );
        paint(view);
      });
    }
    for (const input of config.root.querySelectorAll("input[data-topic]")) {
      input.addEventListener("input", (event) => {
        const el = event.target as HTMLInputElement;
        view.setTopic(Number(el.dataset.topic), el.value);
        paint(view);
      });
    }
    for (const radio of config.root.querySelectorAll('input[name="label"]')) {
      radio.addEventListener("change", (event) => {
        const el = event.target as HTMLInputElement;
        view.selectLabel(el.value as CausalLabel);
        paint(view);
      });
    }
    config.root
      .querySelector('[data-action="add-group"]')
      ?.addEventListener("click", () => {
        groupCount += 1;
        paint(view);
      });
    config.root
      .querySelector('[data-action="submit"]')
      ?.addEventListener("click", async () => {
        if (!view.canSubmit()) return;
        try {
          await api.submit(
            view.task.task_id,
            config.annotatorId,
            view.answer(),
          );
          view.clearDraft();
          await refreshDashboard();
          await showNext();
        } catch (err) {
          if (err instanceof SchemaRejectedError) {
            // the client-side validator should make this unreachable;
            // surface the server's reason inline if it ever fires
            config.root.insertAdjacentHTML(
              "beforeend",
              renderRetryBanner(err.message),
            );
          } else {
            config.root.innerHTML = renderRetryBanner(String(err));
            bindRetry();
          }
        }
      });
  }

  await refreshDashboard();
  await showNext();
}
