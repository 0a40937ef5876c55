/**
 * Pure HTML renderers for every screen.
 *
 * Rendering is string-based and side-effect free so it can be unit
 * tested without a browser; app.ts attaches the event wiring.
 */

import { GUIDELINE_SCENARIOS } from "./guidelines.js";
import type { TaskView } from "./state.js";
import type {
  AgreementResponse,
  ProgressResponse,
  TaskDetail,
} from "./types.js";

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export function renderIdle(): string {
  return `<section class="idle"><h2>All done</h2>
<p>No open tasks are assigned to you right now.</p></section>`;
}

export function renderRetryBanner(message: string): string {
  return `<div class="banner error">Service unreachable: ${escapeHtml(
    message,
  )} <button data-action="retry">Retry</button></div>`;
}

export function renderGuidelines(): string {
  const items = GUIDELINE_SCENARIOS.map(
    (s) =>
      `<li class="${s.rule}"><strong>${escapeHtml(s.title)}</strong>: ` +
      `${s.rule === "different" ? "different meaning" : "same meaning"}, ` +
      `e.g. ${escapeHtml(s.example)}</li>`,
  ).join("\n");
  return `<details class="guidelines"><summary>When do word uses convey
different meanings? (11 scenarios)</summary><ol>\n${items}\n</ol></details>`;
}

/** Sub-clustering screen: every member with its group selector. */
export function renderSubcluster(view: TaskView, groupCount: number): string {
  const payload = view.task.payload;
  const rows = payload.members
    .map((member: string) => {
      const text = payload.member_texts?.[member] ?? member;
      const slot = view.draft.slots[member];
      const options = [
        `<option value="" ${slot == null ? "selected" : ""}></option>`,
        ...Array.from({ length: groupCount }, (_, g) => {
          const sel = slot === g ? "selected" : "";
          return `<option value="${g}" ${sel}>group ${g + 1}</option>`;
        }),
        `<option value="outlier" ${
          slot === "outlier" ? "selected" : ""
        }>outlier</option>`,
      ].join("");
      return `<li><span class="sentence">${escapeHtml(text)}</span>
<select data-member="${escapeHtml(member)}">${options}</select></li>`;
    })
    .join("\n");
  const topics = Array.from({ length: groupCount }, (_, g) => {
    const value = escapeHtml(view.draft.topics[g] ?? "");
    return `<label>group ${g + 1} topic
<input data-topic="${g}" value="${value}" placeholder="abstract event sentence"></label>`;
  }).join("\n");
  return `<section class="subcluster">
<h2>Sub-cluster ${escapeHtml(payload.cluster_id)}</h2>
${renderGuidelines()}
<ul class="members">\n${rows}\n</ul>
<div class="topics">\n${topics}\n</div>
<button data-action="add-group">Add group</button>
${renderSubmit(view)}
</section>`;
}

/** Non-contextual causal judgment: topics only, no stories. */
export function renderCausalPair(view: TaskView): string {
  const [topicA, topicB] = view.task.payload.topics;
  return `<section class="causal">
<h2>Which relation holds?</h2>
<p class="pair"><span class="topic">A: ${escapeHtml(topicA)}</span>
<span class="topic">B: ${escapeHtml(topicB)}</span></p>
${renderLabelChoices(view)}
${renderSubmit(view)}
</section>`;
}

/** Re-evaluation screen: story contexts shown above the pair. */
export function renderReeval(view: TaskView): string {
  const payload = view.task.payload;
  const contexts = (payload.contexts ?? [])
    .map(
      (story: string, i: number) =>
        `<blockquote class="context">Story ${i + 1}: ${escapeHtml(
          story,
        )}</blockquote>`,
    )
    .join("\n");
  const flag = payload.flagged
    ? `<p class="banner warn">No story contains both abstractions; the
closest single-abstraction stories are shown instead.</p>`
    : "";
  return `<section class="reeval">
<h2>Re-evaluate with story contexts</h2>
${flag}
${contexts}
<p class="pair"><span class="topic">A: ${escapeHtml(
    payload.topics[0],
  )}</span> <span class="topic">B: ${escapeHtml(payload.topics[1])}</span></p>
${renderLabelChoices(view)}
${renderSubmit(view)}
</section>`;
}

function renderLabelChoices(view: TaskView): string {
  const options: [string, string][] = [
    ["a_causes_b", "A causes B"],
    ["b_causes_a", "B causes A"],
    ["none", "No causal relation"],
  ];
  return (
    `<div class="labels">` +
    options
      .map(([value, text]) => {
        const checked = view.draft.label === value ? "checked" : "";
        return `<label><input type="radio" name="label" value="${value}"
 ${checked}> ${text}</label>`;
      })
      .join("\n") +
    `</div>`
  );
}

function renderSubmit(view: TaskView): string {
  const errors = view.validationErrors();
  const list = errors
    .map((e) => `<li>${escapeHtml(e)}</li>`)
    .join("");
  return `<ul class="validation">${list}</ul>
<button data-action="submit" ${errors.length ? "disabled" : ""}>Submit</button>`;
}

export function renderTask(view: TaskView, groupCount: number): string {
  switch (view.task.kind) {
    case "subcluster":
      return renderSubcluster(view, groupCount);
    case "causal_pair":
      return renderCausalPair(view);
    case "reeval_with_context":
      return renderReeval(view);
    default:
      return `<section><h2>${escapeHtml(view.task.kind)}</h2></section>`;
  }
}

export function renderDashboard(
  progress: ProgressResponse,
  agreement: AgreementResponse,
  stale?: string,
): string {
  const bars = Object.entries(progress.batches)
    .sort(([a], [b]) => a.localeCompare(b))
    .map(([batch, counts]) => {
      const pct =
        counts.total === 0
          ? 0
          : Math.round((100 * counts.complete) / counts.total);
      return `<div class="bar-row"><span>${escapeHtml(batch)}</span>
<progress max="100" value="${pct}"></progress> <span>${pct}%</span></div>`;
    })
    .join("\n");
  const alpha =
    agreement.alpha === null ? "n/a" : agreement.alpha.toFixed(3);
  const queue = agreement.escalations
    .map(
      (id) =>
        `<li><a href="#task/reeval-${escapeHtml(id)}">${escapeHtml(
          id,
        )}</a></li>`,
    )
    .join("");
  const staleNote = stale
    ? `<p class="banner warn">showing snapshot from ${escapeHtml(stale)}</p>`
    : "";
  return `<section class="dashboard">
${staleNote}
<h2>Progress</h2>
${bars}
<p class="alpha">Krippendorff's alpha: <strong>${alpha}</strong></p>
<h3>Escalation queue (${agreement.escalations.length})</h3>
<ul class="escalations">${queue}</ul>
</section>`;
}

export function taskTitle(task: TaskDetail): string {
  return `${task.kind} · ${task.task_id}`;
}
