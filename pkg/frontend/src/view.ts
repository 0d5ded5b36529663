/**
 * HTML rendering as pure string functions. main.ts assigns the result to
 * innerHTML and wires events by delegation, so everything here can be
 * asserted on directly without a DOM.
 */

import type { Progress, Task } from "./api.js";
import { STRATEGY_LABELS, draftProblems, isComplete, taskLetters, type Draft } from "./state.js";

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

/**
 * Wrap the given 0-based end-exclusive spans of `text` in <mark> tags.
 * Spans are rendered in order and must not overlap; out-of-range ends are
 * clamped so a stale span can never break the page.
 */
export function highlightSource(text: string, spans: [number, number][]): string {
  const ordered = spans
    .map(([start, end]): [number, number] => [
      Math.max(0, Math.min(start, text.length)),
      Math.max(0, Math.min(end, text.length)),
    ])
    .filter(([start, end]) => start < end)
    .sort((a, b) => a[0] - b[0]);
  const parts: string[] = [];
  let cursor = 0;
  for (const [start, end] of ordered) {
    if (start < cursor) {
      continue;
    }
    parts.push(escapeHtml(text.slice(cursor, start)));
    parts.push(`<mark>${escapeHtml(text.slice(start, end))}</mark>`);
    cursor = end;
  }
  parts.push(escapeHtml(text.slice(cursor)));
  return parts.join("");
}

export function renderProgress(progress: Progress | null): string {
  if (progress === null) {
    return "";
  }
  return `<span class="progress">${progress.completed} / ${progress.total} done</span>`;
}

export function renderNotice(notice: string | null): string {
  if (notice === null) {
    return "";
  }
  return `<div class="notice" role="status">${escapeHtml(notice)}</div>`;
}

function renderRankSelect(letter: string, count: number, current: number | undefined): string {
  const options = ["<option value=\"\">rank</option>"];
  for (let rank = 1; rank <= count; rank++) {
    const selected = rank === current ? " selected" : "";
    options.push(`<option value="${rank}"${selected}>${rank}</option>`);
  }
  return `<select class="rank" data-letter="${letter}" aria-label="rank for output ${letter}">${options.join("")}</select>`;
}

function renderLabelPicker(letter: string, current: string | undefined): string {
  const buttons = STRATEGY_LABELS.map((label) => {
    const pressed = label === current ? " true" : " false";
    const cls = label === current ? "label-btn selected" : "label-btn";
    return (
      `<button type="button" class="${cls}" data-letter="${letter}" ` +
      `data-label="${escapeHtml(label)}" aria-pressed="${pressed.trim()}">` +
      `<u>${escapeHtml(label[0]!)}</u>${escapeHtml(label.slice(1))}</button>`
    );
  });
  return `<div class="labels" role="group" aria-label="strategy label for output ${letter}">${buttons.join("")}</div>`;
}

export function renderTask(task: Task, draft: Draft, progress: Progress | null): string {
  const letters = taskLetters(task);
  const rows = letters.map((letter) => {
    const text = task.outputs[letter] ?? "";
    return `<section class="output" data-letter="${letter}" tabindex="0">
  <header><span class="slot">${letter}</span>${renderRankSelect(letter, letters.length, draft.ranks[letter])}</header>
  <p class="output-text">${escapeHtml(text)}</p>
  ${renderLabelPicker(letter, draft.labels[letter])}
</section>`;
  });
  const problems = draftProblems(task, draft);
  const ready = isComplete(task, draft);
  const hint = ready
    ? "ready to submit"
    : `to do: ${problems.join("; ")}`;
  return `<article class="task" data-sample-id="${escapeHtml(task.sample_id)}">
  <header class="task-header">
    <h2>${escapeHtml(task.sample_id)}</h2>
    ${renderProgress(progress)}
  </header>
  <section class="source">
    <h3>Source</h3>
    <p lang="en">${highlightSource(task.source_text, task.csi_spans)}</p>
  </section>
  <section class="reference">
    <h3>Reference</h3>
    <p>${escapeHtml(task.reference_text)}</p>
  </section>
  <h3>Outputs</h3>
  <p class="help">Rank 1 is easiest to understand. Keys: digits set the rank of the
  focused output, underlined letters set its label, Enter submits.</p>
  ${rows.join("\n")}
  <footer>
    <span class="hint">${escapeHtml(hint)}</span>
    <button type="button" id="submit" ${ready ? "" : "disabled "}class="submit">Submit</button>
  </footer>
</article>`;
}

export function renderRejection(message: string | null): string {
  if (message === null) {
    return "";
  }
  return `<div class="rejection" role="alert">rejected by server: ${escapeHtml(message)}</div>`;
}

export function renderDone(progress: Progress | null): string {
  const line = progress === null ? "" : `<p>${progress.completed} of ${progress.total} tasks annotated.</p>`;
  return `<article class="done">
  <h2>Session complete</h2>
  ${line}
  <p>You can close this tab; every annotation has been stored.</p>
</article>`;
}

export function renderLoading(): string {
  return `<article class="loading"><p>Loading next task&hellip;</p></article>`;
}

export function renderUnreachable(): string {
  return `<article class="unreachable" role="alert">
  <h2>Cannot reach the annotation service</h2>
  <p>Nothing was lost. Check that the server is still running, then retry.</p>
  <button type="button" id="retry">Retry</button>
</article>`;
}
