/**
 * DOM wiring for the annotation page. All decisions live in state.ts and
 * all markup in view.ts; this file only dispatches events and runs the
 * fetch/submit loop against the service.
 */

import {
  ApiClient,
  ApiError,
  DuplicateSubmission,
  ServiceUnreachable,
  type NextTaskReply,
} from "./api.js";
import {
  STRATEGY_LABELS,
  initialState,
  isComplete,
  labelForKey,
  reduce,
  type SessionEvent,
  type SessionState,
} from "./state.js";
import {
  renderDone,
  renderLoading,
  renderNotice,
  renderRejection,
  renderTask,
  renderUnreachable,
} from "./view.js";

export interface AppConfig {
  sessionId: string;
  annotatorId: string;
  baseUrl: string;
}

export function configFromSearch(search: string): AppConfig {
  const params = new URLSearchParams(search);
  return {
    sessionId: params.get("session") ?? "default",
    annotatorId: params.get("annotator") ?? "anonymous",
    baseUrl: "",
  };
}

class App {
  private state: SessionState = initialState();
  private readonly api: ApiClient;
  /** Letter of the output section that last held focus, restored after renders. */
  private focusLetter: string | null = null;

  constructor(
    private readonly root: HTMLElement,
    private readonly config: AppConfig,
  ) {
    this.api = new ApiClient(config.baseUrl, config.sessionId);
    this.wire();
  }

  start(): void {
    void this.loadNext();
  }

  private dispatch(event: SessionEvent): void {
    this.state = reduce(this.state, event);
    this.render();
  }

  private render(): void {
    const s = this.state;
    let body: string;
    switch (s.phase) {
      case "loading":
        body = renderLoading();
        break;
      case "task":
        body = s.task ? renderTask(s.task, s.draft, s.progress) : renderLoading();
        break;
      case "done":
        body = renderDone(s.progress);
        break;
      case "unreachable":
        body = renderUnreachable();
        break;
    }
    this.root.innerHTML = renderNotice(s.notice) + renderRejection(s.rejection) + body;
    if (s.phase === "task" && this.focusLetter !== null) {
      const section = this.root.querySelector<HTMLElement>(
        `section.output[data-letter="${this.focusLetter}"]`,
      );
      section?.focus({ preventScroll: true });
    }
  }

  private wire(): void {
    this.root.addEventListener("change", (event) => {
      const select = event.target;
      if (select instanceof HTMLSelectElement && select.classList.contains("rank")) {
        const letter = select.dataset.letter;
        const rank = Number.parseInt(select.value, 10);
        if (letter && Number.isInteger(rank)) {
          this.dispatch({ kind: "set-rank", letter, rank });
        }
      }
    });
    this.root.addEventListener("click", (event) => {
      const target = event.target instanceof Element ? event.target : null;
      const labelBtn = target?.closest<HTMLElement>("button.label-btn");
      if (labelBtn?.dataset.letter && labelBtn.dataset.label) {
        const label = STRATEGY_LABELS.find((l) => l === labelBtn.dataset.label);
        if (label !== undefined) {
          this.dispatch({ kind: "set-label", letter: labelBtn.dataset.letter, label });
        }
        return;
      }
      if (target?.closest("#submit")) {
        void this.submitAndAdvance();
        return;
      }
      if (target?.closest("#retry")) {
        this.dispatch({ kind: "retrying" });
        void this.loadNext();
      }
    });
    this.root.addEventListener("focusin", (event) => {
      const section =
        event.target instanceof Element ? event.target.closest<HTMLElement>("section.output") : null;
      if (section?.dataset.letter) {
        this.focusLetter = section.dataset.letter;
      }
    });
    document.addEventListener("keydown", (event) => this.onKey(event));
  }

  private onKey(event: KeyboardEvent): void {
    if (this.state.phase !== "task" || this.state.task === null) {
      return;
    }
    const target = event.target;
    // Let native select/button keyboard handling win inside form controls.
    if (target instanceof HTMLSelectElement) {
      return;
    }
    if (event.key === "Enter") {
      if (target instanceof HTMLButtonElement) {
        return;
      }
      if (isComplete(this.state.task, this.state.draft)) {
        event.preventDefault();
        void this.submitAndAdvance();
      }
      return;
    }
    if (this.focusLetter === null) {
      return;
    }
    if (/^[1-9]$/.test(event.key)) {
      const rank = Number.parseInt(event.key, 10);
      if (rank <= Object.keys(this.state.task.outputs).length) {
        event.preventDefault();
        this.dispatch({ kind: "set-rank", letter: this.focusLetter, rank });
      }
      return;
    }
    const label = labelForKey(event.key);
    if (label !== null && event.key.length === 1) {
      event.preventDefault();
      this.dispatch({ kind: "set-label", letter: this.focusLetter, label });
    }
  }

  private async loadNext(): Promise<void> {
    try {
      await this.applyReply(await this.api.nextTask(this.config.annotatorId));
    } catch (err) {
      this.toBanner(err);
    }
  }

  private async applyReply(reply: NextTaskReply): Promise<void> {
    const progress = await this.api.progress(this.config.annotatorId);
    if (reply.done || reply.task === null) {
      this.dispatch({ kind: "session-done", progress });
    } else {
      this.dispatch({ kind: "task-loaded", task: reply.task, progress });
    }
  }

  private async submitAndAdvance(): Promise<void> {
    const task = this.state.task;
    if (task === null || this.state.submitting || !isComplete(task, this.state.draft)) {
      return;
    }
    this.dispatch({ kind: "submit-started" });
    const submission = this.api.submit({
      annotator_id: this.config.annotatorId,
      sample_id: task.sample_id,
      ranks: this.state.draft.ranks,
      labels: this.state.draft.labels,
    });
    // Optimistic: request the next task while the submission is in flight.
    const prefetch = this.api.nextTask(this.config.annotatorId).catch(() => null);
    try {
      await submission;
    } catch (err) {
      if (err instanceof DuplicateSubmission) {
        this.dispatch({ kind: "submit-duplicate", originalTimestamp: err.originalTimestamp });
        await this.loadNext();
      } else if (err instanceof ApiError) {
        this.dispatch({ kind: "submit-rejected", message: String(err.message) });
      } else {
        this.toBanner(err);
      }
      return;
    }
    const reply = await prefetch;
    if (reply === null || (reply.task !== null && reply.task.sample_id === task.sample_id)) {
      // The prefetch raced ahead of the submission; ask again now it landed.
      await this.loadNext();
      return;
    }
    try {
      await this.applyReply(reply);
    } catch (err) {
      this.toBanner(err);
    }
  }

  private toBanner(err: unknown): void {
    const detail =
      err instanceof ServiceUnreachable
        ? undefined
        : err instanceof Error
          ? err.message
          : String(err);
    this.dispatch({ kind: "unreachable", detail });
  }
}

export function mount(root: HTMLElement, config: AppConfig): void {
  new App(root, config).start();
}

const appRoot = typeof document === "undefined" ? null : document.getElementById("app");
if (appRoot !== null) {
  mount(appRoot, configFromSearch(window.location.search));
}
