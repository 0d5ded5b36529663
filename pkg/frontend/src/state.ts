/**
 * Pure session state: draft edits, completeness rules, and the event
 * reducer that drives the page. No DOM access anywhere in this module,
 * so every transition is directly testable.
 */

import type { Progress, Task } from "./api.js";

/** Strategy labels accepted by the service, in display order. */
export const STRATEGY_LABELS = [
  "Transliteration",
  "Literal translation",
  "Description",
  "Substitution",
  "Copy",
  "Wrong",
  "Other",
] as const;

export type StrategyLabel = (typeof STRATEGY_LABELS)[number];

/** One-key shortcuts; every label starts with a distinct letter. */
export function labelForKey(key: string): StrategyLabel | null {
  const lower = key.toLowerCase();
  for (const label of STRATEGY_LABELS) {
    if (label[0]!.toLowerCase() === lower) {
      return label;
    }
  }
  return null;
}

export interface Draft {
  ranks: Record<string, number>;
  labels: Record<string, StrategyLabel>;
}

export function emptyDraft(): Draft {
  return { ranks: {}, labels: {} };
}

export function taskLetters(task: Task): string[] {
  return Object.keys(task.outputs).sort();
}

/**
 * Assign a rank to a letter. If another letter already holds that rank the
 * two swap, so the draft can never contain a duplicate rank and the final
 * submission is a permutation by construction.
 */
export function setRank(draft: Draft, letter: string, rank: number): Draft {
  const ranks = { ...draft.ranks };
  const previous = ranks[letter];
  for (const [other, held] of Object.entries(ranks)) {
    if (other !== letter && held === rank) {
      if (previous === undefined) {
        delete ranks[other];
      } else {
        ranks[other] = previous;
      }
    }
  }
  ranks[letter] = rank;
  return { ...draft, ranks };
}

export function setLabel(draft: Draft, letter: string, label: StrategyLabel): Draft {
  return { ...draft, labels: { ...draft.labels, [letter]: label } };
}

/** Human-readable list of what still blocks submission; empty when ready. */
export function draftProblems(task: Task, draft: Draft): string[] {
  const letters = taskLetters(task);
  const problems: string[] = [];
  const unranked = letters.filter((l) => draft.ranks[l] === undefined);
  if (unranked.length > 0) {
    problems.push(`rank output${unranked.length > 1 ? "s" : ""} ${unranked.join(", ")}`);
  } else {
    const got = letters
      .map((l) => draft.ranks[l]!)
      .slice()
      .sort((a, b) => a - b);
    const want = letters.map((_, i) => i + 1);
    if (got.some((r, i) => r !== want[i])) {
      problems.push(`ranks must use each of 1..${letters.length} exactly once`);
    }
  }
  const unlabeled = letters.filter((l) => draft.labels[l] === undefined);
  if (unlabeled.length > 0) {
    problems.push(`label output${unlabeled.length > 1 ? "s" : ""} ${unlabeled.join(", ")}`);
  }
  return problems;
}

export function isComplete(task: Task, draft: Draft): boolean {
  return draftProblems(task, draft).length === 0;
}

export type Phase = "loading" | "task" | "done" | "unreachable";

export interface SessionState {
  phase: Phase;
  task: Task | null;
  draft: Draft;
  progress: Progress | null;
  /** Transient banner text, e.g. after a duplicate submission. */
  notice: string | null;
  /** Inline message shown when the server rejected the draft. */
  rejection: string | null;
  submitting: boolean;
}

export function initialState(): SessionState {
  return {
    phase: "loading",
    task: null,
    draft: emptyDraft(),
    progress: null,
    notice: null,
    rejection: null,
    submitting: false,
  };
}

export type SessionEvent =
  | { kind: "task-loaded"; task: Task; progress: Progress }
  | { kind: "session-done"; progress: Progress }
  | { kind: "set-rank"; letter: string; rank: number }
  | { kind: "set-label"; letter: string; label: StrategyLabel }
  | { kind: "submit-started" }
  | { kind: "submit-rejected"; message: string }
  | { kind: "submit-duplicate"; originalTimestamp: number }
  | { kind: "unreachable"; detail?: string }
  | { kind: "retrying" };

export function reduce(state: SessionState, event: SessionEvent): SessionState {
  switch (event.kind) {
    case "task-loaded":
      return {
        ...state,
        phase: "task",
        task: event.task,
        draft: emptyDraft(),
        progress: event.progress,
        rejection: null,
        submitting: false,
      };
    case "session-done":
      return {
        ...state,
        phase: "done",
        task: null,
        draft: emptyDraft(),
        progress: event.progress,
        rejection: null,
        submitting: false,
      };
    case "set-rank":
      return { ...state, draft: setRank(state.draft, event.letter, event.rank), rejection: null };
    case "set-label":
      return { ...state, draft: setLabel(state.draft, event.letter, event.label), rejection: null };
    case "submit-started":
      return { ...state, submitting: true, rejection: null, notice: null };
    case "submit-rejected":
      return { ...state, submitting: false, rejection: event.message };
    case "submit-duplicate": {
      const when = new Date(event.originalTimestamp * 1000).toISOString();
      return {
        ...state,
        submitting: false,
        notice: `already annotated at ${when}; moving on`,
      };
    }
    case "unreachable":
      return {
        ...state,
        phase: "unreachable",
        submitting: false,
        notice: event.detail ?? state.notice,
      };
    case "retrying":
      return { ...state, phase: "loading", notice: null };
  }
}
