/** Workflow state machine and persisted settings.
 *
 * The UI walks prompt -> review -> solving -> results; the solve stage polls
 * the service every 500 ms. Status updates apply monotonically (same ranking
 * as the server) so an out-of-order poll response can never step backwards.
 */

import type { JobStatus, Spec } from "./types.js";

export type Stage = "prompt" | "review" | "solving" | "results";

export const POLL_INTERVAL_MS = 500;

const STATUS_RANK: Record<JobStatus, number> = {
  queued: 0,
  running: 1,
  tail: 2,
  done: 3,
  failed: 3,
};

export interface AppState {
  stage: Stage;
  spec: Spec | null;
  jobId: string | null;
  jobStatus: JobStatus | null;
  error: string | null;
}

export function initialState(): AppState {
  return { stage: "prompt", spec: null, jobId: null, jobStatus: null, error: null };
}

export function specConfigured(state: AppState, spec: Spec): AppState {
  return { ...state, stage: "review", spec, jobId: null, jobStatus: null, error: null };
}

export function specEdited(state: AppState, spec: Spec): AppState {
  if (state.stage !== "review") return state;
  return { ...state, spec };
}

export function solveSubmitted(state: AppState, jobId: string): AppState {
  return { ...state, stage: "solving", jobId, jobStatus: "queued", error: null };
}

export function jobStatusSeen(state: AppState, status: JobStatus, error?: string): AppState {
  const current = state.jobStatus ?? "queued";
  if (STATUS_RANK[status] < STATUS_RANK[current]) return state; // stale poll
  const next: AppState = { ...state, jobStatus: status };
  if (status === "done") next.stage = "results";
  if (status === "failed") {
    next.stage = "results";
    next.error = error ?? "solve failed";
  }
  return next;
}

export function reset(state: AppState): AppState {
  return initialState();
}

// --- persisted settings ---

export interface Settings {
  baseUrl: string;
  controller: string;
  retries: number;
}

export const DEFAULT_SETTINGS: Settings = {
  baseUrl: "",
  controller: "schedule",
  retries: 2,
};

const SETTINGS_KEY = "autosimp.settings";

/** Storage is injected so tests can pass a plain Map-backed fake. */
export interface KeyValueStore {
  getItem(key: string): string | null;
  setItem(key: string, value: string): void;
}

export function loadSettings(store: KeyValueStore): Settings {
  const raw = store.getItem(SETTINGS_KEY);
  if (!raw) return { ...DEFAULT_SETTINGS };
  try {
    const parsed = JSON.parse(raw) as Partial<Settings>;
    return {
      baseUrl: typeof parsed.baseUrl === "string" ? parsed.baseUrl : DEFAULT_SETTINGS.baseUrl,
      controller:
        typeof parsed.controller === "string" ? parsed.controller : DEFAULT_SETTINGS.controller,
      retries:
        typeof parsed.retries === "number" && Number.isFinite(parsed.retries)
          ? Math.max(0, Math.floor(parsed.retries))
          : DEFAULT_SETTINGS.retries,
    };
  } catch {
    return { ...DEFAULT_SETTINGS };
  }
}

export function saveSettings(store: KeyValueStore, settings: Settings): void {
  store.setItem(SETTINGS_KEY, JSON.stringify(settings));
}
