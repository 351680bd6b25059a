import type { RunState } from './types.js';

const TERMINAL = new Set<string>(['complete', 'failed']);

export interface PollOptions {
  /** First wait between checks; later waits grow by `backoff`. */
  intervalMs?: number;
  backoff?: number;
  maxIntervalMs?: number;
  timeoutMs?: number;
  onUpdate?: (state: RunState) => void;
}

/**
 * Poll a run until it reaches a terminal status and resolve with that
 * state (failed runs resolve too; the caller renders the diagnostics).
 * A null from fetchState counts as a transient miss and polling goes on.
 */
export async function pollRun(
  fetchState: () => Promise<RunState | null>,
  options: PollOptions = {},
): Promise<RunState> {
  const {
    intervalMs = 500,
    backoff = 1.5,
    maxIntervalMs = 4000,
    timeoutMs = 120000,
    onUpdate,
  } = options;
  const startedAt = Date.now();
  let wait = intervalMs;
  for (;;) {
    const state = await fetchState();
    if (state !== null) {
      onUpdate?.(state);
      if (TERMINAL.has(state.status)) return state;
    }
    if (Date.now() - startedAt >= timeoutMs) {
      throw new Error(`run did not reach a terminal status within ${timeoutMs} ms`);
    }
    await new Promise<void>((resolve) => setTimeout(resolve, wait));
    wait = Math.min(wait * backoff, maxIntervalMs);
  }
}
