import type {
  ApiIssue,
  DesignEcho,
  DesignSection,
  RunConfigDoc,
  RunListing,
  RunState,
  RunStatus,
} from './types.js';

/**
 * Outcome of one submit attempt. The service addresses runs by a digest
 * of the config, so resubmitting the same design is safe: a finished
 * twin comes back as alreadyComplete, a twin still executing as
 * alreadyRunning, and both carry the run id to attach to.
 */
export interface LaunchResult {
  runId: string | null;
  status: RunStatus | null;
  created: boolean;
  alreadyComplete: boolean;
  alreadyRunning: boolean;
  issues: ApiIssue[];
  error: string | null;
}

const NO_LAUNCH: LaunchResult = {
  runId: null,
  status: null,
  created: false,
  alreadyComplete: false,
  alreadyRunning: false,
  issues: [],
  error: null,
};

export async function submitRun(baseUrl: string, doc: RunConfigDoc): Promise<LaunchResult> {
  let response: Response;
  try {
    response = await fetch(`${baseUrl}/api/runs`, {
      method: 'POST',
      headers: { 'Content-Type': 'application/json' },
      body: JSON.stringify(doc),
    });
  } catch (error) {
    const message = error instanceof Error ? error.message : 'request failed';
    return { ...NO_LAUNCH, error: message };
  }
  const body = await response.json().catch(() => ({}));
  const runId = typeof body.run_id === 'string' ? body.run_id : null;
  const status = typeof body.status === 'string' ? (body.status as RunStatus) : null;
  if (response.status === 202) {
    return { ...NO_LAUNCH, runId, status, created: true };
  }
  if (response.status === 200) {
    return { ...NO_LAUNCH, runId, status, alreadyComplete: true };
  }
  if (response.status === 409) {
    return { ...NO_LAUNCH, runId, status, alreadyRunning: true };
  }
  if (response.status === 400) {
    const issues = Array.isArray(body.issues) ? (body.issues as ApiIssue[]) : [];
    const message = typeof body.error === 'string' ? body.error : 'invalid config';
    return { ...NO_LAUNCH, issues, error: message };
  }
  return { ...NO_LAUNCH, error: `unexpected response status ${response.status}` };
}

export async function getRun(
  baseUrl: string,
  runId: string,
): Promise<{ state: RunState | null; error: string | null }> {
  try {
    const response = await fetch(`${baseUrl}/api/runs/${encodeURIComponent(runId)}`);
    const body = await response.json().catch(() => ({}));
    if (!response.ok) {
      const message = typeof body.error === 'string' ? body.error : `status ${response.status}`;
      return { state: null, error: message };
    }
    return { state: body as RunState, error: null };
  } catch (error) {
    const message = error instanceof Error ? error.message : 'request failed';
    return { state: null, error: message };
  }
}

/** List known runs, newest first; null when the service is unreachable. */
export async function listRuns(baseUrl: string): Promise<RunListing[] | null> {
  try {
    const response = await fetch(`${baseUrl}/api/runs`);
    if (!response.ok) return null;
    const body = await response.json();
    return Array.isArray(body.runs) ? (body.runs as RunListing[]) : null;
  } catch {
    return null;
  }
}

/** Ask the service to echo a normalized design, or list what is wrong. */
export async function validateDesign(
  baseUrl: string,
  design: DesignSection,
): Promise<{ design: DesignEcho | null; issues: ApiIssue[]; error: string | null }> {
  try {
    const response = await fetch(`${baseUrl}/api/designs`, {
      method: 'POST',
      headers: { 'Content-Type': 'application/json' },
      body: JSON.stringify(design),
    });
    const body = await response.json().catch(() => ({}));
    if (response.status === 400) {
      const issues = Array.isArray(body.issues) ? (body.issues as ApiIssue[]) : [];
      const message = typeof body.error === 'string' ? body.error : 'invalid design';
      return { design: null, issues, error: message };
    }
    if (!response.ok) {
      return { design: null, issues: [], error: `unexpected response status ${response.status}` };
    }
    return { design: body.design as DesignEcho, issues: [], error: null };
  } catch (error) {
    const message = error instanceof Error ? error.message : 'request failed';
    return { design: null, issues: [], error: message };
  }
}
