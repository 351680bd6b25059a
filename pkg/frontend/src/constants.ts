/**
 * Base URL for the estimator service. Same-origin by default (the
 * service can mount the built UI at /); a page can set a global
 * API_BASE before loading the app to point somewhere else.
 */
export function apiBase(): string {
  const override = (globalThis as { API_BASE?: unknown }).API_BASE;
  return typeof override === 'string' ? override.replace(/\/$/, '') : '';
}
