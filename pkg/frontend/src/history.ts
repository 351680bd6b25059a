import type { RunListing } from './types.js';

export interface HistoryEntry {
  runId: string;
  status: string;
  createdAt: string | null;
  axis: string | null;
  nValues: number;
  active: boolean;
}

/** Listing rows plus which one the page is currently showing. */
export function historyModel(listing: RunListing[], activeRunId: string | null): HistoryEntry[] {
  return listing.map((r) => ({
    runId: r.run_id,
    status: r.status,
    createdAt: r.created_at,
    axis: r.axis,
    nValues: r.n_values,
    active: r.run_id === activeRunId,
  }));
}

function esc(text: string): string {
  return text.replace(/&/g, '&amp;').replace(/</g, '&lt;').replace(/>/g, '&gt;');
}

export function renderHistory(entries: HistoryEntry[]): string {
  if (entries.length === 0) {
    return '<p class="empty">No runs yet. Design an experiment and launch it.</p>';
  }
  const items = entries
    .map((e) => {
      const active = e.active ? ' active' : '';
      const when = e.createdAt ? ` &middot; ${esc(e.createdAt)}` : '';
      const shape = e.axis ? `${esc(e.axis)} &times; ${e.nValues}` : 'sweep';
      return (
        `<li><button type="button" class="history-entry${active}" data-run-id="${esc(e.runId)}">` +
        `<code>${esc(e.runId)}</code> <span class="status ${esc(e.status)}">${esc(e.status)}</span>` +
        `<span class="meta">${shape}${when}</span>` +
        `</button></li>`
      );
    })
    .join('');
  return `<ul class="history">${items}</ul>`;
}
