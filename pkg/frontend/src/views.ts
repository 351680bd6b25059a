import type { ComparisonModel } from './comparison.js';
import type { ApiIssue, RunState } from './types.js';
import { formatValue } from './format.js';

function esc(text: string): string {
  return text.replace(/&/g, '&amp;').replace(/</g, '&lt;').replace(/>/g, '&gt;');
}

/**
 * Numbers table under the chart. Every numeric cell is a payload value
 * rendered through formatValue; nothing is derived on the client.
 */
export function renderComparisonTable(model: ComparisonModel): string {
  const rows: string[] = [];
  model.values.forEach((value, i) => {
    const truth = model.truth[i];
    for (const s of model.series) {
      const p = s.points.find((q) => q.value === value);
      if (!p) continue;
      rows.push(
        `<tr data-method="${esc(s.method)}" data-value="${value}">` +
          `<td>${formatValue(value, 2)}</td>` +
          `<td>${esc(s.method)}</td>` +
          `<td class="num">${formatValue(p.meanEstimate)}</td>` +
          `<td class="num">${formatValue(p.bandLo)}</td>` +
          `<td class="num">${formatValue(p.bandHi)}</td>` +
          `<td class="num">${formatValue(p.bias)}</td>` +
          `<td class="num">${formatValue(p.stdError)}</td>` +
          `<td class="num">${String(p.nReps)}</td>` +
          `<td class="num">${truth ? formatValue(truth.trueTe) : 'n/a'}</td>` +
          `</tr>`,
      );
    }
  });
  return (
    `<table class="results">` +
    `<thead><tr>` +
    `<th>${esc(model.axis)}</th><th>estimator</th><th>estimate</th>` +
    `<th>band lo</th><th>band hi</th><th>bias</th><th>std error</th>` +
    `<th>reps</th><th>true effect</th>` +
    `</tr></thead>` +
    `<tbody>${rows.join('')}</tbody>` +
    `</table>`
  );
}

/** Diagnostics for a failed run or for grid values that failed inside it. */
export function renderRunProblems(state: RunState): string {
  const parts: string[] = [];
  if (state.status === 'failed') {
    parts.push(`<div class="error-panel"><strong>Run failed.</strong> ${esc(state.error ?? 'no diagnostics from the server')}</div>`);
  }
  const failures = state.failures ?? [];
  if (failures.length > 0) {
    const items = failures
      .map((f) => `<li>value ${formatValue(f.value, 2)}: ${esc(f.error)}</li>`)
      .join('');
    parts.push(`<div class="error-panel"><strong>Some grid values failed:</strong><ul>${items}</ul></div>`);
  }
  return parts.join('');
}

/** Server-side validation issues that have no single form field to sit at. */
export function renderIssueList(issues: ApiIssue[]): string {
  if (issues.length === 0) return '';
  const items = issues.map((i) => `<li><code>${esc(i.field || 'config')}</code>: ${esc(i.message)}</li>`).join('');
  return `<div class="error-panel"><strong>The service rejected the config:</strong><ul>${items}</ul></div>`;
}
