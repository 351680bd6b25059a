import { getRun, listRuns, submitRun } from './api.js';
import { renderComparisonChart } from './chart.js';
import { comparisonModel } from './comparison.js';
import {
  DEFAULT_FORM,
  METHOD_LABELS,
  applyPreset,
  brandLabels,
  buildRunConfig,
  type BrandPerspective,
  type DesignFormState,
} from './config.js';
import { apiBase } from './constants.js';
import { formatValue } from './format.js';
import { historyModel, renderHistory } from './history.js';
import { pollRun } from './poll.js';
import type { RunState } from './types.js';
import { formFieldForApiField, validateForm } from './validate.js';
import { renderComparisonTable, renderIssueList, renderRunProblems } from './views.js';

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function input(id: string): HTMLInputElement {
  return el<HTMLInputElement>(id);
}

function numberValue(id: string): number {
  const raw = input(id).value.trim();
  return raw === '' ? NaN : Number(raw);
}

function readForm(): DesignFormState {
  const methods = [...document.querySelectorAll<HTMLInputElement>('input[name="methods"]:checked')].map(
    (box) => box.value,
  );
  const brandBox = document.querySelector<HTMLInputElement>('input[name="brand"]:checked');
  return {
    alpha: numberValue('alpha'),
    clusterSalt: numberValue('clusterSalt'),
    overlap: numberValue('overlap'),
    mu10: numberValue('mu10'),
    mu20: numberValue('mu20'),
    mu13: numberValue('mu13'),
    mu23: numberValue('mu23'),
    delta1: numberValue('delta1'),
    delta2: numberValue('delta2'),
    nUsers: numberValue('nUsers'),
    nReps: numberValue('nReps'),
    seed: numberValue('seed'),
    methods,
    brand: (brandBox?.value === 'B' ? 'B' : 'A') as BrandPerspective,
  };
}

function writeForm(form: DesignFormState): void {
  input('alpha').value = String(form.alpha);
  input('clusterSalt').value = String(form.clusterSalt);
  input('overlap').value = String(form.overlap);
  input('mu10').value = String(form.mu10);
  input('mu20').value = String(form.mu20);
  input('mu13').value = String(form.mu13);
  input('mu23').value = String(form.mu23);
  input('delta1').value = String(form.delta1);
  input('delta2').value = String(form.delta2);
  input('nUsers').value = String(form.nUsers);
  input('nReps').value = String(form.nReps);
  input('seed').value = String(form.seed);
  for (const box of document.querySelectorAll<HTMLInputElement>('input[name="methods"]')) {
    box.checked = form.methods.includes(box.value);
  }
  for (const radio of document.querySelectorAll<HTMLInputElement>('input[name="brand"]')) {
    radio.checked = radio.value === form.brand;
  }
  refreshSliderOutputs();
}

function refreshSliderOutputs(): void {
  el('alphaOut').textContent = formatValue(numberValue('alpha'), 3);
  el('overlapOut').textContent = formatValue(numberValue('overlap'), 2);
}

function clearFieldErrors(): void {
  for (const slot of document.querySelectorAll<HTMLElement>('.field-error')) {
    slot.textContent = '';
  }
}

function setFieldError(field: string, message: string): boolean {
  const slot = document.querySelector<HTMLElement>(`.field-error[data-for="${field}"]`);
  if (!slot) return false;
  if (slot.textContent === '') slot.textContent = message;
  return true;
}

function refreshValidation(): boolean {
  clearFieldErrors();
  const result = validateForm(readForm());
  for (const issue of result.issues) {
    setFieldError(issue.field, issue.message);
  }
  el<HTMLButtonElement>('launch').disabled = !result.ok;
  return result.ok;
}

function refreshNarrative(): void {
  const labels = brandLabels(readForm().brand);
  el('narrative').textContent =
    `${labels.yours} tests its change against ${labels.partner}; ` +
    'shared visitors see both sites, and the corrected estimate removes the cross-exposure bias.';
}

let activeRunId: string | null = null;

async function refreshHistory(): Promise<void> {
  const listing = await listRuns(apiBase());
  if (listing === null) {
    el('historyBox').innerHTML = '<p class="empty">Run history is unavailable (service unreachable).</p>';
    return;
  }
  el('historyBox').innerHTML = renderHistory(historyModel(listing, activeRunId));
}

function renderTerminal(state: RunState): void {
  const problems = renderRunProblems(state);
  el('problems').innerHTML = problems;
  if (state.status === 'complete' && (state.rows?.length ?? 0) > 0) {
    const model = comparisonModel(state);
    el('chart').innerHTML = renderComparisonChart(model);
    el('table').innerHTML = renderComparisonTable(model);
  } else if (state.status === 'complete') {
    el('chart').innerHTML = '<p class="empty">The run finished without any result rows.</p>';
    el('table').innerHTML = '';
  } else {
    el('chart').innerHTML = '';
    el('table').innerHTML = '';
  }
}

async function openRun(runId: string): Promise<void> {
  const { state, error } = await getRun(apiBase(), runId);
  if (!state) {
    el('status').textContent = `could not load run ${runId}: ${error ?? 'unknown error'}`;
    return;
  }
  activeRunId = runId;
  if (state.status === 'complete' || state.status === 'failed') {
    el('status').textContent = `showing run ${runId} (${state.status})`;
    renderTerminal(state);
  } else {
    el('status').textContent = `run ${runId} is ${state.status}; waiting for it to finish`;
    await attach(runId);
  }
  await refreshHistory();
}

async function attach(runId: string): Promise<void> {
  try {
    const terminal = await pollRun(async () => (await getRun(apiBase(), runId)).state, {
      onUpdate: (state) => {
        el('status').textContent = `run ${runId} is ${state.status}`;
      },
    });
    el('status').textContent = `run ${runId} finished: ${terminal.status}`;
    renderTerminal(terminal);
  } catch (error) {
    el('status').textContent = error instanceof Error ? error.message : 'polling failed';
  }
  await refreshHistory();
}

async function launch(): Promise<void> {
  if (!refreshValidation()) return;
  el('issues').innerHTML = '';
  const doc = buildRunConfig(readForm());
  el('status').textContent = 'submitting design';
  const result = await submitRun(apiBase(), doc);

  if (result.issues.length > 0) {
    // the service is authoritative; park its issues at the right fields
    const leftovers = result.issues.filter((i) => {
      const field = formFieldForApiField(i.field);
      return !(field && setFieldError(field, i.message));
    });
    el('issues').innerHTML = renderIssueList(leftovers);
    el('status').textContent = 'the service rejected the design';
    return;
  }
  if (!result.runId) {
    el('issues').innerHTML = renderIssueList([]);
    el('status').textContent = result.error ?? 'submit failed';
    return;
  }

  activeRunId = result.runId;
  if (result.alreadyComplete) {
    el('status').textContent = `identical design already computed; reopening run ${result.runId}`;
    await openRun(result.runId);
    return;
  }
  if (result.alreadyRunning) {
    el('status').textContent = `identical run ${result.runId} is already in flight; attaching`;
  } else {
    el('status').textContent = `launched run ${result.runId}`;
  }
  await refreshHistory();
  await attach(result.runId);
}

function boot(): void {
  // checkbox list comes from the same constant the validator uses
  el('methodBoxes').innerHTML = METHOD_LABELS.map(
    (label) =>
      `<label class="check"><input type="checkbox" name="methods" value="${label}"> ${label}</label>`,
  ).join('');
  writeForm(DEFAULT_FORM);
  refreshValidation();
  refreshNarrative();
  void refreshHistory();

  el('designForm').addEventListener('input', () => {
    refreshSliderOutputs();
    refreshValidation();
    refreshNarrative();
  });
  el<HTMLFormElement>('designForm').addEventListener('submit', (event) => {
    event.preventDefault();
    void launch();
  });
  el<HTMLSelectElement>('preset').addEventListener('change', (event) => {
    const name = (event.target as HTMLSelectElement).value;
    if (!name) return;
    writeForm(applyPreset(readForm(), name));
    refreshValidation();
    refreshNarrative();
  });
  el('historyBox').addEventListener('click', (event) => {
    const button = (event.target as HTMLElement).closest<HTMLElement>('[data-run-id]');
    const runId = button?.dataset['runId'];
    if (runId) void openRun(runId);
  });
  el('refreshHistory').addEventListener('click', () => void refreshHistory());
}

boot();
