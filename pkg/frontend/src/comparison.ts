import type { RunState, SweepRow } from './types.js';

/** Display order for the estimator families; unknown labels go last. */
export const METHOD_ORDER = [
  'uncorrected',
  'uncorrected+adj',
  'corrected',
  'corrected+adj',
] as const;

export interface SeriesPoint {
  value: number;
  trueTe: number;
  meanEstimate: number;
  bias: number;
  stdError: number;
  bandHalfWidth: number;
  bandLo: number;
  bandHi: number;
  nReps: number;
}

export interface MethodSeries {
  method: string;
  points: SeriesPoint[];
}

export interface TruthPoint {
  value: number;
  trueTe: number;
}

export interface ComparisonModel {
  runId: string;
  axis: string;
  values: number[];
  truth: TruthPoint[];
  series: MethodSeries[];
}

function toPoint(row: SweepRow): SeriesPoint {
  return {
    value: row.value,
    trueTe: row.true_te,
    meanEstimate: row.mean_estimate,
    bias: row.bias,
    stdError: row.std_error,
    bandHalfWidth: row.band_half_width,
    bandLo: row.band_lo,
    bandHi: row.band_hi,
    nReps: row.n_reps,
  };
}

/**
 * Regroup result rows for rendering: one series per method across the
 * sweep values, plus the true effect at each value for the reference
 * line. Numbers pass through untouched; the service already computed
 * every statistic the page shows.
 */
export function comparisonModel(state: RunState): ComparisonModel {
  const rows = state.rows ?? [];
  const axis = state.axis ?? rows[0]?.axis ?? '';

  const values: number[] = [];
  const truth: TruthPoint[] = [];
  const byMethod = new Map<string, SeriesPoint[]>();
  for (const row of rows) {
    if (!values.includes(row.value)) {
      values.push(row.value);
      truth.push({ value: row.value, trueTe: row.true_te });
    }
    const points = byMethod.get(row.method) ?? [];
    points.push(toPoint(row));
    byMethod.set(row.method, points);
  }

  const rank = (label: string): number => {
    const i = (METHOD_ORDER as readonly string[]).indexOf(label);
    return i === -1 ? METHOD_ORDER.length : i;
  };
  const series = [...byMethod.entries()]
    .sort((a, b) => rank(a[0]) - rank(b[0]))
    .map(([method, points]) => ({ method, points }));

  return { runId: state.run_id, axis, values, truth, series };
}
