import type { RunConfigDoc } from './types.js';

/**
 * Which brand's point of view the page narrates from. The toggle only
 * swaps which site the copy calls "yours"; the submitted config is
 * identical either way because the design is symmetric between brands.
 */
export type BrandPerspective = 'A' | 'B';

export interface DesignFormState {
  alpha: number;
  clusterSalt: number;
  overlap: number;
  mu10: number;
  mu20: number;
  mu13: number;
  mu23: number;
  delta1: number;
  delta2: number;
  nUsers: number;
  nReps: number;
  seed: number;
  methods: string[];
  brand: BrandPerspective;
}

export const METHOD_LABELS = [
  'uncorrected',
  'uncorrected+adj',
  'corrected',
  'corrected+adj',
] as const;

export const DEFAULT_FORM: DesignFormState = {
  alpha: 0.75,
  clusterSalt: 20260815,
  overlap: 0.5,
  mu10: 1.0,
  mu20: 0.5,
  mu13: 1.2,
  mu23: 0.2,
  delta1: 0.5,
  delta2: 0.5,
  nUsers: 8000,
  nReps: 120,
  seed: 23,
  methods: ['uncorrected', 'corrected'],
  brand: 'A',
};

/**
 * Build the run document the service expects. The four mu entries plus
 * the delta shortcuts fully determine the six potential-outcome means;
 * the server derives the remaining two. One overlap value becomes a
 * single-point sweep so one form submit is one comparison.
 */
export function buildRunConfig(form: DesignFormState): RunConfigDoc {
  return {
    design: {
      alpha: form.alpha,
      cluster_salt: form.clusterSalt,
    },
    synthetic: {
      mu: {
        '1,0': form.mu10,
        '2,0': form.mu20,
        '1,3': form.mu13,
        '2,3': form.mu23,
      },
      delta1: form.delta1,
      delta2: form.delta2,
      p_overlap: form.overlap,
      n_users: form.nUsers,
      n_reps: form.nReps,
      seed: form.seed,
    },
    sweep: { axis: 'p_overlap', values: [form.overlap] },
    methods: [...form.methods],
  };
}

/** Ready-made demo designs; keys are the option values in the picker. */
export const PRESETS: Record<string, Partial<DesignFormState>> = {
  'shared-audience-25': {
    alpha: 0.6,
    overlap: 0.25,
    mu10: 1.0,
    mu20: 0.5,
    mu13: 1.2,
    mu23: 0.2,
    delta1: 0.5,
    delta2: 0.5,
    nUsers: 8000,
    nReps: 120,
    seed: 23,
    methods: [...METHOD_LABELS],
  },
  'shared-audience-90': {
    alpha: 0.6,
    overlap: 0.9,
    mu10: 1.0,
    mu20: 0.5,
    mu13: 1.2,
    mu23: 0.2,
    delta1: 0.5,
    delta2: 0.5,
    nUsers: 8000,
    nReps: 120,
    seed: 23,
    methods: [...METHOD_LABELS],
  },
  'zero-effect': {
    alpha: 0.6,
    overlap: 0.9,
    mu10: 0.5,
    mu20: 0.5,
    mu13: 0.5,
    mu23: 0.9,
    delta1: -0.4,
    delta2: -0.4,
    nUsers: 8000,
    nReps: 120,
    seed: 19,
    methods: ['uncorrected', 'corrected'],
  },
};

export function applyPreset(form: DesignFormState, name: string): DesignFormState {
  const preset = PRESETS[name];
  if (!preset) return form;
  return { ...form, ...preset, methods: [...(preset.methods ?? form.methods)] };
}

/** Narrative labels for the chosen perspective; API calls never change. */
export function brandLabels(brand: BrandPerspective): { yours: string; partner: string } {
  return brand === 'A'
    ? { yours: 'Brand A (your site, treatments T1/T2)', partner: 'Brand B (partner site, treatments T3/T4)' }
    : { yours: 'Brand B (your site, treatments T1/T2)', partner: 'Brand A (partner site, treatments T3/T4)' };
}
