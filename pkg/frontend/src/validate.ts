import type { DesignFormState } from './config.js';
import { METHOD_LABELS } from './config.js';

export interface FieldIssue {
  field: string;
  message: string;
}

export interface ValidationResult {
  ok: boolean;
  issues: FieldIssue[];
}

/**
 * Half-width of the forbidden zone around alpha = 0.5, matching the
 * server constant. The corrected estimator divides by 2*alpha - 1, so
 * designs too close to an even split are rejected outright.
 */
export const EPS_ALPHA = 1e-6;

function pushFinite(issues: FieldIssue[], field: string, value: number, label: string): boolean {
  if (!Number.isFinite(value)) {
    issues.push({ field, message: `${label} must be a finite number` });
    return false;
  }
  return true;
}

function pushCount(issues: FieldIssue[], field: string, value: number, label: string, max: number): void {
  if (!Number.isFinite(value) || !Number.isInteger(value)) {
    issues.push({ field, message: `${label} must be an integer` });
    return;
  }
  if (value < 1) issues.push({ field, message: `${label} must be >= 1` });
  if (value >= max) issues.push({ field, message: `${label} is too large for the run layout` });
}

/**
 * Client-side mirror of the server's config rules. Anything accepted
 * here is accepted by the service; the service stays authoritative and
 * its 400 responses are still rendered if the two ever drift.
 */
export function validateForm(form: DesignFormState): ValidationResult {
  const issues: FieldIssue[] = [];

  if (pushFinite(issues, 'alpha', form.alpha, 'alpha')) {
    if (!(form.alpha > 0 && form.alpha < 1)) {
      issues.push({ field: 'alpha', message: `alpha must lie in (0, 1), got ${form.alpha}` });
    } else if (Math.abs(2 * form.alpha - 1) < 2 * EPS_ALPHA) {
      issues.push({
        field: 'alpha',
        message: 'alpha is inside the dead zone around 0.5: the correction divides by 2*alpha - 1',
      });
    }
  }

  if (!Number.isInteger(form.clusterSalt)) {
    issues.push({ field: 'clusterSalt', message: 'cluster salt must be an integer' });
  } else if (!(form.clusterSalt >= -(2 ** 63) && form.clusterSalt < 2 ** 64)) {
    issues.push({ field: 'clusterSalt', message: 'cluster salt must fit in 64 bits' });
  }

  if (pushFinite(issues, 'overlap', form.overlap, 'overlap')) {
    if (!(form.overlap >= 0 && form.overlap <= 1)) {
      issues.push({ field: 'overlap', message: `overlap must lie in [0, 1], got ${form.overlap}` });
    }
  }

  pushFinite(issues, 'mu10', form.mu10, 'site 1 treatment mean');
  pushFinite(issues, 'mu20', form.mu20, 'site 1 control mean');
  pushFinite(issues, 'mu13', form.mu13, 'shared T1/T3 mean');
  pushFinite(issues, 'mu23', form.mu23, 'shared T2/T3 mean');
  pushFinite(issues, 'delta1', form.delta1, 'cross effect delta1');
  pushFinite(issues, 'delta2', form.delta2, 'cross effect delta2');

  pushCount(issues, 'nUsers', form.nUsers, 'users per replication', 2 ** 32);
  pushCount(issues, 'nReps', form.nReps, 'replications', 2 ** 31);

  if (!Number.isInteger(form.seed)) {
    issues.push({ field: 'seed', message: 'seed must be an integer' });
  }

  if (form.methods.length === 0) {
    issues.push({ field: 'methods', message: 'pick at least one estimator' });
  }
  for (const label of form.methods) {
    if (!(METHOD_LABELS as readonly string[]).includes(label)) {
      issues.push({ field: 'methods', message: `unknown estimator ${label}` });
    }
  }

  return { ok: issues.length === 0, issues };
}

/**
 * Map a server-side issue path (e.g. "design.alpha", "synthetic.n_users")
 * to the form field it belongs to, or null for issues with no single home.
 */
export function formFieldForApiField(field: string): string | null {
  const direct: Record<string, string> = {
    'design.alpha': 'alpha',
    design: 'alpha',
    'design.cluster_salt': 'clusterSalt',
    'synthetic.p_overlap': 'overlap',
    'synthetic.n_users': 'nUsers',
    'synthetic.n_reps': 'nReps',
    'synthetic.seed': 'seed',
    'synthetic.delta1': 'delta1',
    'synthetic.delta2': 'delta2',
    'synthetic.mu.1,0': 'mu10',
    'synthetic.mu.2,0': 'mu20',
    'synthetic.mu.1,3': 'mu13',
    'synthetic.mu.2,3': 'mu23',
    methods: 'methods',
  };
  if (field in direct) return direct[field] ?? null;
  if (field.startsWith('methods[')) return 'methods';
  return null;
}
