/**
 * Shapes of the JSON payloads exchanged with the estimator service.
 * Field names match the wire format exactly (snake_case).
 */

export type RunStatus = 'pending' | 'running' | 'complete' | 'failed';

export interface DesignSection {
  alpha: number;
  cluster_salt?: number;
  site1_split?: number;
  treatment_labels?: string[];
}

export interface SyntheticSection {
  mu: Record<string, number>;
  delta1?: number;
  delta2?: number;
  p_overlap: number;
  n_users: number;
  n_reps: number;
  seed: number;
  noise_sd?: number;
  covariate_dim?: number;
  covariate_coeffs?: number[];
  outcome_kind?: string;
}

export interface SweepSection {
  axis: string;
  values: number[];
}

export interface RunConfigDoc {
  design: DesignSection;
  synthetic: SyntheticSection;
  sweep: SweepSection;
  methods: string[];
}

/** One estimator summary at one sweep grid value, exactly as served. */
export interface SweepRow {
  axis: string;
  value: number;
  true_te: number;
  method: string;
  mean_estimate: number;
  bias: number;
  std_error: number;
  band_half_width: number;
  band_lo: number;
  band_hi: number;
  n_reps: number;
}

export interface RunFailure {
  value: number;
  error: string;
}

export interface RunState {
  schema_version: number;
  run_id: string;
  status: RunStatus;
  created_at?: string;
  started_at?: string;
  finished_at?: string;
  config: RunConfigDoc;
  axis?: string;
  rows?: SweepRow[];
  failures?: RunFailure[];
  error?: string;
}

export interface RunListing {
  run_id: string;
  status: RunStatus;
  created_at: string | null;
  axis: string | null;
  n_values: number;
}

export interface ApiIssue {
  field: string;
  message: string;
}

export interface DesignEcho {
  alpha: number;
  cluster_salt: number;
  site1_split: number;
  treatment_labels: string[];
  allocation: {
    C1: { site2_arm3: number };
    C2: { site2_arm3: number };
  };
}
