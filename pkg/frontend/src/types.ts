/** Shared request/response shapes for the /api/v1 endpoints. */

export type DesignName =
  | "parallel"
  | "parallel-by-arm"
  | "three-level"
  | "crxo"
  | "stepped-wedge"
  | "irgt"
  | "custom";

export type Target = "power" | "n" | "m" | "delta";
export type PlotMode = "m_vs_power" | "n_vs_power" | "m_vs_n" | "delta_vs_power";
export type Sampling = "cross_sectional" | "closed_cohort";

/** Body for POST /api/v1/solve; field names mirror the CLI vocabulary. */
export interface SolveBody {
  design: string;
  target: Target;
  periods?: number;
  sequences?: number;
  clusters?: number;
  cluster_size?: number;
  pi?: number;
  sampling?: Sampling;
  subclusters?: number;
  randomization_level?: "cluster" | "subcluster";
  design_csv?: string;
  arm_m?: [number, number];
  arm_icc?: [number, number];
  arm_sd?: [number, number];
  outcome_type?: "continuous" | "binary";
  outcome_sd?: number;
  outcome_prevalence?: number;
  icc_outcome?: number;
  cac_outcome?: number;
  icc0_outcome?: number;
  covariate_type?: "continuous" | "binary";
  covariate_sd?: number;
  prevalence?: number;
  covariate_level?: "individual" | "cluster";
  icc_covariate?: number;
  cac_covariate?: number;
  delta?: number;
  standardized?: boolean;
  alpha?: number;
  power?: number;
  df?: "normal" | "t";
  direction?: "positive" | "negative";
  icc_outcome_range?: [number, number];
  cac_outcome_range?: [number, number];
  icc_covariate_range?: [number, number];
  cac_covariate_range?: [number, number];
}

export interface SweepBody extends Omit<SolveBody, "target"> {
  axis: PlotMode;
  range: [number, number];
  points?: number;
}

export interface VarianceReportPayload {
  var_hte_total: number | null;
  var_ate_total: number | null;
  sigma2_hte_norm: number | null;
  sigma2_ate_norm: number | null;
  design_effect_hte: number | null;
  estimable_hte: boolean;
  estimable_ate: boolean;
  n_effective: number;
  covariate_effect: string;
}

export interface SolveResultPayload {
  target: Target;
  solved_value: number;
  achieved_power: number;
  n: number | null;
  m: number | null;
  delta: number | null;
  alpha_level: number;
  df_mode: string;
  variance: VarianceReportPayload;
}

export interface SeriesPayload {
  label: string;
  x_name: string;
  y_name: string;
  points: [number, number][];
}

export interface DesignParsePayload {
  rows: number[][];
  clusters_per_sequence: number[];
  periods: number;
  sequences: number;
  n_total: number;
}

export interface ApiEnvelope<T> {
  status: "ok" | "error";
  api_version: string;
  result?: T;
  error?: { code: string; message: string; field?: string | null; line?: number; column?: number };
}
