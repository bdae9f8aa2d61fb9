/**
 * Scenario form model: which inputs each design exposes, client-side
 * validation mirroring the server's 422 rules, and the total mapping from
 * form state to API request bodies. All numbers shown in the UI come from
 * the service; this module never computes statistics.
 */

import type {
  DesignName,
  PlotMode,
  Sampling,
  SolveBody,
  SweepBody,
  Target,
} from "./types.js";

export interface ScenarioState {
  design: DesignName;
  periods: number;
  clusters: number | null;
  clusterSize: number | null;
  pi: number;
  sampling: Sampling;
  subclusters: number | null;
  randomizationLevel: "cluster" | "subcluster";
  designCsv: string | null;
  armM: [number, number] | null;
  armIcc: [number, number] | null;
  armSd: [number, number] | null;
  outcomeType: "continuous" | "binary";
  outcomeSd: number | null;
  outcomePrevalence: number | null;
  standardized: boolean;
  iccOutcome: number;
  cacOutcome: number | null;
  icc0Outcome: number | null;
  iccOutcomeRange: [number, number] | null;
  cacOutcomeRange: [number, number] | null;
  covariateType: "continuous" | "binary";
  covariateSd: number | null;
  prevalence: number | null;
  covariateLevel: "individual" | "cluster";
  iccCovariate: number;
  cacCovariate: number | null;
  iccCovariateRange: [number, number] | null;
  cacCovariateRange: [number, number] | null;
  delta: number | null;
  alpha: number;
  power: number | null;
  df: "normal" | "t";
  target: Target;
  plotMode: PlotMode;
  plotRange: [number, number];
  plotPoints: number;
}

export function defaultScenario(): ScenarioState {
  return {
    design: "parallel",
    periods: 1,
    clusters: null,
    clusterSize: null,
    pi: 0.5,
    sampling: "cross_sectional",
    subclusters: null,
    randomizationLevel: "cluster",
    designCsv: null,
    armM: null,
    armIcc: null,
    armSd: null,
    outcomeType: "continuous",
    outcomeSd: null,
    outcomePrevalence: null,
    standardized: true,
    iccOutcome: 0.01,
    cacOutcome: null,
    icc0Outcome: null,
    iccOutcomeRange: null,
    cacOutcomeRange: null,
    covariateType: "continuous",
    covariateSd: 1,
    prevalence: null,
    covariateLevel: "individual",
    iccCovariate: 0.01,
    cacCovariate: null,
    iccCovariateRange: null,
    cacCovariateRange: null,
    delta: null,
    alpha: 0.05,
    power: 0.9,
    df: "normal",
    target: "power",
    plotMode: "m_vs_power",
    plotRange: [10, 500],
    plotPoints: 40,
  };
}

export function isMultiPeriod(state: ScenarioState): boolean {
  if (state.design === "custom") return true;
  if (state.design === "crxo" || state.design === "stepped-wedge") return true;
  return state.design === "parallel" && state.periods > 1;
}

function hasArms(design: DesignName): boolean {
  return design === "parallel-by-arm" || design === "irgt";
}

/**
 * The exact input set the chosen design requires — fields outside this set
 * are hidden by the form (and omitted from request bodies).
 */
export function visibleFields(state: ScenarioState): Set<string> {
  const fields = new Set<string>([
    "design",
    "target",
    "plotMode",
    "outcomeType",
    "standardized",
    "covariateType",
    "covariateLevel",
    "alpha",
    "df",
  ]);
  const multi = isMultiPeriod(state);
  if (state.design === "custom") {
    fields.add("designCsv");
  } else {
    if (state.design !== "stepped-wedge") fields.add("pi");
    if (state.design === "parallel" || state.design === "crxo" || state.design === "stepped-wedge") {
      fields.add("periods");
    }
    if (state.design === "stepped-wedge") fields.add("sequences");
    if (state.design === "three-level") {
      fields.add("subclusters");
      fields.add("randomizationLevel");
    }
  }
  if (multi || state.design === "crxo") fields.add("sampling");
  if (hasArms(state.design)) {
    fields.add("armM");
    fields.add("armIcc");
    fields.add("armSd");
  } else {
    fields.add("iccOutcome");
    fields.add("iccOutcomeRange");
  }
  if (multi || state.design === "three-level") {
    if (!hasArms(state.design)) {
      fields.add("cacOutcome");
      fields.add("cacOutcomeRange");
    }
  }
  if (multi && state.sampling === "closed_cohort") fields.add("icc0Outcome");
  if (state.outcomeType === "binary") {
    fields.add("outcomePrevalence");
  } else if (!state.standardized) {
    fields.add("outcomeSd");
  }
  if (state.covariateLevel === "individual" && state.design !== "irgt") {
    fields.add("iccCovariate");
    fields.add("iccCovariateRange");
    if ((multi && state.sampling !== "closed_cohort") || state.design === "three-level") {
      fields.add("cacCovariate");
      fields.add("cacCovariateRange");
    }
  }
  if (state.covariateType === "binary") {
    fields.add("prevalence");
  } else {
    fields.add("covariateSd");
  }
  // the solve target is the one quantity not entered
  if (state.target !== "n") fields.add("clusters");
  if (state.target !== "m" && !hasArms(state.design)) fields.add("clusterSize");
  if (state.target !== "power") fields.add("power");
  if (state.target !== "delta") fields.add("delta");
  return fields;
}

export interface FieldError {
  field: string;
  message: string;
}

/** Client-side checks mirroring the server's 422 responses. */
export function validateScenario(state: ScenarioState): FieldError[] {
  const errors: FieldError[] = [];
  const visible = visibleFields(state);
  const need = (field: keyof ScenarioState, message: string) => {
    if (visible.has(field) && (state[field] === null || state[field] === undefined)) {
      errors.push({ field, message });
    }
  };
  if (!(state.alpha > 0 && state.alpha < 1)) {
    errors.push({ field: "alpha", message: "significance level must lie in (0, 1)" });
  }
  if (visible.has("power") && state.power !== null && !(state.power > 0 && state.power < 1)) {
    errors.push({ field: "power", message: "power must lie in (0, 1)" });
  }
  if (visible.has("pi") && !(state.pi > 0 && state.pi < 1)) {
    errors.push({ field: "pi", message: "allocation proportion must lie in (0, 1)" });
  }
  if (visible.has("prevalence") && state.prevalence !== null && !(state.prevalence > 0 && state.prevalence < 1)) {
    errors.push({ field: "prevalence", message: "prevalence must lie in (0, 1)" });
  }
  if (
    visible.has("outcomePrevalence") &&
    state.outcomePrevalence !== null &&
    !(state.outcomePrevalence > 0 && state.outcomePrevalence < 1)
  ) {
    errors.push({ field: "outcomePrevalence", message: "prevalence must lie in (0, 1)" });
  }
  if ((state.target === "n" || state.target === "m") && state.delta === 0) {
    errors.push({ field: "delta", message: "effect size must be nonzero when solving sample size" });
  }
  need("clusters", "number of clusters is required");
  need("clusterSize", "cluster-period size is required");
  need("power", "target power is required");
  need("delta", "effect size is required");
  need("designCsv", "upload a design CSV");
  need("subclusters", "subclusters per cluster is required");
  need("armM", "per-arm sizes are required");
  need("armIcc", "per-arm ICCs are required");
  need("prevalence", "covariate prevalence is required");
  need("covariateSd", "covariate SD is required");
  need("outcomePrevalence", "outcome prevalence is required");
  need("outcomeSd", "outcome SD is required");
  if (visible.has("icc0Outcome") && state.icc0Outcome === null) {
    errors.push({ field: "icc0Outcome", message: "within-individual ICC is required for closed cohorts" });
  }
  return errors;
}

/** Total mapping: any validated form state yields a schema-valid body. */
export function toSolveBody(state: ScenarioState): SolveBody {
  const visible = visibleFields(state);
  const body: SolveBody = { design: state.design, target: state.target };
  const put = <K extends keyof SolveBody>(cond: boolean, key: K, value: SolveBody[K] | null) => {
    if (cond && value !== null && value !== undefined) body[key] = value as SolveBody[K];
  };
  put(visible.has("periods") && state.periods > 1, "periods", state.periods);
  put(state.design === "crxo", "periods", state.periods);
  put(state.design === "stepped-wedge", "sequences", state.periods - 1);
  put(visible.has("clusters"), "clusters", state.clusters);
  put(visible.has("clusterSize"), "cluster_size", state.clusterSize);
  put(visible.has("pi") && state.pi !== 0.5, "pi", state.pi);
  put(visible.has("sampling") && state.sampling !== "cross_sectional", "sampling", state.sampling);
  put(visible.has("subclusters"), "subclusters", state.subclusters);
  put(
    visible.has("randomizationLevel") && state.randomizationLevel !== "cluster",
    "randomization_level",
    state.randomizationLevel,
  );
  put(visible.has("designCsv"), "design_csv", state.designCsv);
  put(visible.has("armM"), "arm_m", state.armM);
  put(visible.has("armIcc"), "arm_icc", state.armIcc);
  put(visible.has("armSd"), "arm_sd", state.armSd);
  put(state.outcomeType === "binary", "outcome_type", "binary");
  put(visible.has("outcomeSd"), "outcome_sd", state.outcomeSd);
  put(visible.has("outcomePrevalence"), "outcome_prevalence", state.outcomePrevalence);
  if (state.standardized) body.standardized = true;
  put(visible.has("iccOutcome"), "icc_outcome", state.iccOutcome);
  put(visible.has("cacOutcome"), "cac_outcome", state.cacOutcome);
  put(visible.has("icc0Outcome"), "icc0_outcome", state.icc0Outcome);
  put(state.covariateType === "binary", "covariate_type", "binary");
  put(visible.has("covariateSd"), "covariate_sd", state.covariateSd);
  put(visible.has("prevalence"), "prevalence", state.prevalence);
  put(state.covariateLevel !== "individual", "covariate_level", state.covariateLevel);
  put(visible.has("iccCovariate"), "icc_covariate", state.iccCovariate);
  put(visible.has("cacCovariate"), "cac_covariate", state.cacCovariate);
  put(visible.has("delta"), "delta", state.delta);
  body.alpha = state.alpha;
  put(visible.has("power"), "power", state.power);
  put(state.df !== "normal", "df", state.df);
  put(visible.has("iccOutcomeRange"), "icc_outcome_range", state.iccOutcomeRange);
  put(visible.has("cacOutcomeRange"), "cac_outcome_range", state.cacOutcomeRange);
  put(visible.has("iccCovariateRange"), "icc_covariate_range", state.iccCovariateRange);
  put(visible.has("cacCovariateRange"), "cac_covariate_range", state.cacCovariateRange);
  return body;
}

/** Sweep body for the selected plot mode (the axis variable is left free). */
export function toSweepBody(state: ScenarioState): SweepBody {
  const solve = toSolveBody(state);
  delete (solve as Partial<SolveBody>).target;
  const axisVaries: Record<PlotMode, keyof SolveBody> = {
    m_vs_power: "cluster_size",
    n_vs_power: "clusters",
    m_vs_n: "cluster_size",
    delta_vs_power: "delta",
  };
  delete solve[axisVaries[state.plotMode]];
  if (state.plotMode === "m_vs_n") delete solve.clusters;
  return {
    ...solve,
    axis: state.plotMode,
    range: state.plotRange,
    points: state.plotPoints,
  };
}

/** Plot modes that can run given the current target/state (need fixed axes). */
export function availablePlotModes(state: ScenarioState): PlotMode[] {
  const modes: PlotMode[] = [];
  const hasN = state.clusters !== null;
  const hasM = state.clusterSize !== null || hasArms(state.design);
  const hasPower = state.power !== null;
  const hasDelta = state.delta !== null;
  if (hasN && hasDelta) modes.push("m_vs_power");
  if (hasM && hasDelta) modes.push("n_vs_power");
  if (hasPower && hasDelta) modes.push("m_vs_n");
  if (hasN && hasM) modes.push("delta_vs_power");
  return modes;
}
