/** Contextual help shown beside the design and sampling selectors. */

import type { DesignName, Sampling } from "./types.js";

export const DESIGN_HELP: Record<DesignName, string> = {
  parallel:
    "Whole clusters are randomized to treatment or control and stay there. " +
    "With more than one period, every cluster is measured repeatedly but " +
    "never switches condition.",
  "parallel-by-arm":
    "A two-arm parallel trial where the arms differ in cluster size, outcome " +
    "SD, or outcome ICC; enter those per arm.",
  "three-level":
    "Subclusters (e.g. wards) are nested inside clusters (e.g. hospitals). " +
    "Randomization can happen at the cluster or the subcluster level.",
  crxo:
    "Every cluster experiences both conditions, switching between periods; " +
    "randomization decides which condition comes first. Two periods give the " +
    "classic AB/BA layout, more periods alternate.",
  "stepped-wedge":
    "All clusters start on control and cross over to treatment in randomized " +
    "batches, one batch per step, until every cluster is treated. Clusters " +
    "are assumed balanced across the sequences; upload a custom design for " +
    "unequal splits.",
  irgt:
    "Individuals are randomized, but the treatment is delivered in groups " +
    "(e.g. group therapy), so outcomes cluster within delivery groups; enter " +
    "group size and ICC per arm.",
  custom:
    "Upload any sequence-by-period 0/1 treatment matrix as CSV; an optional " +
    "n_clusters first column carries clusters per sequence.",
};

export const SAMPLING_HELP: Record<Sampling, string> = {
  cross_sectional:
    "Different individuals are measured in each period; within-period and " +
    "between-period correlations can differ (ICC and CAC).",
  closed_cohort:
    "The same individuals are followed across all periods, adding a " +
    "within-individual correlation for repeated measures.",
};

export const FIELD_HELP: Record<string, string> = {
  iccOutcome: "Within-period (or single) outcome intracluster correlation.",
  cacOutcome: "Cluster autocorrelation: between-period divided by within-period outcome ICC.",
  icc0Outcome: "Correlation of repeated measurements on the same individual.",
  iccCovariate: "Intracluster correlation of the effect modifier.",
  cacCovariate: "Between/within-period ratio for the effect-modifier ICC.",
  delta: "Smallest interaction effect worth detecting (difference in treatment effects per covariate unit; a risk difference for binary outcomes).",
  pi: "Proportion of clusters randomized to treatment (or to the treat-first sequence).",
};
