import { describe, expect, it } from "vitest";

import {
  availablePlotModes,
  defaultScenario,
  toSolveBody,
  toSweepBody,
  validateScenario,
  visibleFields,
  type ScenarioState,
} from "../src/form.js";
import type { SolveBody } from "../src/types.js";
import { loadFixture } from "./fixtures.js";
import { lireScenario } from "./scenarios.js";

describe("form-to-request mapping", () => {
  it("reproduces the recorded benchmark solve body exactly", () => {
    const expected = loadFixture<SolveBody>("lire_solve_request");
    expect(toSolveBody(lireScenario())).toEqual(expected);
  });

  it("produces the recorded band-sweep body from the plot controls", () => {
    const expected = loadFixture<Record<string, unknown>>("lire_band_sweep_request");
    const state: ScenarioState = {
      ...lireScenario(),
      iccOutcomeRange: [0.01, 0.05],
      plotMode: "m_vs_power",
      plotRange: [153, 553],
      plotPoints: 5,
    };
    expect(toSweepBody(state)).toEqual(expected);
  });

  it("is total: every valid state yields only defined, non-null fields", () => {
    const designs: ScenarioState["design"][] = [
      "parallel",
      "parallel-by-arm",
      "three-level",
      "crxo",
      "stepped-wedge",
      "irgt",
      "custom",
    ];
    const targets: ScenarioState["target"][] = ["power", "n", "m", "delta"];
    for (const design of designs) {
      for (const target of targets) {
        const state: ScenarioState = {
          ...defaultScenario(),
          design,
          target,
          periods: design === "parallel" ? 1 : design === "crxo" ? 2 : design === "stepped-wedge" ? 4 : 1,
          clusters: 24,
          clusterSize: 6,
          power: 0.8,
          delta: 0.4,
          subclusters: 3,
          designCsv: "1,0\n0,1\n",
          armM: [6, 4],
          armIcc: [0.05, 0.02],
          armSd: [1, 1],
          icc0Outcome: 0.4,
        };
        if (design === "stepped-wedge") state.clusters = 24;
        expect(validateScenario(state)).toEqual([]);
        const body = toSolveBody(state) as Record<string, unknown>;
        expect(body.design).toBe(design);
        expect(body.target).toBe(target);
        for (const [key, value] of Object.entries(body)) {
          expect(value, `${design}/${target}: ${key}`).not.toBeNull();
          expect(value).not.toBeUndefined();
        }
      }
    }
  });
});

describe("field visibility", () => {
  it("exposes exactly the inputs the design requires", () => {
    const base = defaultScenario();
    const sw = visibleFields({ ...base, design: "stepped-wedge", periods: 6 });
    expect(sw.has("pi")).toBe(false); // balanced across sequences
    expect(sw.has("sequences")).toBe(true);
    expect(sw.has("cacOutcome")).toBe(true);

    const twoLevel = visibleFields({ ...base, design: "parallel", periods: 1 });
    expect(twoLevel.has("cacOutcome")).toBe(false); // single period: no CAC
    expect(twoLevel.has("sampling")).toBe(false);
    expect(twoLevel.has("pi")).toBe(true);

    const irgt = visibleFields({ ...base, design: "irgt" });
    expect(irgt.has("armM")).toBe(true);
    expect(irgt.has("iccCovariate")).toBe(false); // independent by design
    expect(irgt.has("clusterSize")).toBe(false); // per-arm sizes instead

    const threeLevel = visibleFields({ ...base, design: "three-level" });
    expect(threeLevel.has("subclusters")).toBe(true);
    expect(threeLevel.has("randomizationLevel")).toBe(true);
  });

  it("prompts for the within-individual ICC only for closed cohorts", () => {
    const base = { ...defaultScenario(), design: "crxo" as const, periods: 2 };
    expect(visibleFields({ ...base, sampling: "cross_sectional" }).has("icc0Outcome")).toBe(false);
    expect(visibleFields({ ...base, sampling: "closed_cohort" }).has("icc0Outcome")).toBe(true);
  });

  it("hides the solve target's own input", () => {
    const base = lireScenario();
    expect(visibleFields({ ...base, target: "m" }).has("clusterSize")).toBe(false);
    expect(visibleFields({ ...base, target: "n" }).has("clusters")).toBe(false);
    expect(visibleFields({ ...base, target: "power" }).has("power")).toBe(false);
    expect(visibleFields({ ...base, target: "delta" }).has("delta")).toBe(false);
  });
});

describe("client-side validation mirrors the server rules", () => {
  it("rejects out-of-range significance levels", () => {
    const errors = validateScenario({ ...lireScenario(), alpha: 1.5 });
    expect(errors.some((e) => e.field === "alpha")).toBe(true);
  });

  it("requires prevalence for binary covariates", () => {
    const errors = validateScenario({ ...lireScenario(), prevalence: null });
    expect(errors.some((e) => e.field === "prevalence")).toBe(true);
  });

  it("rejects a zero effect when solving sample size", () => {
    const errors = validateScenario({ ...lireScenario(), delta: 0 });
    expect(errors.some((e) => e.field === "delta")).toBe(true);
  });

  it("accepts the benchmark scenario", () => {
    expect(validateScenario(lireScenario())).toEqual([]);
  });
});

describe("plot modes", () => {
  it("offers modes whose fixed quantities are present", () => {
    const state = lireScenario(); // n known, delta known, power known, m unknown
    const modes = availablePlotModes(state);
    expect(modes).toContain("m_vs_power");
    expect(modes).toContain("m_vs_n");
    expect(modes).not.toContain("delta_vs_power"); // m unknown
  });
});
