/**
 * Live round-trip against a running service: set CRTHTE_API_URL (see
 * scripts/integration.sh) to enable. Verifies the exact flows the UI uses:
 * the benchmark scenario solving to m = 353, the three-curve band sweep, and
 * the design-CSV preview.
 */

import { describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { toSolveBody, toSweepBody } from "../src/form.js";
import { lireScenario } from "./scenarios.js";

const base = process.env.CRTHTE_API_URL;

describe.skipIf(!base)("live service round-trip", () => {
  const api = new ApiClient(base);

  it("health check responds", async () => {
    const health = await api.health();
    expect(health.status).toBe("ok");
  });

  it("the benchmark scenario solves to m = 353 through the form mapping", async () => {
    const result = await api.solve(toSolveBody(lireScenario()));
    expect(result.solved_value).toBe(353);
    expect(result.achieved_power).toBeGreaterThanOrEqual(0.9);
  });

  it("band sweep returns three labelled curves through (353, 0.90)", async () => {
    const state = {
      ...lireScenario(),
      iccOutcomeRange: [0.01, 0.05] as [number, number],
      plotMode: "m_vs_power" as const,
      plotRange: [153, 553] as [number, number],
      plotPoints: 5,
    };
    const sweep = await api.sweep(toSweepBody(state));
    expect(sweep.series.map((s) => s.label)).toEqual(["min", "assumed", "max"]);
    const assumed = sweep.series[1].points.find(([x]) => x === 353)!;
    expect(assumed[1]).toBeCloseTo(0.9, 2);
  });

  it("design parse previews the 2x2 upload", async () => {
    const parsed = await api.parseDesign("0,0\n0,1\n");
    expect(parsed.rows).toEqual([[0, 0], [0, 1]]);
  });

  it("surfaces line/column diagnostics for malformed CSVs", async () => {
    await expect(api.parseDesign("0,2\n1,0")).rejects.toMatchObject({ line: 1, column: 2 });
  });
});
