import { describe, expect, it } from "vitest";

import { buildChart, formatValue, hoverReadout, niceTicks } from "../src/chart.js";
import type { ApiEnvelope, SeriesPayload } from "../src/types.js";
import { loadFixture } from "./fixtures.js";

type SweepResult = { axis: string; series: SeriesPayload[] };

function lireSeries(): SeriesPayload[] {
  const envelope = loadFixture<ApiEnvelope<SweepResult>>("lire_band_sweep_response");
  return envelope.result!.series;
}

describe("band chart from the recorded benchmark sweep", () => {
  it("renders three labelled curves (min/assumed/max)", () => {
    const model = buildChart(lireSeries());
    expect(model.lines.map((l) => l.label)).toEqual(["min", "assumed", "max"]);
    const colors = new Set(model.lines.map((l) => l.color));
    expect(colors.size).toBe(3);
  });

  it("the assumed curve passes through the solved design point", () => {
    const model = buildChart(lireSeries());
    const assumed = model.lines[1];
    const at353 = assumed.points.find((p) => p.x === 353)!;
    expect(at353.y).toBeCloseTo(0.9, 2);
  });

  it("hover near the solved point reads out every curve at that x", () => {
    const model = buildChart(lireSeries());
    const target = model.lines[1].points.find((p) => p.x === 353)!;
    const readout = hoverReadout(model, target.px + 3)!;
    expect(readout.x).toBe(353);
    expect(readout.entries).toHaveLength(3);
    const byLabel = Object.fromEntries(readout.entries.map((e) => [e.label, e.y]));
    expect(byLabel.assumed).toBeCloseTo(0.9, 2);
    expect(byLabel.min).not.toBeCloseTo(byLabel.max, 6);
  });
});

describe("geometry", () => {
  it("maps the x extent onto the inner plot width", () => {
    const model = buildChart([
      { label: "assumed", x_name: "m", y_name: "power", points: [[0, 0], [10, 1]] },
    ]);
    const [first, last] = [model.lines[0].points[0], model.lines[0].points[1]];
    expect(first.px).toBeCloseTo(model.options.marginLeft, 6);
    expect(last.px).toBeCloseTo(model.options.width - model.options.marginRight, 6);
    expect(first.py).toBeGreaterThan(last.py); // larger y is higher up
  });

  it("builds an SVG path per series", () => {
    const model = buildChart([
      { label: "assumed", x_name: "m", y_name: "power", points: [[1, 0.2], [2, 0.4], [3, 0.5]] },
    ]);
    expect(model.lines[0].path).toMatch(/^M[\d.]+,[\d.]+(L[\d.]+,[\d.]+){2}$/);
  });

  it("handles a single-point series without degenerate scales", () => {
    const model = buildChart([
      { label: "assumed", x_name: "m", y_name: "power", points: [[353, 0.9]] },
    ]);
    const p = model.lines[0].points[0];
    expect(Number.isFinite(p.px)).toBe(true);
    expect(Number.isFinite(p.py)).toBe(true);
  });

  it("produces round tick values", () => {
    expect(niceTicks(0, 1)).toEqual([0, 0.2, 0.4, 0.6, 0.8, 1]);
    expect(niceTicks(153, 553)).toEqual([200, 300, 400, 500]);
  });

  it("formats values compactly", () => {
    expect(formatValue(353)).toBe("353");
    expect(formatValue(0.9006)).toBe("0.9006");
    expect(formatValue(0.0000123)).toBe("1.23e-5");
  });
});
