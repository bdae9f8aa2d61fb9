/**
 * DOM wiring for the calculator. All statistics come from the HTTP API; this
 * file only renders form controls, the solved-result panel, the plot-mode
 * charts (with hover readout), the uploaded-design grid, and the share link.
 */

import { ApiClient, ApiError, latestWins } from "./api.js";
import { buildChart, hoverReadout, type ChartModel } from "./chart.js";
import {
  availablePlotModes,
  toSolveBody,
  toSweepBody,
  validateScenario,
  visibleFields,
  type ScenarioState,
} from "./form.js";
import { buildGrid } from "./grid.js";
import { DESIGN_HELP, FIELD_HELP, SAMPLING_HELP } from "./help.js";
import { encodeScenario, decodeScenario } from "./state.js";
import type { DesignParsePayload, SolveResultPayload } from "./types.js";

const SVG_NS = "http://www.w3.org/2000/svg";

const api = new ApiClient("");
const runSolve = latestWins();
const runSweep = latestWins();

let state: ScenarioState = decodeScenario(window.location.hash);
let lastParse: DesignParsePayload | null = null;
let debounceTimer: number | undefined;

const app = document.getElementById("app")!;

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  ...children: (Node | string)[]
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) node.setAttribute(key, value);
  node.append(...children);
  return node;
}

function update(partial: Partial<ScenarioState>): void {
  state = { ...state, ...partial };
  window.clearTimeout(debounceTimer);
  debounceTimer = window.setTimeout(refresh, 300);
  renderForm();
  syncUrl();
}

function syncUrl(): void {
  const { fragment, truncated } = encodeScenario(state);
  history.replaceState(null, "", "#" + fragment);
  const warn = document.getElementById("share-warning")!;
  warn.textContent = truncated
    ? "Share link omits the uploaded CSV (too large for a URL)."
    : "";
}

// ---------------------------------------------------------------------------
// Form rendering
// ---------------------------------------------------------------------------

function numberInput(
  field: keyof ScenarioState,
  label: string,
  opts: { step?: string; nullable?: boolean } = {},
): HTMLElement {
  const value = state[field];
  const input = el("input", {
    type: "number",
    step: opts.step ?? "any",
    id: `field-${String(field)}`,
  }) as HTMLInputElement;
  input.value = value === null || value === undefined ? "" : String(value);
  input.addEventListener("change", () => {
    const parsed = input.value === "" ? null : Number(input.value);
    update({ [field]: parsed } as Partial<ScenarioState>);
  });
  const wrapper = el("label", { class: "field" }, el("span", {}, label), input);
  const help = FIELD_HELP[String(field)];
  if (help) wrapper.title = help;
  return wrapper;
}

function pairInput(field: keyof ScenarioState, label: string): HTMLElement {
  const value = state[field] as [number, number] | null;
  const input = el("input", {
    type: "text",
    placeholder: "treated, control",
    id: `field-${String(field)}`,
  }) as HTMLInputElement;
  input.value = value ? value.join(", ") : "";
  input.addEventListener("change", () => {
    const parts = input.value.split(",").map((p) => Number(p.trim()));
    const pair =
      parts.length === 2 && parts.every((p) => Number.isFinite(p))
        ? ([parts[0], parts[1]] as [number, number])
        : null;
    update({ [field]: pair } as Partial<ScenarioState>);
  });
  return el("label", { class: "field" }, el("span", {}, label), input);
}

function rangeInput(field: keyof ScenarioState, label: string): HTMLElement {
  const value = state[field] as [number, number] | null;
  const input = el("input", {
    type: "text",
    placeholder: "min, max (optional)",
    id: `field-${String(field)}`,
  }) as HTMLInputElement;
  input.value = value ? value.join(", ") : "";
  input.addEventListener("change", () => {
    const parts = input.value.split(",").map((p) => Number(p.trim()));
    const pair =
      input.value.trim() !== "" && parts.length === 2 && parts.every((p) => Number.isFinite(p))
        ? ([parts[0], parts[1]] as [number, number])
        : null;
    update({ [field]: pair } as Partial<ScenarioState>);
  });
  return el("label", { class: "field range" }, el("span", {}, label), input);
}

function selectInput(
  field: keyof ScenarioState,
  label: string,
  options: [string, string][],
  helpText?: string,
): HTMLElement {
  const select = el("select", { id: `field-${String(field)}` }) as HTMLSelectElement;
  for (const [value, text] of options) {
    const option = el("option", { value }, text) as HTMLOptionElement;
    if (String(state[field]) === value) option.selected = true;
    select.append(option);
  }
  select.addEventListener("change", () => {
    const raw = select.value;
    const numeric = ["periods"].includes(String(field));
    update({ [field]: numeric ? Number(raw) : raw } as Partial<ScenarioState>);
  });
  const wrapper = el("label", { class: "field" }, el("span", {}, label), select);
  if (helpText) wrapper.title = helpText;
  return wrapper;
}

function checkbox(field: keyof ScenarioState, label: string): HTMLElement {
  const input = el("input", { type: "checkbox", id: `field-${String(field)}` }) as HTMLInputElement;
  input.checked = Boolean(state[field]);
  input.addEventListener("change", () => update({ [field]: input.checked } as Partial<ScenarioState>));
  return el("label", { class: "field checkbox" }, input, el("span", {}, label));
}

function uploadInput(): HTMLElement {
  const input = el("input", { type: "file", accept: ".csv,text/csv", id: "field-designCsv" }) as HTMLInputElement;
  input.addEventListener("change", async () => {
    const file = input.files?.[0];
    if (!file) return;
    const text = await file.text();
    update({ designCsv: text });
    void previewDesign(text);
  });
  const box = el(
    "div",
    { class: "field upload" },
    el("span", {}, "Design CSV"),
    input,
    el("div", { id: "upload-error", class: "error" }),
    el("div", { id: "design-grid" }),
  );
  return box;
}

function renderForm(): void {
  const visible = visibleFields(state);
  const form = document.getElementById("scenario-form")!;
  form.replaceChildren();

  form.append(
    el("h2", {}, "Design"),
    selectInput(
      "design",
      "Design type",
      [
        ["parallel", "Parallel CRT"],
        ["parallel-by-arm", "Parallel CRT, heterogeneous arms"],
        ["three-level", "Three-level parallel CRT"],
        ["crxo", "Cluster crossover"],
        ["stepped-wedge", "Stepped wedge"],
        ["irgt", "Individually randomized group treatment"],
        ["custom", "Upload custom design"],
      ],
      DESIGN_HELP[state.design],
    ),
    el("p", { class: "help" }, DESIGN_HELP[state.design]),
  );
  if (visible.has("periods")) form.append(numberInput("periods", "Periods (J)", { step: "1" }));
  if (visible.has("sequences")) {
    form.append(
      el("p", { class: "derived" }, `Sequences: ${Math.max(state.periods - 1, 1)} (balanced)`),
    );
  }
  if (visible.has("sampling")) {
    form.append(
      selectInput(
        "sampling",
        "Sampling scheme",
        [
          ["cross_sectional", "Cross-sectional"],
          ["closed_cohort", "Closed cohort"],
        ],
        SAMPLING_HELP[state.sampling],
      ),
      el("p", { class: "help" }, SAMPLING_HELP[state.sampling]),
    );
  }
  if (visible.has("pi")) form.append(numberInput("pi", "Allocation proportion (pi)"));
  if (visible.has("subclusters")) form.append(numberInput("subclusters", "Subclusters per cluster", { step: "1" }));
  if (visible.has("randomizationLevel")) {
    form.append(
      selectInput("randomizationLevel", "Randomization level", [
        ["cluster", "Cluster"],
        ["subcluster", "Subcluster"],
      ]),
    );
  }
  if (visible.has("designCsv")) form.append(uploadInput());
  if (visible.has("clusters")) form.append(numberInput("clusters", "Clusters (n)", { step: "1" }));
  if (visible.has("clusterSize")) form.append(numberInput("clusterSize", "Cluster-period size (m)", { step: "1" }));
  if (visible.has("armM")) form.append(pairInput("armM", "Group sizes (treated, control)"));
  if (visible.has("armIcc")) form.append(pairInput("armIcc", "Outcome ICCs (treated, control)"));
  if (visible.has("armSd")) form.append(pairInput("armSd", "Outcome SDs (treated, control)"));

  form.append(el("h2", {}, "Outcome"));
  form.append(
    selectInput("outcomeType", "Outcome type", [
      ["continuous", "Continuous"],
      ["binary", "Binary (risk difference)"],
    ]),
    checkbox("standardized", "Standardized effect (outcome SD = 1)"),
  );
  if (visible.has("outcomeSd")) form.append(numberInput("outcomeSd", "Outcome SD"));
  if (visible.has("outcomePrevalence")) form.append(numberInput("outcomePrevalence", "Outcome prevalence"));
  if (visible.has("iccOutcome")) form.append(numberInput("iccOutcome", "Outcome ICC (within-period)"));
  if (visible.has("cacOutcome")) form.append(numberInput("cacOutcome", "Outcome CAC"));
  if (visible.has("icc0Outcome")) form.append(numberInput("icc0Outcome", "Within-individual ICC"));
  if (visible.has("iccOutcomeRange")) form.append(rangeInput("iccOutcomeRange", "Outcome ICC range"));
  if (visible.has("cacOutcomeRange")) form.append(rangeInput("cacOutcomeRange", "Outcome CAC range"));

  form.append(el("h2", {}, "Effect modifier"));
  form.append(
    selectInput("covariateType", "Covariate type", [
      ["continuous", "Continuous"],
      ["binary", "Binary"],
    ]),
    selectInput("covariateLevel", "Covariate level", [
      ["individual", "Individual"],
      ["cluster", "Cluster"],
    ]),
  );
  if (visible.has("covariateSd")) form.append(numberInput("covariateSd", "Covariate SD"));
  if (visible.has("prevalence")) form.append(numberInput("prevalence", "Covariate prevalence"));
  if (visible.has("iccCovariate")) form.append(numberInput("iccCovariate", "Covariate ICC"));
  if (visible.has("cacCovariate")) form.append(numberInput("cacCovariate", "Covariate CAC"));
  if (visible.has("iccCovariateRange")) form.append(rangeInput("iccCovariateRange", "Covariate ICC range"));
  if (visible.has("cacCovariateRange")) form.append(rangeInput("cacCovariateRange", "Covariate CAC range"));

  form.append(el("h2", {}, "Test"));
  form.append(
    selectInput("target", "Solve for", [
      ["power", "Power"],
      ["n", "Number of clusters"],
      ["m", "Cluster-period size"],
      ["delta", "Detectable effect size"],
    ]),
  );
  if (visible.has("delta")) form.append(numberInput("delta", "Effect size (delta)"));
  if (visible.has("power")) form.append(numberInput("power", "Target power"));
  form.append(
    numberInput("alpha", "Significance level"),
    selectInput("df", "Reference distribution", [
      ["normal", "Normal"],
      ["t", "t (df = n - 2)"],
    ]),
  );

  form.append(el("h2", {}, "Plot display"));
  const modes: [string, string][] = [
    ["m_vs_power", "Cluster size vs power"],
    ["n_vs_power", "Number of clusters vs power"],
    ["m_vs_n", "Cluster size vs number of clusters"],
    ["delta_vs_power", "Effect size vs power"],
  ];
  form.append(selectInput("plotMode", "Plot mode", modes));
  form.append(pairInput("plotRange", "Plot range (low, high)"));

  const errors = validateScenario(state);
  const box = document.getElementById("validation")!;
  box.replaceChildren(
    ...errors.map((e) => el("div", { class: "error" }, `${e.field}: ${e.message}`)),
  );
}

// ---------------------------------------------------------------------------
// Results + chart + grid
// ---------------------------------------------------------------------------

async function refresh(): Promise<void> {
  if (validateScenario(state).length > 0) return;
  const resultBox = document.getElementById("result")!;
  try {
    const solved = await runSolve((signal) => api.solve(toSolveBody(state), signal));
    if (solved) renderResult(solved);
  } catch (error) {
    renderApiError(resultBox, error);
  }
  if (!availablePlotModes(state).includes(state.plotMode)) return;
  const chartBox = document.getElementById("chart")!;
  try {
    const sweep = await runSweep((signal) => api.sweep(toSweepBody(state), signal));
    if (sweep) renderChart(buildChart(sweep.series));
  } catch (error) {
    renderApiError(chartBox, error);
  }
}

function renderResult(result: SolveResultPayload): void {
  const box = document.getElementById("result")!;
  const v = result.variance;
  const rows: [string, string][] = [
    ["Solved " + result.target, formatNumber(result.solved_value)],
    ["Achieved power", result.achieved_power.toFixed(4)],
    ["Clusters (n)", result.n === null ? "-" : formatNumber(result.n)],
    ["Cluster-period size (m)", result.m === null ? "-" : formatNumber(result.m)],
    ["Effect size", result.delta === null ? "-" : formatNumber(result.delta)],
    ["HTE variance (normalized)", v.sigma2_hte_norm === null ? "-" : formatNumber(v.sigma2_hte_norm)],
    ["HTE design effect", v.design_effect_hte === null ? "-" : formatNumber(v.design_effect_hte)],
  ];
  box.replaceChildren(
    el("h2", {}, "Result"),
    el(
      "table",
      {},
      ...rows.map(([k, val]) => el("tr", {}, el("td", {}, k), el("td", { class: "num" }, val))),
    ),
  );
}

function formatNumber(value: number): string {
  if (Number.isInteger(value)) return String(value);
  return String(Number(value.toPrecision(6)));
}

function renderApiError(box: HTMLElement, error: unknown): void {
  if (error instanceof ApiError) {
    const location =
      error.line !== undefined && error.line !== null ? ` (line ${error.line}, column ${error.column})` : "";
    const field = error.field ? ` [${error.field}]` : "";
    box.replaceChildren(el("div", { class: "error" }, `${error.message}${location}${field}`));
  } else if (error instanceof Error) {
    box.replaceChildren(el("div", { class: "error" }, error.message));
  }
}

function renderChart(model: ChartModel): void {
  const box = document.getElementById("chart")!;
  const svg = document.createElementNS(SVG_NS, "svg");
  svg.setAttribute("viewBox", `0 0 ${model.options.width} ${model.options.height}`);
  svg.setAttribute("class", "chart");

  const axis = (x1: number, y1: number, x2: number, y2: number) => {
    const line = document.createElementNS(SVG_NS, "line");
    line.setAttribute("x1", String(x1));
    line.setAttribute("y1", String(y1));
    line.setAttribute("x2", String(x2));
    line.setAttribute("y2", String(y2));
    line.setAttribute("class", "axis");
    svg.append(line);
  };
  const { marginLeft, marginTop, width, height, marginRight, marginBottom } = model.options;
  axis(marginLeft, height - marginBottom, width - marginRight, height - marginBottom);
  axis(marginLeft, marginTop, marginLeft, height - marginBottom);

  for (const tick of model.xTicks) {
    const text = document.createElementNS(SVG_NS, "text");
    text.setAttribute("x", String(tick.pixel));
    text.setAttribute("y", String(height - marginBottom + 16));
    text.setAttribute("class", "tick");
    text.textContent = tick.text;
    svg.append(text);
  }
  for (const tick of model.yTicks) {
    const text = document.createElementNS(SVG_NS, "text");
    text.setAttribute("x", String(marginLeft - 6));
    text.setAttribute("y", String(tick.pixel + 4));
    text.setAttribute("class", "tick y");
    text.textContent = tick.text;
    svg.append(text);
  }

  for (const line of model.lines) {
    const path = document.createElementNS(SVG_NS, "path");
    path.setAttribute("d", line.path);
    path.setAttribute("stroke", line.color);
    path.setAttribute("fill", "none");
    path.setAttribute("stroke-width", "2");
    svg.append(path);
  }

  const marker = document.createElementNS(SVG_NS, "line");
  marker.setAttribute("class", "hover-line");
  marker.setAttribute("y1", String(marginTop));
  marker.setAttribute("y2", String(height - marginBottom));
  marker.setAttribute("visibility", "hidden");
  svg.append(marker);

  const tooltip = el("div", { class: "tooltip", id: "chart-tooltip" });
  tooltip.style.display = "none";

  svg.addEventListener("mousemove", (event) => {
    const rect = svg.getBoundingClientRect();
    const px = ((event.clientX - rect.left) / rect.width) * model.options.width;
    const readout = hoverReadout(model, px);
    if (!readout) return;
    marker.setAttribute("x1", String(readout.pixel));
    marker.setAttribute("x2", String(readout.pixel));
    marker.setAttribute("visibility", "visible");
    tooltip.style.display = "block";
    tooltip.style.left = `${event.clientX - rect.left + 12}px`;
    tooltip.style.top = `${event.clientY - rect.top}px`;
    tooltip.replaceChildren(
      el("div", { class: "tooltip-x" }, `${model.xName} = ${formatNumber(readout.x)}`),
      ...readout.entries.map((entry) =>
        el(
          "div",
          { class: "tooltip-row" },
          el("span", { class: "swatch", style: `background:${entry.color}` }),
          `${entry.label}: ${model.yName} = ${formatNumber(entry.y)}`,
        ),
      ),
    );
  });
  svg.addEventListener("mouseleave", () => {
    marker.setAttribute("visibility", "hidden");
    tooltip.style.display = "none";
  });

  const legend = el(
    "div",
    { class: "legend" },
    ...model.lines.map((line) =>
      el("span", { class: "legend-item" }, el("span", { class: "swatch", style: `background:${line.color}` }), line.label),
    ),
  );
  box.replaceChildren(el("h2", {}, "Power curves"), legend, svg, tooltip);
  box.style.position = "relative";
}

async function previewDesign(csv: string): Promise<void> {
  const errorBox = document.getElementById("upload-error");
  const gridBox = document.getElementById("design-grid");
  if (!errorBox || !gridBox) return;
  try {
    lastParse = await api.parseDesign(csv);
    errorBox.textContent = "";
    renderGrid(lastParse);
  } catch (error) {
    gridBox.replaceChildren();
    if (error instanceof ApiError) {
      const where = error.line !== undefined && error.line !== null ? ` (line ${error.line}, column ${error.column})` : "";
      errorBox.textContent = `${error.message}${where}`;
    }
  }
}

function renderGrid(parsed: DesignParsePayload): void {
  const gridBox = document.getElementById("design-grid")!;
  const model = buildGrid(parsed);
  const table = el("table", { class: "design-grid" });
  const header = el("tr", {}, el("th", {}));
  for (const label of model.columnLabels) header.append(el("th", {}, label));
  table.append(header);
  for (let s = 0; s < model.sequences; s++) {
    const row = el("tr", {}, el("th", {}, model.rowLabels[s]));
    for (let p = 0; p < model.periods; p++) {
      const cell = model.cells.find((c) => c.sequence === s && c.period === p)!;
      row.append(el("td", { class: cell.treated ? "cell treated" : "cell control" }));
    }
    table.append(row);
  }
  gridBox.replaceChildren(
    table,
    el("p", { class: "derived" }, `${model.nTotal} clusters, ${model.treatedCells} treated cell(s)`),
  );
}

// ---------------------------------------------------------------------------
// Boot
// ---------------------------------------------------------------------------

function boot(): void {
  app.replaceChildren(
    el("header", {}, el("h1", {}, "Cluster-trial HTE power calculator")),
    el(
      "main",
      {},
      el("section", { id: "scenario-form", class: "panel" }),
      el(
        "section",
        { class: "panel output" },
        el("div", { id: "validation" }),
        el("div", { id: "result" }),
        el("div", { id: "chart" }),
        el("div", { id: "share" }, el("button", { id: "share-button" }, "Copy share link"), el("span", { id: "share-warning", class: "error" })),
      ),
    ),
  );
  document.getElementById("share-button")!.addEventListener("click", () => {
    void navigator.clipboard.writeText(window.location.href);
  });
  window.addEventListener("hashchange", () => {
    state = decodeScenario(window.location.hash);
    renderForm();
    void refresh();
  });
  renderForm();
  syncUrl();
  if (state.designCsv) void previewDesign(state.designCsv);
  void refresh();
}

boot();
