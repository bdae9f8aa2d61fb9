/**
 * Scenario sharing through the URL fragment: the full form state serializes
 * into `#s=<base64url(json)>`, so loading a link reproduces the scenario and
 * its results. Only fields that differ from the defaults are stored.
 */

import { defaultScenario, type ScenarioState } from "./form.js";

/** Fragments longer than this risk being dropped by browsers/proxies. */
export const MAX_FRAGMENT_LENGTH = 6000;

export interface EncodedScenario {
  fragment: string;
  truncated: boolean;
}

function toBase64Url(text: string): string {
  const bytes = new TextEncoder().encode(text);
  let binary = "";
  bytes.forEach((b) => (binary += String.fromCharCode(b)));
  return btoa(binary).replace(/\+/g, "-").replace(/\//g, "_").replace(/=+$/, "");
}

function fromBase64Url(encoded: string): string {
  const padded = encoded.replace(/-/g, "+").replace(/_/g, "/");
  const binary = atob(padded + "=".repeat((4 - (padded.length % 4)) % 4));
  const bytes = Uint8Array.from(binary, (c) => c.charCodeAt(0));
  return new TextDecoder().decode(bytes);
}

function nonDefaultEntries(state: ScenarioState): Record<string, unknown> {
  const defaults = defaultScenario() as unknown as Record<string, unknown>;
  const current = state as unknown as Record<string, unknown>;
  const out: Record<string, unknown> = {};
  for (const key of Object.keys(current)) {
    if (JSON.stringify(current[key]) !== JSON.stringify(defaults[key])) {
      out[key] = current[key];
    }
  }
  return out;
}

/**
 * Encode the scenario for the URL fragment. Oversized design CSVs are
 * dropped (with `truncated: true`) rather than producing an unusable link.
 */
export function encodeScenario(state: ScenarioState): EncodedScenario {
  let entries = nonDefaultEntries(state);
  let fragment = "s=" + toBase64Url(JSON.stringify(entries));
  let truncated = false;
  if (fragment.length > MAX_FRAGMENT_LENGTH && entries.designCsv !== undefined) {
    entries = { ...entries };
    delete entries.designCsv;
    fragment = "s=" + toBase64Url(JSON.stringify(entries));
    truncated = true;
  }
  return { fragment, truncated };
}

/** Decode a fragment back into a full scenario; unknown keys are ignored. */
export function decodeScenario(fragment: string): ScenarioState {
  const state = defaultScenario();
  const match = /(?:^|[#&])s=([A-Za-z0-9_-]+)/.exec(fragment);
  if (!match) return state;
  let parsed: Record<string, unknown>;
  try {
    parsed = JSON.parse(fromBase64Url(match[1]));
  } catch {
    return state;
  }
  const target = state as unknown as Record<string, unknown>;
  for (const [key, value] of Object.entries(parsed)) {
    if (key in target) target[key] = value;
  }
  return state;
}
