/**
 * Sequence-by-period grid model for uploaded designs: one colored cell per
 * (sequence, period) with the per-sequence cluster count alongside.
 */

import type { DesignParsePayload } from "./types.js";

export interface GridCell {
  sequence: number;
  period: number;
  treated: boolean;
}

export interface GridModel {
  cells: GridCell[];
  rowLabels: string[];
  columnLabels: string[];
  sequences: number;
  periods: number;
  nTotal: number;
  treatedCells: number;
}

export function buildGrid(parsed: DesignParsePayload): GridModel {
  const cells: GridCell[] = [];
  parsed.rows.forEach((row, s) => {
    row.forEach((value, p) => {
      cells.push({ sequence: s, period: p, treated: value === 1 });
    });
  });
  return {
    cells,
    rowLabels: parsed.clusters_per_sequence.map((count) => `${count} cluster${count === 1 ? "" : "s"}`),
    columnLabels: parsed.rows[0]?.map((_, p) => `P${p + 1}`) ?? [],
    sequences: parsed.sequences,
    periods: parsed.periods,
    nTotal: parsed.n_total,
    treatedCells: cells.filter((c) => c.treated).length,
  };
}
