// Pure view-model layer: everything the page renders is derived here from
// server payloads, so it can be tested without a DOM or a network.

import type { CampaignView, ObservationEvent } from "./api.js";

export interface SeriesPoint {
  round: number;
  values: number[]; // one per model
}

export interface ChartSeries {
  modelNames: string[];
  pi: SeriesPoint[];
  w: SeriesPoint[];
}

const TERMINAL = new Set(["decided", "all-rejected", "budget-exhausted"]);

/** Probability/weight history: round 0 is the initial state, then one
 *  point per observation, straight from the server's history rows. */
export function buildSeries(view: CampaignView): ChartSeries {
  const m = view.model_names.length;
  const initial: SeriesPoint = {
    round: 0,
    values: new Array(m).fill(1 / m),
  };
  const pi = [initial, ...view.history.map(rowToPoint("pi"))];
  const w = [initial, ...view.history.map(rowToPoint("w"))];
  return { modelNames: view.model_names, pi, w };
}

function rowToPoint(key: "pi" | "w") {
  return (row: ObservationEvent): SeriesPoint => ({
    round: row.round,
    values: row[key],
  });
}

export function isTerminal(view: CampaignView): boolean {
  return TERMINAL.has(view.status);
}

export interface TerminalProjection {
  actionsDisabled: boolean;
  banner: string | null;
  winnerName: string | null;
}

export function projectTerminalState(view: CampaignView): TerminalProjection {
  if (!isTerminal(view)) {
    return { actionsDisabled: false, banner: null, winnerName: null };
  }
  if (view.status === "decided" && view.winner !== null) {
    const name = view.model_names[view.winner];
    return {
      actionsDisabled: true,
      banner: `Campaign decided: ${name}`,
      winnerName: name,
    };
  }
  const text =
    view.status === "all-rejected"
      ? "All models rejected - no adequate model remains"
      : "Experiment budget exhausted without a decision";
  return { actionsDisabled: true, banner: text, winnerName: null };
}

export interface FieldError {
  field: string;
  message: string;
}

/** Client-side validation against the server-delivered design box; never
 *  hard-codes bounds. Returns [] when the submission may go out. */
export function validateObservation(
  view: CampaignView,
  xText: string[],
  yText: string[],
): FieldError[] {
  const errors: FieldError[] = [];
  const bounds = view.design_bounds;
  if (xText.length !== bounds.length) {
    errors.push({
      field: "x",
      message: `design point needs ${bounds.length} values`,
    });
  }
  xText.forEach((t, i) => {
    const v = Number(t);
    if (t.trim() === "" || Number.isNaN(v)) {
      errors.push({ field: `x${i}`, message: "not a number" });
      return;
    }
    const [lo, hi] = bounds[i] ?? [NaN, NaN];
    if (v < lo || v > hi) {
      errors.push({
        field: `x${i}`,
        message: `must lie in [${lo}, ${hi}]`,
      });
    }
  });
  if (yText.length !== view.output_dim) {
    errors.push({
      field: "y",
      message: `measurement needs ${view.output_dim} values`,
    });
  }
  yText.forEach((t, i) => {
    if (t.trim() === "" || Number.isNaN(Number(t))) {
      errors.push({ field: `y${i}`, message: "not a number" });
    }
  });
  return errors;
}

/** Display-rounding sanity check used by the rendering layer: each
 *  probability row must be non-negative and sum to one. */
export function seriesRowsAreProbabilities(points: SeriesPoint[]): boolean {
  return points.every(
    (p) =>
      p.values.every((v) => v >= 0) &&
      Math.abs(p.values.reduce((a, b) => a + b, 0) - 1) < 1e-6,
  );
}

/** Grid of design points along one dimension with the others pinned. */
export function sliceGrid(
  bounds: [number, number][],
  dim: number,
  pinned: number[],
  n = 50,
): number[][] {
  const [lo, hi] = bounds[dim];
  const out: number[][] = [];
  for (let i = 0; i < n; i++) {
    const x = pinned.slice();
    x[dim] = lo + ((hi - lo) * i) / (n - 1);
    out.push(x);
  }
  return out;
}

export function formatProtocol(x: number[]): string {
  return x.map((v) => v.toPrecision(6)).join(", ");
}
