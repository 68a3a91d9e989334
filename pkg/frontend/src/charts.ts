// Hand-rolled SVG chart path generation. Pure functions: given data and a
// viewport, return path strings the DOM layer drops into <path d=...>.

import type { SeriesPoint } from "./state.js";

export interface Viewport {
  width: number;
  height: number;
  pad: number;
}

export const PALETTE = ["#2563eb", "#dc2626", "#059669", "#d97706", "#7c3aed"];

function scale(
  v: number,
  lo: number,
  hi: number,
  out0: number,
  out1: number,
): number {
  if (hi === lo) return (out0 + out1) / 2;
  return out0 + ((v - lo) / (hi - lo)) * (out1 - out0);
}

/** One polyline per model for a probability-evolution chart (y in [0,1]). */
export function probabilityPaths(points: SeriesPoint[], vp: Viewport): string[] {
  if (points.length === 0) return [];
  const m = points[0].values.length;
  const rMax = Math.max(1, ...points.map((p) => p.round));
  const paths: string[] = [];
  for (let j = 0; j < m; j++) {
    const cmds = points.map((p, i) => {
      const x = scale(p.round, 0, rMax, vp.pad, vp.width - vp.pad);
      const y = scale(p.values[j], 0, 1, vp.height - vp.pad, vp.pad);
      return `${i === 0 ? "M" : "L"}${x.toFixed(2)},${y.toFixed(2)}`;
    });
    paths.push(cmds.join(" "));
  }
  return paths;
}

export interface BandPath {
  mean: string;
  band: string; // closed region mean +/- 2 sd
}

/** Predictive mean line plus a +/-2 sd band along a 1-d grid. */
export function predictiveBand(
  grid: number[],
  mu: number[],
  varDiag: number[],
  vp: Viewport,
): BandPath {
  const sd = varDiag.map((v) => Math.sqrt(Math.max(v, 0)));
  const upper = mu.map((m, i) => m + 2 * sd[i]);
  const lower = mu.map((m, i) => m - 2 * sd[i]);
  const yLo = Math.min(...lower);
  const yHi = Math.max(...upper);
  const xLo = grid[0];
  const xHi = grid[grid.length - 1];
  const px = (g: number) => scale(g, xLo, xHi, vp.pad, vp.width - vp.pad);
  const py = (v: number) => scale(v, yLo, yHi, vp.height - vp.pad, vp.pad);
  const line = (ys: number[], rev = false) => {
    const idx = ys.map((_, i) => i);
    if (rev) idx.reverse();
    return idx
      .map((i, k) => `${k === 0 ? "" : "L"}${px(grid[i]).toFixed(2)},${py(ys[i]).toFixed(2)}`)
      .join(" ");
  };
  const mean = "M" + line(mu);
  const band = "M" + line(upper) + " L" + line(lower, true) + " Z";
  return { mean, band };
}
