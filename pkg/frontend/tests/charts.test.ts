import { describe, expect, it } from "vitest";
import { predictiveBand, probabilityPaths } from "../src/charts.js";
import type { Viewport } from "../src/charts.js";

const VP: Viewport = { width: 560, height: 240, pad: 28 };

describe("probabilityPaths", () => {
  const points = [
    { round: 0, values: [0.5, 0.5] },
    { round: 1, values: [0.8, 0.2] },
  ];

  it("emits one path per model", () => {
    const paths = probabilityPaths(points, VP);
    expect(paths).toHaveLength(2);
    paths.forEach((d) => expect(d).toMatch(/^M[\d.]+,[\d.]+ L[\d.]+,[\d.]+$/));
  });

  it("maps probability 1 to the chart top and 0 to the bottom", () => {
    const paths = probabilityPaths(
      [
        { round: 0, values: [1, 0] },
        { round: 1, values: [1, 0] },
      ],
      VP,
    );
    expect(paths[0]).toContain(`,${VP.pad.toFixed(2)}`);
    expect(paths[1]).toContain(`,${(VP.height - VP.pad).toFixed(2)}`);
  });

  it("handles an empty series", () => {
    expect(probabilityPaths([], VP)).toEqual([]);
  });
});

describe("predictiveBand", () => {
  it("returns a mean line and a closed band region", () => {
    const grid = [0, 1, 2, 3];
    const mu = [1, 2, 3, 4];
    const va = [0.04, 0.04, 0.04, 0.04];
    const { mean, band } = predictiveBand(grid, mu, va, VP);
    expect(mean.startsWith("M")).toBe(true);
    expect(mean.split("L")).toHaveLength(4);
    expect(band.endsWith("Z")).toBe(true);
    // upper edge + lower edge = 2 * grid points
    expect(band.split("L")).toHaveLength(8);
  });

  it("clamps negative variances instead of producing NaN", () => {
    const { mean, band } = predictiveBand([0, 1], [1, 2], [-1e-12, 0], VP);
    expect(mean).not.toContain("NaN");
    expect(band).not.toContain("NaN");
  });
});
