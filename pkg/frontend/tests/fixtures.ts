import type { CampaignView, ObservationEvent } from "../src/api.js";

export function observation(
  round: number,
  pi: number[],
  w: number[],
): ObservationEvent {
  return {
    event: "observation",
    round,
    x: [10, 20],
    y: [1.0, 2.0],
    pi,
    w,
    chi2_pass: pi.map(() => true),
    status: "ongoing",
    criterion: "bh",
    criterion_value: 1.25,
  };
}

export function makeView(overrides: Partial<CampaignView> = {}): CampaignView {
  return {
    id: "abc123",
    round: 2,
    status: "ongoing",
    winner: null,
    model_names: ["M1", "M2", "M3", "M4"],
    pi: [0.7, 0.1, 0.1, 0.1],
    w: [0.55, 0.15, 0.15, 0.15],
    chi2_pass: [true, true, true, true],
    latest_proposal: {
      event: "proposal",
      round: 2,
      x_star: [12.5, 30.0],
      criterion: "bh",
      criterion_value: 2.5,
      wall_clock: 0.8,
    },
    design_bounds: [
      [5, 55],
      [10, 120],
    ],
    output_dim: 2,
    data: [],
    history: [
      observation(1, [0.4, 0.2, 0.2, 0.2], [0.4, 0.2, 0.2, 0.2]),
      observation(2, [0.7, 0.1, 0.1, 0.1], [0.55, 0.15, 0.15, 0.15]),
    ],
    config: {},
    ...overrides,
  };
}
