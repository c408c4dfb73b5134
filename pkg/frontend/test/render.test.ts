import { describe, expect, it } from "vitest";

import {
  renderHunterView,
  renderQmazeView,
  renderRbjView,
} from "../src/render.js";
import type { HunterViewPayload, QmazePlayerPayload, RbjPlayerPayload } from "../src/types.js";

const HUNTER_PAYLOAD: HunterViewPayload = {
  round: 1,
  rounds_total: 6,
  hunter_city: "alpha",
  status: "running",
  belief: { alpha: 0.25, beta: 0.75 },
  history: [
    {
      round: 1,
      observation: "west",
      hunter_action: { type: "stay" },
      hunter_city: "alpha",
      capture_result: null,
    },
  ],
  map: {
    cities: [
      { id: "alpha", region: "west", neighbors: ["beta"] },
      { id: "beta", region: "east", neighbors: ["alpha"] },
    ],
  },
};

describe("renderHunterView", () => {
  it("copies belief values verbatim into data attributes", () => {
    const html = renderHunterView(HUNTER_PAYLOAD);
    expect(html).toContain('data-city="alpha" data-p="0.25"');
    expect(html).toContain('data-city="beta" data-p="0.75"');
  });

  it("renders only payload fields, never a spy position", () => {
    const html = renderHunterView(HUNTER_PAYLOAD);
    expect(html).not.toContain("spy_city");
    expect(html).toContain('data-observation="west"');
  });

  it("offers moves only to neighbors of the hunter's city", () => {
    const html = renderHunterView(HUNTER_PAYLOAD);
    expect(html).toContain('data-to="beta"');
    expect(html).not.toContain('data-to="alpha"');
  });
});

describe("renderRbjView", () => {
  const payload: RbjPlayerPayload = {
    state: [1, 0],
    status: "running",
    legal_actions: ["hit", "stand"],
    draws: [{ action: "Hit", state: [0, 0], card: "red", result: [1, 0] }],
  };

  it("shows the hand from the payload state", () => {
    const html = renderRbjView(payload);
    expect(html).toContain('data-red="1" data-black="0"');
    expect(html).toContain('data-card="red"');
  });

  it("renders the solver overlay only when a solution is supplied", () => {
    const plain = renderRbjView(payload);
    expect(plain).not.toContain("overlay");
    const withOverlay = renderRbjView(payload, {
      values: {},
      q_values: { "(1,0):Hit": 2.5, "(1,0):Stand": 1.0 },
      policy: {},
      iterations_to_converge: 6,
    });
    expect(withOverlay).toContain('data-q-hit="2.5"');
    expect(withOverlay).toContain('data-q-stand="1"');
  });
});

describe("renderQmazeView", () => {
  const payload: QmazePlayerPayload = {
    episode: 1,
    position: [0, 0],
    steps_used: 0,
    budget: 4,
    episode_done: false,
    width: 2,
    height: 2,
    start: [0, 0],
    q_table: { "(0,0):E": 0.5, "(0,0):S": 0 },
    revealed: [{ pos: [0, 0], reward: 0, terminal: false }],
    status: "running",
  };

  it("marks unrevealed cells instead of inventing rewards", () => {
    const html = renderQmazeView(payload);
    expect(html).toContain('data-cell="0,0" data-reward="0"');
    expect(html).toContain("hidden-reward");
  });

  it("copies q values verbatim", () => {
    const html = renderQmazeView(payload);
    expect(html).toContain('data-q-action="E" data-q="0.5"');
  });

  it("echoes the last step's dice roll and update arithmetic from the event", () => {
    const html = renderQmazeView(payload, {
      state: [0, 0],
      roll: 2,
      explored: true,
      action_roll: 1,
      action: "E",
      reward: -1,
      next_state: [1, 0],
      q_before: 0,
      q_after: -0.5,
    });
    expect(html).toContain('data-roll="2" data-explored="true"');
    expect(html).toContain('data-q-before="0" data-q-after="-0.5"');
    expect(html).toContain("explore");
  });
});
