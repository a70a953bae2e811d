// View-layer replay: feeding the recorded outbound log of a full session must
// reproduce the frozen final snapshot, and markers must behave monotonically.

import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";
import { describe, expect, it, vi } from "vitest";

import { ServerMessage, StateMessage } from "../src/protocol.js";
import { elapsedMs, initialView, renderState, replayLog } from "../src/view.js";

const here = dirname(fileURLToPath(import.meta.url));

function loadGoldenLog(): ServerMessage[] {
  const text = readFileSync(join(here, "fixtures", "golden_outbound.jsonl"), "utf8");
  return text
    .split("\n")
    .filter((line) => line.trim().length > 0)
    .map((line) => JSON.parse(line) as ServerMessage);
}

describe("golden replay", () => {
  it("reproduces the frozen final view snapshot", () => {
    const final = replayLog(loadGoldenLog());
    const fixture = JSON.parse(
      readFileSync(join(here, "fixtures", "final_view.json"), "utf8"),
    );
    expect(JSON.parse(JSON.stringify(final))).toEqual(fixture);
  });

  it("fills all 7 markers at completion", () => {
    const final = replayLog(loadGoldenLog());
    for (const step of [2, 3, 4, 5, 6, 7, 8]) {
      expect(final.passed[step]).toBe(true);
    }
    expect(final.complete).toBe(true);
    expect(elapsedMs(final)).toBe(14600);
  });

  it("is deterministic across replays", () => {
    const a = replayLog(loadGoldenLog());
    const b = replayLog(loadGoldenLog());
    expect(a).toEqual(b);
  });

  it("never un-marks a step during the session", () => {
    let view = initialView();
    let marked = new Set<number>();
    for (const msg of loadGoldenLog()) {
      view = renderState(view, msg);
      for (const step of marked) {
        expect(view.passed[step]).toBe(true);
      }
      marked = new Set(
        Object.entries(view.passed)
          .filter(([, v]) => v)
          .map(([k]) => Number(k)),
      );
    }
  });
});

describe("projection rules", () => {
  const state = (partial: Partial<StateMessage>): StateMessage => ({
    type: "state",
    phase: "rub_step",
    target_step: null,
    passed: [],
    repeat_queue: [],
    steps_since_dispense: 0,
    cycle: 0,
    ...partial,
  });

  it("marks passed steps from a state message", () => {
    const view = renderState(initialView(), state({ passed: [2, 3] }));
    expect(view.passed[2]).toBe(true);
    expect(view.passed[3]).toBe(true);
    expect(view.passed[4]).toBe(false);
  });

  it("shows the dispense overlay until a non-dispense state arrives", () => {
    let view = renderState(initialView(), {
      type: "feedback",
      t_ms: 100,
      event: "prompt_dispense",
      args: {},
    });
    expect(view.dispensePrompt).toBe(true);
    view = renderState(view, state({ phase: "await_dispense" }));
    expect(view.dispensePrompt).toBe(true);
    view = renderState(view, state({ phase: "rub_step", target_step: 2 }));
    expect(view.dispensePrompt).toBe(false);
    expect(view.instruction).toContain("palms");
    expect(view.illustration).toBe("assets/step-2.svg");
  });

  it("lists the repeat queue from the announcement and clears it on completion", () => {
    let view = renderState(initialView(), {
      type: "feedback",
      t_ms: 100,
      event: "announce_repeat",
      args: { queue: [4, 6] },
    });
    expect(view.repeatBanner).toEqual([4, 6]);
    view = renderState(view, {
      type: "feedback",
      t_ms: 200,
      event: "announce_complete",
      args: { all_steps_passed: false },
    });
    expect(view.repeatBanner).toEqual([]);
    expect(view.complete).toBe(true);
    expect(view.allStepsPassed).toBe(false);
  });

  it("ignores unknown message types with a console diagnostic", () => {
    const warn = vi.spyOn(console, "warn").mockImplementation(() => {});
    const view = initialView();
    const next = renderState(view, { type: "mystery" } as unknown as ServerMessage);
    expect(next).toBe(view);
    expect(warn).toHaveBeenCalled();
    warn.mockRestore();
  });

  it("collects error messages", () => {
    const view = renderState(initialView(), {
      type: "error",
      code: "seq-order",
      message: "frame seq 4 after 9 dropped",
    });
    expect(view.errors).toHaveLength(1);
    expect(view.errors[0]).toContain("seq-order");
  });
});
