// Pure view-model reducer: the rendered page is a projection of the last
// received state/feedback messages, so replaying a message log always yields
// the identical final view.

import {
  MetricsMessage,
  RUB_STEPS,
  STEP_INSTRUCTIONS,
  ServerMessage,
  stepIllustration,
} from "./protocol.js";

export interface UiSessionView {
  phase: string;
  targetStep: number | null;
  instruction: string | null;
  illustration: string | null;
  passed: Record<number, boolean>;
  repeatQueue: number[];
  repeatBanner: number[];
  dispensePrompt: boolean;
  handsPrompt: boolean;
  complete: boolean;
  allStepsPassed: boolean | null;
  metrics: MetricsMessage | null;
  lastScores: number[] | null;
  firstEventMs: number | null;
  lastEventMs: number | null;
  errors: string[];
}

export function initialView(): UiSessionView {
  const passed: Record<number, boolean> = {};
  for (const s of RUB_STEPS) passed[s] = false;
  return {
    phase: "await_hands",
    targetStep: null,
    instruction: null,
    illustration: null,
    passed,
    repeatQueue: [],
    repeatBanner: [],
    dispensePrompt: false,
    handsPrompt: true,
    complete: false,
    allStepsPassed: null,
    metrics: null,
    lastScores: null,
    firstEventMs: null,
    lastEventMs: null,
    errors: [],
  };
}

export function elapsedMs(view: UiSessionView): number {
  if (view.firstEventMs === null || view.lastEventMs === null) return 0;
  return view.lastEventMs - view.firstEventMs;
}

function withTarget(view: UiSessionView, step: number | null): UiSessionView {
  return {
    ...view,
    targetStep: step,
    instruction: step === null ? null : (STEP_INSTRUCTIONS[step] ?? null),
    illustration: step === null ? null : stepIllustration(step),
  };
}

function trackTime(view: UiSessionView, t_ms: number): UiSessionView {
  return {
    ...view,
    firstEventMs: view.firstEventMs ?? t_ms,
    lastEventMs: Math.max(view.lastEventMs ?? t_ms, t_ms),
  };
}

export function renderState(view: UiSessionView, message: ServerMessage): UiSessionView {
  switch (message.type) {
    case "state": {
      // markers only ever accumulate within the session
      const passed = { ...view.passed };
      for (const s of message.passed) passed[s] = true;
      let next: UiSessionView = {
        ...view,
        phase: message.phase,
        passed,
        repeatQueue: [...message.repeat_queue],
        dispensePrompt: view.dispensePrompt && message.phase === "await_dispense",
        handsPrompt: message.phase === "await_hands",
        complete: view.complete || message.phase === "complete",
      };
      next = withTarget(next, message.target_step);
      return next;
    }
    case "feedback": {
      let next = trackTime(view, message.t_ms);
      const step = message.args.step;
      switch (message.event) {
        case "show_instruction":
          return withTarget(next, step ?? null);
        case "mark_passed":
          if (step !== undefined) {
            next = { ...next, passed: { ...next.passed, [step]: true } };
          }
          return next;
        case "prompt_dispense":
          return { ...next, dispensePrompt: true };
        case "prompt_hands":
          return { ...next, handsPrompt: true };
        case "announce_repeat":
          return { ...next, repeatBanner: [...(message.args.queue ?? [])] };
        case "announce_complete":
          next = withTarget(next, null);
          return {
            ...next,
            complete: true,
            allStepsPassed: message.args.all_steps_passed ?? null,
            dispensePrompt: false,
            handsPrompt: false,
            repeatBanner: [],
          };
        default:
          console.warn("unknown feedback event ignored:", message.event);
          return next;
      }
    }
    case "scores":
      return { ...trackTime(view, message.t_ms), lastScores: [...message.scores] };
    case "metrics":
      return { ...view, metrics: message };
    case "error":
      return { ...view, errors: [...view.errors, `${message.code}: ${message.message}`] };
    case "hello":
      return view;
    default: {
      console.warn("unknown message type ignored:", (message as { type?: string }).type);
      return view;
    }
  }
}

export function replayLog(messages: ServerMessage[]): UiSessionView {
  let view = initialView();
  for (const m of messages) view = renderState(view, m);
  return view;
}
