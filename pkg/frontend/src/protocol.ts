// Wire contract hh/1: message shapes exchanged with the session service.

export const PROTOCOL_VERSION = "hh/1";

export const RUB_STEPS = [2, 3, 4, 5, 6, 7, 8] as const;
export type RubStep = (typeof RUB_STEPS)[number];

export interface StateMessage {
  type: "state";
  phase: string;
  target_step: number | null;
  passed: number[];
  repeat_queue: number[];
  steps_since_dispense: number;
  cycle: number;
}

export interface FeedbackMessage {
  type: "feedback";
  t_ms: number;
  event: string;
  args: {
    step?: number;
    queue?: number[];
    all_steps_passed?: boolean;
  };
}

export interface ScoresMessage {
  type: "scores";
  seq: number;
  t_ms: number;
  scores: number[];
}

export interface MetricsMessage {
  type: "metrics";
  session_id: string;
  step_timings: Record<string, number>;
  dispense_durations_s: number[];
  total_rub_s: number;
  compliant: boolean;
  complete: boolean;
  all_steps_passed: boolean;
}

export interface ErrorMessage {
  type: "error";
  code: string;
  message: string;
}

export interface HelloMessage {
  type: "hello";
  protocol: string;
  version?: string;
}

export type ServerMessage =
  | StateMessage
  | FeedbackMessage
  | ScoresMessage
  | MetricsMessage
  | ErrorMessage
  | HelloMessage;

export interface FrameMessage {
  type: "frame";
  seq: number;
  t_ms: number;
  encoding: "jpeg" | "raw-rgb";
  data: string;
  width: number;
  height: number;
}

// Step captions follow the WHO hand-rub poster wording for steps 2-8.
export const STEP_INSTRUCTIONS: Record<number, string> = {
  2: "Rub your palms together.",
  3: "Rub the back of each hand with the opposite palm, fingers interlaced.",
  4: "Rub palm to palm with fingers interlaced.",
  5: "Rub the backs of your fingers against the opposing palms, fingers interlocked.",
  6: "Rub each thumb clasped in the opposite palm with a rotating motion.",
  7: "Rub your fingertips in circles against the opposite palm, both hands.",
  8: "Rub each wrist with the opposite hand.",
};

export function stepIllustration(step: number): string {
  return `assets/step-${step}.svg`;
}
