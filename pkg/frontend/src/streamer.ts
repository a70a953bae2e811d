// Webcam frame streamer: encodes at most rate_fps frames per second with
// strictly increasing sequence numbers, and goes quiet while the tab is
// hidden.  All environment access is injected so the scheduling logic is
// testable without a browser.

import { FrameMessage } from "./protocol.js";

export interface CapturedFrame {
  data: string; // base64 JPEG payload
  width: number;
  height: number;
}

export interface StreamerDeps {
  now(): number;
  isHidden(): boolean;
  capture(): CapturedFrame | null;
  send(message: FrameMessage): void;
}

export class FrameStreamer {
  private seq = 0;
  private lastSentAt: number | null = null;
  private timer: ReturnType<typeof setInterval> | null = null;
  readonly intervalMs: number;

  constructor(
    private readonly deps: StreamerDeps,
    rateFps: number,
  ) {
    if (!(rateFps > 0)) throw new Error(`rateFps must be > 0, got ${rateFps}`);
    this.intervalMs = 1000 / rateFps;
  }

  get sentCount(): number {
    return this.seq;
  }

  /** Capture-and-send if a frame is due; returns whether one was sent. */
  tick(): boolean {
    if (this.deps.isHidden()) return false;
    const t = this.deps.now();
    if (this.lastSentAt !== null && t - this.lastSentAt < this.intervalMs) {
      return false;
    }
    const frame = this.deps.capture();
    if (frame === null) return false;
    this.seq += 1;
    this.lastSentAt = t;
    this.deps.send({
      type: "frame",
      seq: this.seq,
      t_ms: Math.round(t),
      encoding: "jpeg",
      data: frame.data,
      width: frame.width,
      height: frame.height,
    });
    return true;
  }

  /** Poll at twice the frame interval; tick() enforces the rate bound. */
  start(): void {
    if (this.timer !== null) return;
    this.timer = setInterval(() => this.tick(), this.intervalMs / 2);
  }

  stop(): void {
    if (this.timer !== null) {
      clearInterval(this.timer);
      this.timer = null;
    }
  }
}
