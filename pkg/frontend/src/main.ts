// Page wiring: health check, websocket session, webcam capture, live render.

import { lookupElements, render } from "./dom.js";
import { PROTOCOL_VERSION, ServerMessage } from "./protocol.js";
import { CapturedFrame, FrameStreamer } from "./streamer.js";
import { initialView, renderState } from "./view.js";

const FRAME_RATE_FPS = 10;
const JPEG_QUALITY = 0.7;

function wsUrl(): string {
  const base = window.location.origin.replace(/^http/, "ws");
  return `${base}/session`;
}

function fatal(message: string): void {
  const el = document.getElementById("fatal");
  if (el) {
    el.hidden = false;
    el.textContent = message;
  }
}

async function connectScreen(): Promise<void> {
  const health = await fetch("/healthz");
  if (!health.ok) throw new Error(`service unhealthy: ${health.status}`);
  const doc = (await health.json()) as { protocol: string; backend: string };
  if (doc.protocol !== PROTOCOL_VERSION) {
    throw new Error(`server speaks ${doc.protocol}, this page needs ${PROTOCOL_VERSION}`);
  }
  const backendEl = document.getElementById("backend");
  if (backendEl) backendEl.textContent = doc.backend;
}

async function openCamera(video: HTMLVideoElement): Promise<void> {
  const stream = await navigator.mediaDevices.getUserMedia({
    video: { width: 640, height: 480 },
    audio: false,
  });
  video.srcObject = stream;
  await video.play();
}

function makeCapture(video: HTMLVideoElement): () => CapturedFrame | null {
  const canvas = document.createElement("canvas");
  const ctx = canvas.getContext("2d");
  return () => {
    if (!ctx || video.videoWidth === 0) return null;
    canvas.width = video.videoWidth;
    canvas.height = video.videoHeight;
    ctx.drawImage(video, 0, 0);
    const dataUrl = canvas.toDataURL("image/jpeg", JPEG_QUALITY);
    const comma = dataUrl.indexOf(",");
    return {
      data: dataUrl.slice(comma + 1),
      width: canvas.width,
      height: canvas.height,
    };
  };
}

async function run(): Promise<void> {
  await connectScreen();

  const video = document.getElementById("preview") as HTMLVideoElement;
  try {
    await openCamera(video);
  } catch (err) {
    fatal(`Camera permission is required to train: ${String(err)}`);
    return;
  }

  const els = lookupElements(document);
  let view = initialView();
  render(view, els);

  const ws = new WebSocket(wsUrl());
  const streamer = new FrameStreamer(
    {
      now: () => performance.now(),
      isHidden: () => document.hidden,
      capture: makeCapture(video),
      send: (m) => {
        if (ws.readyState === WebSocket.OPEN) ws.send(JSON.stringify(m));
      },
    },
    FRAME_RATE_FPS,
  );

  ws.onopen = () => {
    ws.send(JSON.stringify({ type: "hello", protocol: PROTOCOL_VERSION }));
    streamer.start();
  };
  ws.onmessage = (ev) => {
    let msg: ServerMessage;
    try {
      msg = JSON.parse(ev.data as string) as ServerMessage;
    } catch {
      console.warn("non-JSON message ignored");
      return;
    }
    view = renderState(view, msg);
    render(view, els);
  };
  ws.onclose = () => {
    streamer.stop();
    if (!view.complete) fatal("Connection lost - session aborted. Reload to start over.");
  };
  ws.onerror = () => {
    // onclose follows and handles the notice
  };
}

run().catch((err) => fatal(String(err)));
