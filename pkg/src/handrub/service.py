"""Streaming session service.

Speaks wire contract "hh/1" over a websocket: JSON text messages, frames and
sensor readings in, state/feedback/metrics out.  The engine wiring lives in
``SessionRunner``, which is transport-agnostic (plain dicts in, plain dicts
out) so replay tests can drive it without a socket; the FastAPI app is a thin
adapter plus a /healthz document.
"""

from __future__ import annotations

import base64
import io
import json
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from fastapi import FastAPI, WebSocket, WebSocketDisconnect

from . import __version__
from .errors import ConfigurationError, InputError
from .metrics import collect_metrics
from .sensors import DispenseConfig, DispenseGate, DistanceReading
from .session import (
    FeedbackEvent,
    FeedbackKind,
    Phase,
    SessionConfig,
    advance,
    dispense_confirmed,
    hands_detected,
    hands_lost,
    new_session,
    step_decision,
    tick,
)
from .vision import (
    BackgroundModel,
    ClassScores,
    DecisionPolicy,
    FrameSample,
    GestureClassifier,
    PresenceDetector,
    Roi,
    ScoreWindow,
    class_index_for_step,
    sanitize_scores,
)

logger = logging.getLogger(__name__)

PROTOCOL_VERSION = "hh/1"


@dataclass(frozen=True)
class VisionConfig:
    reference_luma: float = 240.0
    tolerance: float = 60.0
    min_coverage: float = 0.15
    roi: Roi | None = None
    max_fps: float = 10.0
    policies: dict[str, DecisionPolicy] = field(
        default_factory=lambda: {"default": DecisionPolicy()}
    )

    def policy(self, ref: str) -> DecisionPolicy:
        if ref not in self.policies:
            raise ConfigurationError(f"unknown decision policy {ref!r}")
        return self.policies[ref]


@dataclass(frozen=True)
class BackendConfig:
    kind: str = "baseline"  # "baseline" | "scripted"
    path: str = ""


@dataclass(frozen=True)
class ServiceConfig:
    session: SessionConfig = field(default_factory=SessionConfig)
    vision: VisionConfig = field(default_factory=VisionConfig)
    dispense: DispenseConfig = field(default_factory=DispenseConfig)
    backend: BackendConfig = field(default_factory=BackendConfig)
    debug_scores: bool = False


def config_from_obj(obj: dict) -> ServiceConfig:
    session = SessionConfig(**obj.get("session", {})).validate()
    v = dict(obj.get("vision", {}))
    roi = Roi(**v.pop("roi")) if v.get("roi") else None
    policies = {
        name: DecisionPolicy(**p)
        for name, p in v.pop("policies", {"default": {}}).items()
    }
    if "default" not in policies:
        policies["default"] = DecisionPolicy()
    vision = VisionConfig(roi=roi, policies=policies, **v)
    dispense = DispenseConfig(**obj.get("dispense", {}))
    backend = BackendConfig(**obj.get("backend", {}))
    return ServiceConfig(
        session=session,
        vision=vision,
        dispense=dispense,
        backend=backend,
        debug_scores=bool(obj.get("debug_scores", False)),
    )


def load_service_config(path: str | Path) -> ServiceConfig:
    try:
        obj = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from exc
    return config_from_obj(obj)


def build_classifier(config: BackendConfig) -> GestureClassifier:
    if config.kind == "baseline":
        from .baseline import BaselineClassifier, load_model

        if not config.path:
            raise ConfigurationError("baseline backend needs a model path")
        return BaselineClassifier(load_model(config.path))
    if config.kind == "scripted":
        from .vision import ScriptedClassifier, load_score_script

        if not config.path:
            raise ConfigurationError("scripted backend needs a script path")
        return ScriptedClassifier(load_score_script(config.path))
    raise ConfigurationError(f"unknown backend kind {config.kind!r}")


def _error(code: str, message: str) -> dict:
    return {"type": "error", "code": code, "message": message}


def decode_frame(msg: dict) -> FrameSample:
    try:
        raw = base64.b64decode(msg["data"], validate=True)
    except Exception as exc:
        raise InputError(f"bad base64 payload: {exc}") from exc
    t_ms = int(msg["t_ms"])
    encoding = msg.get("encoding", "jpeg")
    if encoding == "jpeg":
        from PIL import Image

        try:
            with Image.open(io.BytesIO(raw)) as img:
                rgb = np.asarray(img.convert("RGB"), dtype=np.uint8)
        except Exception as exc:
            raise InputError(f"jpeg decode failed: {exc}") from exc
        return FrameSample.from_rgb(t_ms, rgb)
    if encoding == "raw-rgb":
        if "width" not in msg or "height" not in msg:
            raise InputError("raw-rgb frames need width and height fields")
        return FrameSample(
            t_ms=t_ms,
            width=int(msg["width"]),
            height=int(msg["height"]),
            pixels=raw,
        )
    raise InputError(f"unknown frame encoding {encoding!r}")


class SessionRunner:
    """One session's engine wiring: messages in, messages out.

    Single-writer: exactly one connection drives a runner.  All behaviour is
    a deterministic function of the inbound message sequence.
    """

    def __init__(
        self,
        config: ServiceConfig,
        classifier: GestureClassifier,
        session_id: str = "",
    ):
        self.config = config
        self.classifier = classifier
        self.session_id = session_id
        self.state = new_session(config.session)
        self.feedback_log: list[FeedbackEvent] = []
        self.gate = DispenseGate(config.dispense)
        self.presence = PresenceDetector(
            bg=BackgroundModel(
                reference_luma=config.vision.reference_luma,
                tolerance=config.vision.tolerance,
            ),
            min_coverage=config.vision.min_coverage,
            roi=config.vision.roi,
        )
        self.window = ScoreWindow(
            policy=config.vision.policy(config.session.decision_policy_ref)
        )
        self.closed = False
        self._last_seq: int | None = None
        self._last_kept_frame_t: int | None = None
        self._frame_interval_ms = (
            int(1000 / config.vision.max_fps) if config.vision.max_fps > 0 else 0
        )
        self._last_state_record = self.state.to_record()

    # -- engine plumbing ----------------------------------------------------

    def _apply(self, event, out: list[dict]) -> None:
        self.state, feedback = advance(self.state, event, self.config.session)
        for fb in feedback:
            self.feedback_log.append(fb)
            out.append({"type": "feedback", **fb.to_record()})
            if fb.kind is FeedbackKind.ANNOUNCE_COMPLETE:
                out.append(self._metrics_message())
                self.closed = True
        record = self.state.to_record()
        if record != self._last_state_record:
            self._last_state_record = record
            out.append({"type": "state", **record})

    def _metrics_message(self) -> dict:
        metrics = collect_metrics(self.feedback_log, session_id=self.session_id)
        return {"type": "metrics", **metrics.to_json_obj()}

    # -- message handlers ---------------------------------------------------

    def handle_message(self, msg: dict) -> list[dict]:
        if self.closed:
            return []
        out: list[dict] = []
        mtype = msg.get("type")
        try:
            if mtype == "frame":
                self._handle_frame(msg, out)
            elif mtype == "sensor":
                self._handle_sensor(msg, out)
            elif mtype == "control":
                self._handle_control(msg, out)
            else:
                out.append(_error("unknown-type", f"unknown message type {mtype!r}"))
        except (InputError, KeyError, TypeError, ValueError) as exc:
            out.append(_error("malformed", str(exc)))
        return out

    def _handle_frame(self, msg: dict, out: list[dict]) -> None:
        seq = int(msg["seq"])
        if self._last_seq is not None and seq <= self._last_seq:
            out.append(
                _error("seq-order", f"frame seq {seq} after {self._last_seq} dropped")
            )
            return
        self._last_seq = seq

        try:
            frame = decode_frame(msg)
        except InputError as exc:
            out.append(_error("frame-decode", str(exc)))
            return

        # rate limit: newest frame wins, earlier-than-interval frames drop
        if (
            self._last_kept_frame_t is not None
            and frame.t_ms - self._last_kept_frame_t < self._frame_interval_ms
        ):
            return
        self._last_kept_frame_t = frame.t_ms

        self._apply(tick(frame.t_ms), out)

        change, _coverage = self.presence.push(frame)
        if change is True:
            self._apply(hands_detected(frame.t_ms), out)
        elif change is False:
            self._apply(hands_lost(frame.t_ms), out)
        if self.closed:
            return

        scores = sanitize_scores(self.classifier.classify(frame).scores, frame.t_ms)
        if self.config.debug_scores:
            out.append(
                {
                    "type": "scores",
                    "seq": seq,
                    "t_ms": frame.t_ms,
                    "scores": list(scores.scores),
                }
            )
        if self.state.phase in (Phase.RUB_STEP, Phase.REPEAT_CYCLE):
            target = self.state.target
            assert target is not None
            decision = self.window.push(scores, class_index_for_step(target))
            if decision is not None:
                passed, _hits = decision
                self._apply(step_decision(frame.t_ms, target, passed), out)

    def _handle_sensor(self, msg: dict, out: list[dict]) -> None:
        t_ms = int(msg["t_ms"])
        cm = float(msg["cm"])
        if cm < 0:
            out.append(_error("malformed", f"negative distance {cm}"))
            return
        self._apply(tick(t_ms), out)
        if self.closed:
            return
        confirm_t = self.gate.push(DistanceReading(t_ms=t_ms, distance_cm=cm))
        if confirm_t is not None:
            self._apply(dispense_confirmed(confirm_t), out)

    def _handle_control(self, msg: dict, out: list[dict]) -> None:
        action = msg.get("action")
        if action == "start":
            out.append({"type": "state", **self.state.to_record()})
        elif action == "abort":
            out.append(self._metrics_message())
            self.closed = True
        elif action == "config-override":
            overrides = msg.get("config") or {}
            session = replace(self.config.session, **overrides).validate()
            self.config = replace(self.config, session=session)
        else:
            out.append(_error("unknown-control", f"unknown control action {action!r}"))


def run_message_log(
    runner: SessionRunner, inbound: list[dict]
) -> list[dict]:
    """Feed a recorded inbound message log; returns all outbound messages."""
    out: list[dict] = []
    for msg in inbound:
        out.extend(runner.handle_message(msg))
        if runner.closed:
            break
    return out


def outbound_text(messages: list[dict]) -> str:
    return "".join(json.dumps(m, separators=(",", ":")) + "\n" for m in messages)


# ---------------------------------------------------------------------------
# FastAPI adapter


def create_app(
    config: ServiceConfig,
    classifier: GestureClassifier | None = None,
    ui_dir: str | Path | None = None,
) -> FastAPI:
    app = FastAPI(title="handrub session service")
    backend = classifier or build_classifier(config.backend)
    app.state.active_sessions = 0
    app.state.session_counter = 0

    @app.get("/healthz")
    def healthz() -> dict:
        return {
            "version": __version__,
            "protocol": PROTOCOL_VERSION,
            "active_sessions": app.state.active_sessions,
            "backend": backend.descriptor,
        }

    @app.websocket("/session")
    async def session_socket(ws: WebSocket) -> None:
        await ws.accept()
        try:
            hello = await ws.receive_json()
        except Exception:
            await ws.close(code=1002)
            return
        if hello.get("type") != "hello" or hello.get("protocol") != PROTOCOL_VERSION:
            await ws.send_json(
                _error(
                    "version-mismatch",
                    f"server speaks {PROTOCOL_VERSION}, client sent "
                    f"{hello.get('protocol')!r}",
                )
            )
            await ws.close(code=1002)
            return
        await ws.send_json(
            {"type": "hello", "protocol": PROTOCOL_VERSION, "version": __version__}
        )

        app.state.session_counter += 1
        runner = SessionRunner(
            config, backend, session_id=f"ws-{app.state.session_counter:06d}"
        )
        app.state.active_sessions += 1
        try:
            while not runner.closed:
                try:
                    raw = await ws.receive_text()
                except WebSocketDisconnect:
                    return
                try:
                    msg = json.loads(raw)
                except json.JSONDecodeError as exc:
                    await ws.send_json(_error("malformed", f"bad json: {exc}"))
                    continue
                for reply in runner.handle_message(msg):
                    await ws.send_json(reply)
            await ws.close()
        finally:
            app.state.active_sessions -= 1

    if ui_dir is not None:
        from fastapi.staticfiles import StaticFiles

        # mounted last so /healthz and /session win route matching
        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app
