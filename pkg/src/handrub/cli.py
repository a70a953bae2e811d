"""Operator command line.

Subcommands: serve (session service), replay (event log through the engine),
simulate (synthetic timing study), eval (classifier evaluation), train-baseline,
metrics-export.  Exit codes: 0 success, 1 runtime failure, 2 usage error;
diagnostics go to stderr.  HH_LOG_LEVEL selects log verbosity.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from . import __version__

LOG_LEVELS = {
    "error": logging.ERROR,
    "warn": logging.WARNING,
    "info": logging.INFO,
    "debug": logging.DEBUG,
}


def _setup_logging() -> None:
    level = os.environ.get("HH_LOG_LEVEL", "warn").lower()
    logging.basicConfig(
        level=LOG_LEVELS.get(level, logging.WARNING),
        stream=sys.stderr,
        format="%(levelname)s %(name)s: %(message)s",
    )


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load_config(path: str | None):
    from .service import ServiceConfig, load_service_config

    return load_service_config(path) if path else ServiceConfig()


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    config = _load_config(args.config)
    app = create_app(config, ui_dir=args.ui)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def cmd_replay(args) -> int:
    from .eventlog import read_events, write_feedback
    from .metrics import collect_metrics, metrics_json
    from .session import new_session, run_events

    config = _load_config(args.config)
    events = read_events(args.log)
    state = new_session(config.session)
    _state, feedback = run_events(state, events, config.session)

    out = _out_dir(args)
    write_feedback(out / "feedback.jsonl", feedback)
    metrics = collect_metrics(feedback, session_id=Path(args.log).stem)
    (out / "metrics.json").write_text(metrics_json(metrics))
    print(f"replayed {len(events)} events -> {len(feedback)} feedback events")
    return 0


def cmd_simulate(args) -> int:
    from .simulate import (
        SimulationSpec,
        simulate_sessions,
        spec_from_fixed_durations,
    )

    if args.fixed_durations:
        durations = json.loads(Path(args.fixed_durations).read_text())
        spec = spec_from_fixed_durations({int(k): float(v) for k, v in durations.items()})
    else:
        spec = SimulationSpec()

    sessions, report = simulate_sessions(spec, args.sessions, args.seed)
    out = _out_dir(args)
    (out / "sessions.jsonl").write_text(
        "".join(
            json.dumps(m.to_json_obj(), separators=(",", ":")) + "\n"
            for m in sessions
        )
    )
    if args.format == "csv":
        (out / "aggregate.csv").write_text(report.to_csv())
    else:
        (out / "aggregate.json").write_text(
            json.dumps(report.to_json_obj(), indent=2) + "\n"
        )
    print(
        f"simulated {report.n_sessions} sessions: mean total "
        f"{report.mean_total_s:.3f} s, compliance rate {report.compliance_rate:.2f}"
    )
    return 0


def cmd_eval(args) -> int:
    from .dataset import load_manifest
    from .evaluate import evaluate_classifier
    from .service import BackendConfig, build_classifier

    manifest = load_manifest(args.manifest)
    classifier = build_classifier(BackendConfig(kind=args.backend, path=args.model))
    report = evaluate_classifier(classifier, manifest, stride=args.stride)
    out = _out_dir(args)
    (out / "report.json").write_text(report.to_json())
    if args.format == "csv":
        (out / "confusion.csv").write_text(report.confusion_csv())
    print(
        f"evaluated {report.n_frames} frames: accuracy {report.accuracy:.4f}, "
        f"loss {report.loss:.6f}"
    )
    return 0


def cmd_train_baseline(args) -> int:
    from .baseline import save_model, train_baseline
    from .dataset import load_manifest

    manifest = load_manifest(args.manifest)
    model = train_baseline(
        manifest, epochs=args.epochs, lr=args.lr, stride=args.stride
    )
    out = _out_dir(args)
    save_model(model, out / "model.json")
    print(f"trained baseline on {len(manifest.clips)} clips -> {out / 'model.json'}")
    return 0


def cmd_metrics_export(args) -> int:
    from .metrics import SessionMetrics, aggregate

    path = Path(args.metrics)
    records = []
    if path.is_dir():
        for f in sorted(path.glob("*.json")):
            records.append(json.loads(f.read_text()))
    else:
        text = path.read_text()
        if path.suffix == ".jsonl":
            records = [json.loads(line) for line in text.splitlines() if line.strip()]
        else:
            obj = json.loads(text)
            records = obj if isinstance(obj, list) else [obj]
    sessions = [SessionMetrics.from_json_obj(r) for r in records]
    report = aggregate(sessions)
    out = _out_dir(args)
    if args.format == "csv":
        (out / "aggregate.csv").write_text(report.to_csv())
    else:
        (out / "aggregate.json").write_text(
            json.dumps(report.to_json_obj(), indent=2) + "\n"
        )
    print(f"exported aggregate of {report.n_sessions} sessions")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="handrub", description="hand-rub training engine tools"
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("serve", help="run the streaming session service")
    p.add_argument("--config", metavar="PATH", default=None)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--ui", metavar="DIR", default=None, help="serve this directory as the web UI")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("replay", help="run a recorded event log through the engine")
    p.add_argument("log", metavar="EVENTS_JSONL")
    p.add_argument("--config", metavar="PATH", default=None)
    p.add_argument("--out", metavar="DIR", required=True)
    p.set_defaults(func=cmd_replay)

    p = sub.add_parser("simulate", help="generate synthetic sessions and aggregate timing")
    p.add_argument("--sessions", metavar="N", type=int, default=10)
    p.add_argument("--seed", metavar="N", type=int, default=0)
    p.add_argument("--fixed-durations", metavar="PATH", default=None)
    p.add_argument("--out", metavar="DIR", required=True)
    p.add_argument("--format", choices=["json", "csv"], default="json")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("eval", help="evaluate a classifier backend on a manifest")
    p.add_argument("--manifest", metavar="PATH", required=True)
    p.add_argument("--model", metavar="PATH", required=True,
                   help="baseline model file, or a score script for --backend scripted")
    p.add_argument("--backend", choices=["baseline", "scripted"], default="baseline")
    p.add_argument("--out", metavar="DIR", required=True)
    p.add_argument("--format", choices=["json", "csv"], default="json")
    p.add_argument("--stride", type=int, default=5)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("train-baseline", help="train the baseline classifier")
    p.add_argument("--manifest", metavar="PATH", required=True)
    p.add_argument("--out", metavar="DIR", required=True)
    p.add_argument("--epochs", type=int, default=300)
    p.add_argument("--lr", type=float, default=5.0)
    p.add_argument("--stride", type=int, default=1)
    p.set_defaults(func=cmd_train_baseline)

    p = sub.add_parser("metrics-export", help="aggregate stored session metrics")
    p.add_argument("metrics", metavar="METRICS_PATH", help="json, jsonl or directory")
    p.add_argument("--out", metavar="DIR", required=True)
    p.add_argument("--format", choices=["json", "csv"], default="json")
    p.set_defaults(func=cmd_metrics_export)

    return parser


def main(argv: list[str] | None = None) -> int:
    _setup_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except BrokenPipeError:
        return 1
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        logging.getLogger(__name__).debug("failure detail", exc_info=True)
        return 1


if __name__ == "__main__":
    sys.exit(main())
