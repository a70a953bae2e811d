"""Per-session timing capture and cross-session aggregation.

Step durations are measured from each instruction being shown to the step
being marked passed, summed across attempts (a timed-out attempt ends when
the next feedback event consumes its slot).  Dispense time is tracked
separately and excluded from the rub total, which is what the WHO 20-30 s
compliance window applies to.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field

from .errors import InputError
from .session import FeedbackEvent, FeedbackKind, RUB_STEPS

WHO_MIN_RUB_S = 20.0
WHO_MAX_RUB_S = 30.0


def who_compliance_check(total_rub_s: float) -> bool:
    """True iff the total rub time sits in the inclusive 20..30 s window."""
    if total_rub_s < 0:
        raise InputError(f"negative total rub time {total_rub_s}")
    return WHO_MIN_RUB_S <= total_rub_s <= WHO_MAX_RUB_S


@dataclass(frozen=True)
class SessionMetrics:
    session_id: str
    step_timings: dict[int, float]  # step -> seconds, attempts summed
    dispense_durations_s: list[float]
    total_rub_s: float
    compliant: bool
    complete: bool = True
    all_steps_passed: bool = True

    def to_json_obj(self) -> dict:
        return {
            "session_id": self.session_id,
            "step_timings": {str(k): v for k, v in sorted(self.step_timings.items())},
            "dispense_durations_s": self.dispense_durations_s,
            "total_rub_s": self.total_rub_s,
            "compliant": self.compliant,
            "complete": self.complete,
            "all_steps_passed": self.all_steps_passed,
        }

    @staticmethod
    def from_json_obj(obj: dict) -> "SessionMetrics":
        return SessionMetrics(
            session_id=obj["session_id"],
            step_timings={int(k): float(v) for k, v in obj["step_timings"].items()},
            dispense_durations_s=[float(x) for x in obj["dispense_durations_s"]],
            total_rub_s=float(obj["total_rub_s"]),
            compliant=bool(obj["compliant"]),
            complete=bool(obj.get("complete", True)),
            all_steps_passed=bool(obj.get("all_steps_passed", True)),
        )


@dataclass(frozen=True)
class AggregateReport:
    per_step_mean_s: dict[int, float]
    mean_total_s: float
    n_sessions: int
    compliance_rate: float

    def to_json_obj(self) -> dict:
        return {
            "per_step_mean_s": {
                str(k): v for k, v in sorted(self.per_step_mean_s.items())
            },
            "mean_total_s": self.mean_total_s,
            "n_sessions": self.n_sessions,
            "compliance_rate": self.compliance_rate,
        }

    def to_csv(self) -> str:
        """One row per step: (step, mean_s)."""
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["step", "mean_s"])
        for step in sorted(self.per_step_mean_s):
            writer.writerow([step, repr(self.per_step_mean_s[step])])
        return buf.getvalue()


def collect_metrics(
    feedback_log: list[FeedbackEvent], session_id: str = ""
) -> SessionMetrics:
    """Scan a session's feedback log into per-step and dispense timings.

    A log without AnnounceComplete yields a result flagged incomplete (the
    timings cover whatever was observed).
    """
    step_totals: dict[int, float] = {}
    dispense: list[float] = []
    complete = False
    all_passed = False

    open_step: tuple[int, int] | None = None  # (step, shown_at_ms)
    open_dispense_t: int | None = None

    for fb in feedback_log:
        if open_step is not None:
            step, shown_at = open_step
            # Any next feedback event consumes the slot: MarkPassed on
            # success, otherwise the timeout/interrupt transition.
            step_totals[step] = step_totals.get(step, 0.0) + (fb.t_ms - shown_at) / 1000.0
            open_step = None
        if open_dispense_t is not None:
            dispense.append((fb.t_ms - open_dispense_t) / 1000.0)
            open_dispense_t = None

        if fb.kind is FeedbackKind.SHOW_INSTRUCTION:
            assert fb.step is not None
            open_step = (fb.step, fb.t_ms)
        elif fb.kind is FeedbackKind.PROMPT_DISPENSE:
            open_dispense_t = fb.t_ms
        elif fb.kind is FeedbackKind.ANNOUNCE_COMPLETE:
            complete = True
            all_passed = bool(fb.all_steps_passed)

    total = sum(step_totals.values())
    return SessionMetrics(
        session_id=session_id,
        step_timings=step_totals,
        dispense_durations_s=dispense,
        total_rub_s=total,
        compliant=who_compliance_check(total),
        complete=complete,
        all_steps_passed=all_passed,
    )


def aggregate(sessions: list[SessionMetrics]) -> AggregateReport:
    """Arithmetic means across sessions; per-step means cover only sessions
    that contain the step."""
    if not sessions:
        raise InputError("cannot aggregate zero sessions")
    per_step: dict[int, float] = {}
    for step in RUB_STEPS:
        values = [m.step_timings[step] for m in sessions if step in m.step_timings]
        if values:
            per_step[step] = sum(values) / len(values)
    mean_total = sum(m.total_rub_s for m in sessions) / len(sessions)
    rate = sum(1 for m in sessions if m.compliant) / len(sessions)
    return AggregateReport(
        per_step_mean_s=per_step,
        mean_total_s=mean_total,
        n_sessions=len(sessions),
        compliance_rate=rate,
    )


def metrics_json(metrics: SessionMetrics) -> str:
    return json.dumps(metrics.to_json_obj(), indent=2, sort_keys=False) + "\n"
