"""Guided hand-rub session state machine.

Implements the full protocol: wait for hands, gate on sanitizer dispensing,
walk the user through rub steps 2..8 in groups (a fresh dispense before each
group), defer timed-out steps to end-of-session repeat cycles, and finish when
every step is marked passed or the repeat budget is exhausted.

``advance`` is a pure function: it never mutates its inputs and identical
(state, event, config) triples produce identical outputs, which is what makes
event-log replay reproducible byte for byte.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from enum import Enum

from .errors import ConfigurationError

logger = logging.getLogger(__name__)

# WHO guideline rub steps handled by the trainer (step 1 is product
# application, handled by the dispense gate, not a rub gesture).
RUB_STEPS: tuple[int, ...] = (2, 3, 4, 5, 6, 7, 8)

FIRST_RUB_STEP = RUB_STEPS[0]
LAST_RUB_STEP = RUB_STEPS[-1]


def is_rub_step(step: int) -> bool:
    return FIRST_RUB_STEP <= step <= LAST_RUB_STEP


class Phase(str, Enum):
    AWAIT_HANDS = "await_hands"
    AWAIT_DISPENSE = "await_dispense"
    RUB_STEP = "rub_step"
    REPEAT_CYCLE = "repeat_cycle"
    COMPLETE = "complete"


class EventKind(str, Enum):
    HANDS_DETECTED = "hands_detected"
    HANDS_LOST = "hands_lost"
    DISPENSE_CONFIRMED = "dispense_confirmed"
    STEP_DECISION = "step_decision"
    TIMEOUT = "timeout"
    TICK = "tick"


class FeedbackKind(str, Enum):
    SHOW_INSTRUCTION = "show_instruction"
    MARK_PASSED = "mark_passed"
    PROMPT_DISPENSE = "prompt_dispense"
    PROMPT_HANDS = "prompt_hands"
    ANNOUNCE_REPEAT = "announce_repeat"
    ANNOUNCE_COMPLETE = "announce_complete"


@dataclass(frozen=True)
class SessionConfig:
    """Protocol knobs; defaults follow the trained-operator setup."""

    step_timeout_s: float = 10.0
    group_size: int = 3
    dispense_before_first_group: bool = True
    max_repeat_cycles: int = 3
    decision_policy_ref: str = "default"

    def validate(self) -> "SessionConfig":
        if not self.step_timeout_s > 0:
            raise ConfigurationError(
                f"step_timeout_s must be > 0, got {self.step_timeout_s}"
            )
        if self.group_size < 1:
            raise ConfigurationError(f"group_size must be >= 1, got {self.group_size}")
        if self.max_repeat_cycles < 0:
            raise ConfigurationError(
                f"max_repeat_cycles must be >= 0, got {self.max_repeat_cycles}"
            )
        return self

    @property
    def step_timeout_ms(self) -> int:
        return int(round(self.step_timeout_s * 1000))


@dataclass(frozen=True)
class SessionEvent:
    """Input event; every event carries a monotonic millisecond timestamp."""

    kind: EventKind
    t_ms: int
    step: int | None = None
    passed: bool | None = None

    def to_record(self) -> dict:
        args: dict = {}
        if self.kind is EventKind.STEP_DECISION:
            args = {"step": self.step, "passed": self.passed}
        elif self.kind is EventKind.TIMEOUT:
            args = {"step": self.step}
        return {"t_ms": self.t_ms, "event": self.kind.value, "args": args}

    @staticmethod
    def from_record(rec: dict) -> "SessionEvent":
        kind = EventKind(rec["event"])
        args = rec.get("args") or {}
        return SessionEvent(
            kind=kind,
            t_ms=int(rec["t_ms"]),
            step=args.get("step"),
            passed=args.get("passed"),
        )


def hands_detected(t_ms: int) -> SessionEvent:
    return SessionEvent(EventKind.HANDS_DETECTED, t_ms)


def hands_lost(t_ms: int) -> SessionEvent:
    return SessionEvent(EventKind.HANDS_LOST, t_ms)


def dispense_confirmed(t_ms: int) -> SessionEvent:
    return SessionEvent(EventKind.DISPENSE_CONFIRMED, t_ms)


def step_decision(t_ms: int, step: int, passed: bool) -> SessionEvent:
    return SessionEvent(EventKind.STEP_DECISION, t_ms, step=step, passed=passed)


def step_timeout(t_ms: int, step: int) -> SessionEvent:
    return SessionEvent(EventKind.TIMEOUT, t_ms, step=step)


def tick(t_ms: int) -> SessionEvent:
    return SessionEvent(EventKind.TICK, t_ms)


@dataclass(frozen=True)
class FeedbackEvent:
    """Output event destined for the UI / feedback log."""

    kind: FeedbackKind
    t_ms: int
    step: int | None = None
    queue: tuple[int, ...] | None = None
    all_steps_passed: bool | None = None

    def to_record(self) -> dict:
        args: dict = {}
        if self.step is not None:
            args["step"] = self.step
        if self.queue is not None:
            args["queue"] = list(self.queue)
        if self.all_steps_passed is not None:
            args["all_steps_passed"] = self.all_steps_passed
        return {"t_ms": self.t_ms, "event": self.kind.value, "args": args}

    @staticmethod
    def from_record(rec: dict) -> "FeedbackEvent":
        args = rec.get("args") or {}
        queue = args.get("queue")
        return FeedbackEvent(
            kind=FeedbackKind(rec["event"]),
            t_ms=int(rec["t_ms"]),
            step=args.get("step"),
            queue=tuple(queue) if queue is not None else None,
            all_steps_passed=args.get("all_steps_passed"),
        )


@dataclass(frozen=True)
class SessionState:
    """Immutable session snapshot.

    ``cycle`` is 0 during the main pass and k during the k-th repeat cycle;
    ``cycle_slots_left`` counts slots remaining in the current repeat cycle
    (0 outside repeat cycles).  ``dispense_count`` gates the initial dispense
    prompt; ``last_t_ms`` enforces timestamp monotonicity.
    """

    phase: Phase = Phase.AWAIT_HANDS
    target: int | None = None
    passed: frozenset[int] = field(default_factory=frozenset)
    repeat_queue: tuple[int, ...] = ()
    steps_since_dispense: int = 0
    step_entered_at: int = 0
    cycle: int = 0
    cycle_slots_left: int = 0
    dispense_count: int = 0
    last_t_ms: int = 0

    def to_record(self) -> dict:
        return {
            "phase": self.phase.value,
            "target_step": self.target,
            "passed": sorted(self.passed),
            "repeat_queue": list(self.repeat_queue),
            "steps_since_dispense": self.steps_since_dispense,
            "cycle": self.cycle,
        }


def new_session(config: SessionConfig) -> SessionState:
    """Fresh session in AwaitHands with nothing passed; validates config."""
    config.validate()
    return SessionState()


def pending_steps(state: SessionState) -> list[int]:
    """Main-cycle steps still owed, guideline order.

    Steps deferred to the repeat queue are excluded (the queue is reported
    separately in ``state.repeat_queue``).
    """
    return [
        s
        for s in RUB_STEPS
        if s not in state.passed and s not in state.repeat_queue
    ]


def _dispense_owed(state: SessionState, config: SessionConfig) -> bool:
    if state.steps_since_dispense >= config.group_size:
        return True
    return config.dispense_before_first_group and state.dispense_count == 0


def _show_target(
    state: SessionState, t_ms: int, feedback: list[FeedbackEvent]
) -> SessionState:
    """Enter the next rub slot: head of pending during the main pass,
    head of the repeat queue afterwards."""
    pend = pending_steps(state)
    if pend:
        target = pend[0]
        phase = Phase.RUB_STEP
    elif state.repeat_queue:
        target = state.repeat_queue[0]
        phase = Phase.REPEAT_CYCLE
    else:  # nothing left to show; callers check first
        return _complete(state, t_ms, feedback)
    feedback.append(FeedbackEvent(FeedbackKind.SHOW_INSTRUCTION, t_ms, step=target))
    return replace(state, phase=phase, target=target, step_entered_at=t_ms)


def _complete(
    state: SessionState, t_ms: int, feedback: list[FeedbackEvent]
) -> SessionState:
    all_passed = state.passed == frozenset(RUB_STEPS)
    feedback.append(
        FeedbackEvent(
            FeedbackKind.ANNOUNCE_COMPLETE, t_ms, all_steps_passed=all_passed
        )
    )
    return replace(state, phase=Phase.COMPLETE, target=None)


def _prompt_dispense(
    state: SessionState, t_ms: int, feedback: list[FeedbackEvent]
) -> SessionState:
    feedback.append(FeedbackEvent(FeedbackKind.PROMPT_DISPENSE, t_ms))
    return replace(state, phase=Phase.AWAIT_DISPENSE, target=None)


def _after_slot(
    state: SessionState,
    t_ms: int,
    config: SessionConfig,
    feedback: list[FeedbackEvent],
) -> SessionState:
    """Route to the next phase once the current slot is consumed."""
    pend = pending_steps(state)
    if pend:
        if _dispense_owed(state, config):
            return _prompt_dispense(state, t_ms, feedback)
        return _show_target(state, t_ms, feedback)

    # Main pass exhausted; we are at (or entering) repeat-cycle territory.
    at_boundary = state.cycle == 0 or state.cycle_slots_left == 0
    if at_boundary:
        if not state.repeat_queue:
            return _complete(state, t_ms, feedback)
        if state.cycle >= config.max_repeat_cycles:
            # Repeat budget exhausted with steps still unpassed.
            return _complete(state, t_ms, feedback)
        state = replace(
            state,
            cycle=state.cycle + 1,
            cycle_slots_left=len(state.repeat_queue),
        )
        feedback.append(
            FeedbackEvent(
                FeedbackKind.ANNOUNCE_REPEAT, t_ms, queue=state.repeat_queue
            )
        )
    elif not state.repeat_queue:
        return _complete(state, t_ms, feedback)

    if _dispense_owed(state, config):
        return _prompt_dispense(state, t_ms, feedback)
    return _show_target(state, t_ms, feedback)


def _consume_pass(
    state: SessionState,
    t_ms: int,
    config: SessionConfig,
    feedback: list[FeedbackEvent],
) -> SessionState:
    step = state.target
    assert step is not None
    feedback.append(FeedbackEvent(FeedbackKind.MARK_PASSED, t_ms, step=step))
    updates: dict = {
        "passed": state.passed | {step},
        "steps_since_dispense": state.steps_since_dispense + 1,
        "target": None,
    }
    if state.phase is Phase.REPEAT_CYCLE:
        updates["repeat_queue"] = state.repeat_queue[1:]
        updates["cycle_slots_left"] = state.cycle_slots_left - 1
    state = replace(state, **updates)
    return _after_slot(state, t_ms, config, feedback)


def _consume_timeout(
    state: SessionState,
    t_ms: int,
    config: SessionConfig,
    feedback: list[FeedbackEvent],
) -> SessionState:
    step = state.target
    assert step is not None
    if state.phase is Phase.REPEAT_CYCLE:
        # Move the head back to the tail; it gets another slot next cycle.
        queue = state.repeat_queue[1:] + (step,)
        state = replace(
            state,
            repeat_queue=queue,
            cycle_slots_left=state.cycle_slots_left - 1,
            target=None,
        )
    else:
        state = replace(
            state, repeat_queue=state.repeat_queue + (step,), target=None
        )
    return _after_slot(state, t_ms, config, feedback)


def advance(
    state: SessionState, event: SessionEvent, config: SessionConfig
) -> tuple[SessionState, list[FeedbackEvent]]:
    """Apply one event; returns the new state and emitted feedback.

    Pure: inputs are never mutated.  Events for the wrong phase or wrong step
    are ignored with a log diagnostic, keeping the feedback log clean.
    Advancing a Complete session is a no-op.
    """
    if state.phase is Phase.COMPLETE:
        return state, []

    t = event.t_ms
    if t < state.last_t_ms:
        logger.warning(
            "non-monotonic event timestamp %d < %d; event %s ignored",
            t,
            state.last_t_ms,
            event.kind.value,
        )
        return state, []
    state = replace(state, last_t_ms=t)

    feedback: list[FeedbackEvent] = []
    kind = event.kind

    if kind is EventKind.TICK:
        if (
            state.phase in (Phase.RUB_STEP, Phase.REPEAT_CYCLE)
            and t - state.step_entered_at > config.step_timeout_ms
        ):
            state = _consume_timeout(state, t, config, feedback)
        return state, feedback

    if kind is EventKind.HANDS_DETECTED:
        if state.phase is Phase.AWAIT_HANDS:
            if _dispense_owed(state, config):
                state = _prompt_dispense(state, t, feedback)
            else:
                state = _show_target(state, t, feedback)
        # elsewhere: hands are already accounted for
        return state, feedback

    if kind is EventKind.HANDS_LOST:
        if state.phase in (Phase.RUB_STEP, Phase.REPEAT_CYCLE):
            feedback.append(FeedbackEvent(FeedbackKind.PROMPT_HANDS, t))
            state = replace(state, phase=Phase.AWAIT_HANDS, target=None)
        # AwaitDispense keeps going: hands under the dispenser are expected
        # to leave the camera region.
        return state, feedback

    if kind is EventKind.DISPENSE_CONFIRMED:
        if state.phase is Phase.AWAIT_DISPENSE:
            state = replace(
                state,
                dispense_count=state.dispense_count + 1,
                steps_since_dispense=0,
            )
            state = _show_target(state, t, feedback)
        else:
            logger.info("dispense confirmation outside AwaitDispense ignored")
        return state, feedback

    if kind is EventKind.STEP_DECISION:
        if state.phase not in (Phase.RUB_STEP, Phase.REPEAT_CYCLE):
            logger.warning("step decision in phase %s ignored", state.phase.value)
            return state, feedback
        if event.step != state.target:
            logger.warning(
                "protocol error: decision for step %s while target is %s; ignored",
                event.step,
                state.target,
            )
            return state, feedback
        if event.passed:
            state = _consume_pass(state, t, config, feedback)
        # A negative decision just means keep trying until the timeout.
        return state, feedback

    if kind is EventKind.TIMEOUT:
        if state.phase not in (Phase.RUB_STEP, Phase.REPEAT_CYCLE):
            logger.warning("timeout in phase %s ignored", state.phase.value)
            return state, feedback
        if event.step != state.target:
            logger.warning(
                "protocol error: timeout for step %s while target is %s; ignored",
                event.step,
                state.target,
            )
            return state, feedback
        state = _consume_timeout(state, t, config, feedback)
        return state, feedback

    raise AssertionError(f"unhandled event kind {kind!r}")


def run_events(
    state: SessionState,
    events: list[SessionEvent],
    config: SessionConfig,
) -> tuple[SessionState, list[FeedbackEvent]]:
    """Fold ``advance`` over an event list, concatenating feedback."""
    log: list[FeedbackEvent] = []
    for ev in events:
        state, fb = advance(state, ev, config)
        log.extend(fb)
    return state, log
