"""Synthetic session generator for timing studies.

Drives the real state machine with timed events: per-step durations are drawn
from truncated normal distributions (or fixed values), every step passes, and
metrics are collected from the resulting feedback logs.  Used by the CLI
``simulate`` subcommand to produce aggregate timing reports.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from .errors import ConfigurationError, InputError
from .metrics import AggregateReport, SessionMetrics, aggregate, collect_metrics
from .session import (
    Phase,
    RUB_STEPS,
    SessionConfig,
    dispense_confirmed,
    hands_detected,
    new_session,
    run_events,
    step_decision,
)


@dataclass(frozen=True)
class DurationModel:
    """Truncated normal per-step durations (std 0 means fixed)."""

    mean_s: float
    std_s: float = 0.0
    lo_s: float = 0.1
    hi_s: float = 30.0

    def __post_init__(self):
        if self.mean_s <= 0:
            raise ConfigurationError(f"mean_s must be > 0, got {self.mean_s}")
        if self.std_s < 0:
            raise ConfigurationError(f"std_s must be >= 0, got {self.std_s}")
        if not self.lo_s < self.hi_s:
            raise ConfigurationError("need lo_s < hi_s")

    def sample(self, rng: random.Random) -> float:
        if self.std_s == 0:
            return self.mean_s
        for _ in range(1000):
            x = rng.gauss(self.mean_s, self.std_s)
            if self.lo_s <= x <= self.hi_s:
                return x
        return min(max(self.mean_s, self.lo_s), self.hi_s)


# Defaults loosely shaped like observed training sessions: most steps take a
# few seconds, the wrist step is the slowest.
DEFAULT_STEP_MODELS: dict[int, DurationModel] = {
    2: DurationModel(3.9, 0.6),
    3: DurationModel(3.7, 0.6),
    4: DurationModel(3.7, 0.6),
    5: DurationModel(3.3, 0.6),
    6: DurationModel(3.7, 0.6),
    7: DurationModel(3.7, 0.6),
    8: DurationModel(5.3, 0.8),
}


@dataclass(frozen=True)
class SimulationSpec:
    step_models: dict[int, DurationModel] = field(
        default_factory=lambda: dict(DEFAULT_STEP_MODELS)
    )
    dispense_s: float = 2.0
    hands_delay_s: float = 1.0
    session_config: SessionConfig = field(default_factory=SessionConfig)

    def __post_init__(self):
        missing = [s for s in RUB_STEPS if s not in self.step_models]
        if missing:
            raise ConfigurationError(f"no duration model for steps {missing}")


def spec_from_fixed_durations(
    durations: dict[int, float], config: SessionConfig | None = None
) -> SimulationSpec:
    """Fixed per-step durations (seconds), e.g. loaded from a JSON file."""
    models = {}
    for step in RUB_STEPS:
        if step not in durations:
            raise InputError(f"fixed durations missing step {step}")
        models[step] = DurationModel(mean_s=float(durations[step]), std_s=0.0)
    return SimulationSpec(
        step_models=models, session_config=config or SessionConfig()
    )


def simulate_session(
    spec: SimulationSpec, rng: random.Random, session_id: str
) -> SessionMetrics:
    """Walk one session through the engine with sampled timings."""
    config = spec.session_config
    state = new_session(config)
    events = []
    t = 0

    # Cap iterations defensively; an all-passing session terminates long
    # before this.
    for _ in range(10 * len(RUB_STEPS) + 20):
        if state.phase is Phase.COMPLETE:
            break
        if state.phase is Phase.AWAIT_HANDS:
            t += int(round(spec.hands_delay_s * 1000))
            ev = hands_detected(t)
        elif state.phase is Phase.AWAIT_DISPENSE:
            t += int(round(spec.dispense_s * 1000))
            ev = dispense_confirmed(t)
        else:
            step = state.target
            assert step is not None
            dur = spec.step_models[step].sample(rng)
            t = state.step_entered_at + int(round(dur * 1000))
            ev = step_decision(t, step, True)
        state, fb = run_events(state, [ev], config)
        events.extend(fb)
    return collect_metrics(events, session_id=session_id)


def simulate_sessions(
    spec: SimulationSpec, n_sessions: int, seed: int
) -> tuple[list[SessionMetrics], AggregateReport]:
    if n_sessions < 1:
        raise InputError(f"n_sessions must be >= 1, got {n_sessions}")
    rng = random.Random(seed)
    sessions = [
        simulate_session(spec, rng, session_id=f"sim-{seed}-{i:04d}")
        for i in range(n_sessions)
    ]
    return sessions, aggregate(sessions)
