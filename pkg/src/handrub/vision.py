"""Hand presence, classifier contract, and the step-pass decision policy.

The camera background is engineered bright and uniform, so presence detection
is a luma threshold against a reference background model.  Step passing is a
K-of-N rule over per-frame sigmoid scores of the known target class: because
the protocol always knows which step comes next, only that class score is
consulted (one-vs-rest).
"""

from __future__ import annotations

import bisect
import logging
from dataclasses import dataclass, field
from typing import Protocol

import numpy as np

from . import kernels
from .errors import ConfigurationError, InputError

logger = logging.getLogger(__name__)

N_CLASSES = 9

# Score-vector layout: two non-gesture states, then rub steps 2..8, so the
# class index of a rub step equals its step number.
CLASS_NO_HANDS = 0
CLASS_HANDS_IDLE = 1
CLASS_NAMES: tuple[str, ...] = (
    "no-hands",
    "hands-idle",
    "step-2",
    "step-3",
    "step-4",
    "step-5",
    "step-6",
    "step-7",
    "step-8",
)


def class_index_for_step(step: int) -> int:
    if not 2 <= step <= 8:
        raise InputError(f"no class for step {step}")
    return step


@dataclass(frozen=True)
class FrameSample:
    """Timestamped raw RGB frame (row-major, 8 bits per channel)."""

    t_ms: int
    width: int
    height: int
    pixels: bytes

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise InputError(f"empty frame {self.width}x{self.height}")
        expected = 3 * self.width * self.height
        if len(self.pixels) != expected:
            raise InputError(
                f"pixel buffer has {len(self.pixels)} bytes, expected {expected}"
            )

    def rgb(self) -> np.ndarray:
        """(h, w, 3) uint8 view of the pixel buffer."""
        return np.frombuffer(self.pixels, dtype=np.uint8).reshape(
            self.height, self.width, 3
        )

    @staticmethod
    def from_rgb(t_ms: int, rgb: np.ndarray) -> "FrameSample":
        arr = np.ascontiguousarray(rgb, dtype=np.uint8)
        h, w = arr.shape[0], arr.shape[1]
        return FrameSample(t_ms=t_ms, width=w, height=h, pixels=arr.tobytes())


@dataclass(frozen=True)
class BackgroundModel:
    """Uniform bright background: reference luma plus a symmetric tolerance."""

    reference_luma: float = 240.0
    tolerance: float = 60.0

    def __post_init__(self):
        if self.tolerance < 0:
            raise ConfigurationError(f"tolerance must be >= 0, got {self.tolerance}")
        if not 0 <= self.reference_luma <= 255:
            raise ConfigurationError(
                f"reference_luma must be in 0..255, got {self.reference_luma}"
            )


@dataclass(frozen=True)
class Roi:
    """Axis-aligned rectangle; must sit fully inside the frame it is applied to."""

    x: int
    y: int
    w: int
    h: int

    def validate_within(self, width: int, height: int) -> None:
        if (
            self.x < 0
            or self.y < 0
            or self.w <= 0
            or self.h <= 0
            or self.x + self.w > width
            or self.y + self.h > height
        ):
            raise InputError(
                f"roi {self} outside {width}x{height} frame bounds"
            )


@dataclass(frozen=True)
class ClassScores:
    """Per-class sigmoid scores for one frame; 9 entries, each in [0, 1]."""

    scores: tuple[float, ...]
    t_ms: int

    def __post_init__(self):
        if len(self.scores) != N_CLASSES:
            raise InputError(f"expected {N_CLASSES} scores, got {len(self.scores)}")
        for s in self.scores:
            if not 0.0 <= s <= 1.0:
                raise InputError(f"score {s} outside [0, 1]")


def sanitize_scores(raw: tuple[float, ...] | list[float], t_ms: int) -> ClassScores:
    """Clamp backend output into [0,1] at the interface boundary.

    Violations are clamped and logged rather than propagated, so a misbehaving
    backend cannot poison the decision policy.
    """
    clamped = []
    dirty = False
    for s in raw:
        c = min(1.0, max(0.0, float(s)))
        dirty = dirty or c != s
        clamped.append(c)
    if len(clamped) != N_CLASSES:
        raise InputError(f"backend emitted {len(clamped)} scores, expected {N_CLASSES}")
    if dirty:
        logger.warning("classifier scores outside [0,1] clamped at t=%d", t_ms)
    return ClassScores(scores=tuple(clamped), t_ms=t_ms)


@dataclass(frozen=True)
class DecisionPolicy:
    """Pass a step when >= k_required of window_n frames score >= tau."""

    tau: float = 0.8
    window_n: int = 5
    k_required: int = 3

    def __post_init__(self):
        if not 0.0 < self.tau < 1.0:
            raise ConfigurationError(f"tau must be in (0,1), got {self.tau}")
        if not 1 <= self.k_required <= self.window_n:
            raise ConfigurationError(
                f"need 1 <= k_required <= window_n, got k={self.k_required} n={self.window_n}"
            )


class GestureClassifier(Protocol):
    """Pluggable classifier backend contract.

    ``classify`` must be deterministic for identical pixel input within one
    backend instance; the descriptor names the backend and its version.
    """

    descriptor: str

    def classify(self, frame: FrameSample) -> ClassScores: ...


def compute_foreground_mask(frame: FrameSample, bg: BackgroundModel) -> np.ndarray:
    """Boolean (h, w) mask; foreground iff |luma - reference| > tolerance.

    luma = floor(0.299 R + 0.587 G + 0.114 B + 0.5).
    """
    return kernels.foreground_mask(frame.rgb(), bg.reference_luma, bg.tolerance)


def hand_presence(
    mask: np.ndarray, roi: Roi, min_coverage: float
) -> tuple[bool, float]:
    """Coverage of foreground inside the ROI and whether it clears the bar."""
    height, width = mask.shape
    roi.validate_within(width, height)
    count = kernels.roi_foreground_count(mask, roi.x, roi.y, roi.w, roi.h)
    coverage = count / (roi.w * roi.h)
    return coverage >= min_coverage, coverage


def decide_step(
    window: list[ClassScores], target: int, policy: DecisionPolicy
) -> tuple[bool, int]:
    """K-of-N decision over the target class score; returns (passed, hits)."""
    if len(window) != policy.window_n:
        raise InputError(
            f"window has {len(window)} frames, policy needs {policy.window_n}"
        )
    if not 0 <= target < N_CLASSES:
        raise InputError(f"target class {target} out of range")
    hits = sum(1 for s in window if s.scores[target] >= policy.tau)
    return hits >= policy.k_required, hits


def load_score_script(path) -> list[tuple[int, tuple[float, ...]]]:
    """Read a score script: JSON lines of {"t_ms": int, "scores": [9 floats]}."""
    import json
    from pathlib import Path

    script = []
    for i, line in enumerate(Path(path).read_text().splitlines()):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
            script.append((int(rec["t_ms"]), tuple(float(x) for x in rec["scores"])))
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise ConfigurationError(f"{path}:{i + 1}: bad script line: {exc}") from exc
    return script


class ScriptedClassifier:
    """Deterministic test backend replaying a scripted score timeline.

    ``classify`` returns the script entry with the greatest t_ms <= frame
    time; before the first entry it returns all-zero scores.
    """

    def __init__(self, script: list[tuple[int, tuple[float, ...]]]):
        times = [t for t, _ in script]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ConfigurationError("script timestamps must be strictly increasing")
        self._times = times
        self._scores = [tuple(float(x) for x in s) for _, s in script]
        for s in self._scores:
            ClassScores(scores=s, t_ms=0)  # validate length and range
        self.descriptor = f"scripted/1 entries={len(script)}"

    def classify(self, frame: FrameSample) -> ClassScores:
        i = bisect.bisect_right(self._times, frame.t_ms) - 1
        if i < 0:
            return ClassScores(scores=(0.0,) * N_CLASSES, t_ms=frame.t_ms)
        return ClassScores(scores=self._scores[i], t_ms=frame.t_ms)


@dataclass
class ScoreWindow:
    """Tumbling decision window over the live score stream.

    Collects window_n scores for the current target, emits one decision per
    full window, and resets whenever the target changes.
    """

    policy: DecisionPolicy
    _target: int | None = None
    _buf: list[ClassScores] = field(default_factory=list)

    def push(self, scores: ClassScores, target: int) -> tuple[bool, int] | None:
        if target != self._target:
            self._target = target
            self._buf = []
        self._buf.append(scores)
        if len(self._buf) < self.policy.window_n:
            return None
        decision = decide_step(self._buf, target, self.policy)
        self._buf = []
        return decision


@dataclass
class PresenceDetector:
    """Per-frame hand presence with change detection (absent at start)."""

    bg: BackgroundModel
    min_coverage: float = 0.15
    roi: Roi | None = None  # None = full frame
    _present: bool = False

    def push(self, frame: FrameSample) -> tuple[bool | None, float]:
        """Returns (change, coverage); change is True/False on a presence
        transition and None when the presence state is unchanged."""
        mask = compute_foreground_mask(frame, self.bg)
        roi = self.roi or Roi(0, 0, frame.width, frame.height)
        present, coverage = hand_presence(mask, roi, self.min_coverage)
        if present == self._present:
            return None, coverage
        self._present = present
        return present, coverage
