"""Dispense gate: ultrasonic distance-range validation over a reading stream.

The pump itself is actuated by hardware (IR trigger); software sees only the
distance readings and confirms a dispense when the reading has stayed in the
configured range for hold_ms, debounced between confirmations.  Readings come
from a serial line speaking ASCII integers (centimeters) or from a scripted
simulator.
"""

from __future__ import annotations

import logging
import os
import re
import time
from dataclasses import dataclass
from typing import IO, Iterable, Iterator

from .errors import ConfigurationError, ParseError

logger = logging.getLogger(__name__)

MAX_DISTANCE_CM = 500

# ASCII decimal integer, optional CR/LF/CRLF terminator, nothing else.
_LINE_RE = re.compile(rb"\A[0-9]+(?:\r\n|\r|\n)?\Z")


@dataclass(frozen=True)
class DistanceReading:
    t_ms: int
    distance_cm: float

    def __post_init__(self):
        if self.distance_cm < 0:
            raise ParseError(f"negative distance {self.distance_cm}")


@dataclass(frozen=True)
class DispenseConfig:
    """Accept range plus hold/debounce timing for the gate."""

    min_cm: float = 5.0
    max_cm: float = 30.0
    hold_ms: int = 300
    debounce_ms: int = 2000

    def __post_init__(self):
        if not 0 <= self.min_cm < self.max_cm:
            raise ConfigurationError(
                f"need 0 <= min_cm < max_cm, got [{self.min_cm}, {self.max_cm}]"
            )
        if self.hold_ms < 0:
            raise ConfigurationError(f"hold_ms must be >= 0, got {self.hold_ms}")
        if self.debounce_ms < 0:
            raise ConfigurationError(
                f"debounce_ms must be >= 0, got {self.debounce_ms}"
            )

    def in_range(self, cm: float) -> bool:
        return self.min_cm <= cm <= self.max_cm


def parse_distance_line(line: bytes) -> int:
    """Parse one serial line into centimeters.

    Grammar: ASCII decimal integer, optionally terminated by CR, LF or CRLF.
    Values above 500 cm are sensor noise and rejected.
    """
    if not _LINE_RE.match(line):
        raise ParseError(f"unparseable distance line {line!r}")
    value = int(line.rstrip(b"\r\n"))
    if value > MAX_DISTANCE_CM:
        raise ParseError(f"distance {value} cm out of sensor range")
    return value


class DispenseGate:
    """Stateful fold over a time-ordered reading stream.

    A confirmation fires at the first reading time t where the reading is in
    range, no out-of-range reading falls in [t - hold_ms, t], the stream has
    been observed for at least hold_ms, and debounce_ms has elapsed since the
    previous confirmation.  Out-of-order readings are dropped with a
    diagnostic.
    """

    def __init__(self, config: DispenseConfig):
        self.config = config
        self._first_t: int | None = None
        self._last_t: int | None = None
        self._last_out_of_range_t: int | None = None
        self._last_confirm_t: int | None = None

    def push(self, reading: DistanceReading) -> int | None:
        """Feed one reading; returns the confirmation timestamp or None."""
        t = reading.t_ms
        if self._last_t is not None and t < self._last_t:
            logger.warning(
                "out-of-order distance reading t=%d < %d dropped", t, self._last_t
            )
            return None
        self._last_t = t
        if self._first_t is None:
            self._first_t = t

        cfg = self.config
        if not cfg.in_range(reading.distance_cm):
            self._last_out_of_range_t = t
            return None
        if t - self._first_t < cfg.hold_ms:
            return None
        if (
            self._last_out_of_range_t is not None
            and self._last_out_of_range_t >= t - cfg.hold_ms
        ):
            return None
        if (
            self._last_confirm_t is not None
            and t - self._last_confirm_t < cfg.debounce_ms
        ):
            return None
        self._last_confirm_t = t
        return t


def evaluate_dispense_gate(
    readings: Iterable[DistanceReading], config: DispenseConfig
) -> list[int]:
    """Run the gate over a whole stream; returns confirmation timestamps."""
    gate = DispenseGate(config)
    out = []
    for r in readings:
        t = gate.push(r)
        if t is not None:
            out.append(t)
    return out


def load_distance_script(path) -> list[tuple[int, float]]:
    """Read a sensor script: JSON lines of {"t_ms": int, "cm": number}."""
    import json
    from pathlib import Path

    script = []
    for i, line in enumerate(Path(path).read_text().splitlines()):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
            script.append((int(rec["t_ms"]), float(rec["cm"])))
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise ConfigurationError(f"{path}:{i + 1}: bad script line: {exc}") from exc
    return script


def scripted_sensor(
    script: list[tuple[int, float]], paced: bool = False
) -> Iterator[DistanceReading]:
    """Replay a (t_ms, cm) script as a reading stream, in timestamp order.

    With ``paced`` the generator sleeps to approximate the script timing
    (for live demos); otherwise it replays as fast as possible.
    """
    times = [t for t, _ in script]
    if any(b <= a for a, b in zip(times, times[1:])):
        raise ConfigurationError("sensor script timestamps must be strictly increasing")

    def _gen() -> Iterator[DistanceReading]:
        prev_t: int | None = None
        for t, cm in script:
            if paced and prev_t is not None:
                time.sleep((t - prev_t) / 1000.0)
            prev_t = t
            yield DistanceReading(t_ms=t, distance_cm=float(cm))

    return _gen()


class SerialDistanceReader:
    """Line reader for the ultrasonic sensor's serial feed.

    Reads newline-delimited ASCII centimeter values from a device path (baud
    configured via termios when the path is a tty) or any binary file-like.
    Unparseable lines are discarded with a diagnostic; timestamps are assigned
    at receive time from the supplied clock.
    """

    def __init__(
        self,
        port: str | IO[bytes],
        baud: int = 9600,
        clock_ms=None,
    ):
        self._clock_ms = clock_ms or (lambda: int(time.monotonic() * 1000))
        if isinstance(port, str):
            fd = os.open(port, os.O_RDONLY | os.O_NOCTTY)
            self._stream: IO[bytes] = os.fdopen(fd, "rb", buffering=0)
            self._configure_tty(fd, baud)
        else:
            self._stream = port

    @staticmethod
    def _configure_tty(fd: int, baud: int) -> None:
        if not os.isatty(fd):
            return
        import termios

        speed = getattr(termios, f"B{baud}", None)
        if speed is None:
            raise ConfigurationError(f"unsupported baud rate {baud}")
        attrs = termios.tcgetattr(fd)
        attrs[0] = termios.IGNBRK  # iflag: raw input
        attrs[1] = 0  # oflag
        attrs[2] = termios.CS8 | termios.CREAD | termios.CLOCAL  # cflag: 8N1
        attrs[3] = 0  # lflag
        attrs[4] = speed
        attrs[5] = speed
        termios.tcsetattr(fd, termios.TCSANOW, attrs)

    def readings(self) -> Iterator[DistanceReading]:
        buf = b""
        while True:
            chunk = self._stream.read(64)
            if not chunk:
                if buf:
                    yield from self._emit(buf)
                return
            buf += chunk
            while b"\n" in buf:
                line, buf = buf.split(b"\n", 1)
                yield from self._emit(line + b"\n")

    def _emit(self, line: bytes) -> Iterator[DistanceReading]:
        try:
            cm = parse_distance_line(line)
        except ParseError as exc:
            logger.warning("discarding sensor line: %s", exc)
            return
        yield DistanceReading(t_ms=self._clock_ms(), distance_cm=float(cm))

    def close(self) -> None:
        self._stream.close()
