"""Clocks measured in simulated seconds.

The live harness runs at ``speed`` times real time so a five-minute
session can be replayed in seconds. Tests use :class:`ManualClock`.
"""

from __future__ import annotations

import threading
import time


class WallClock:
    def __init__(self, speed: float = 1.0):
        if speed <= 0:
            raise ValueError("speed must be positive")
        self.speed = float(speed)
        self._origin = time.monotonic()

    def now(self) -> float:
        return (time.monotonic() - self._origin) * self.speed

    def sleep(self, seconds: float) -> None:
        if seconds > 0:
            time.sleep(seconds / self.speed)

    def sleep_until(self, t: float) -> None:
        self.sleep(t - self.now())


class ManualClock:
    """Deterministic clock; ``sleep`` simply advances time."""

    def __init__(self, start: float = 0.0):
        self._t = float(start)
        self._lock = threading.Lock()

    def now(self) -> float:
        with self._lock:
            return self._t

    def advance(self, seconds: float) -> None:
        with self._lock:
            self._t += seconds

    def sleep(self, seconds: float) -> None:
        if seconds > 0:
            self.advance(seconds)

    def sleep_until(self, t: float) -> None:
        self.sleep(t - self.now())
