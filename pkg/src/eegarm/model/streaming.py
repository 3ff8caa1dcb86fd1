"""Online classification of a live frame stream at a fixed label cadence."""

from __future__ import annotations

import collections
import logging
from dataclasses import dataclass
from typing import Iterable, Iterator

import numpy as np

from eegarm.labels import ActionLabel
from eegarm.model.training import Classifier

log = logging.getLogger(__name__)

DEFAULT_CADENCE = 2.0


@dataclass(frozen=True)
class Emission:
    time: float
    label: ActionLabel
    first_index: int
    last_index: int

    def to_dict(self) -> dict:
        return {"t": self.time, "label": int(self.label), "first_index": self.first_index,
                "last_index": self.last_index}


class StreamClassifier:
    """Rolling window over the newest ``win_size`` frames, classified every ``cadence`` seconds.

    Nothing is emitted until the buffer first fills. If no frame has arrived
    for ``stall_after`` seconds (default: two window durations) a due
    emission is replaced by a stall warning.
    """

    def __init__(self, model: Classifier, cadence: float = DEFAULT_CADENCE,
                 frame_rate: float = 40.0, stall_after: float | None = None):
        if model.standardizer is None:
            raise ValueError("model needs a standardizer for live use")
        self.model = model
        self.cadence = cadence
        self.win_size = model.win_size
        self.stall_after = 2 * self.win_size / frame_rate if stall_after is None else stall_after
        self._buf: collections.deque = collections.deque(maxlen=self.win_size)
        self._next_due: float | None = None
        self._last_frame_t: float | None = None
        self.stalls = 0
        self.emissions: list[Emission] = []

    def push(self, frame, now: float) -> None:
        self._buf.append((frame.index, np.asarray(frame.values, dtype=float)))
        self._last_frame_t = now
        if self._next_due is None:
            self._next_due = now + self.cadence

    def poll(self, now: float) -> Emission | None:
        if self._next_due is None or now < self._next_due:
            return None
        while self._next_due <= now:
            self._next_due += self.cadence
        if len(self._buf) < self.win_size:
            return None
        if now - self._last_frame_t > self.stall_after:
            self.stalls += 1
            log.warning("frame stream stalled for %.2f s; no label emitted", now - self._last_frame_t)
            return None
        window = np.stack([v for _, v in self._buf])
        label = ActionLabel(self.model.predict_raw(window))
        em = Emission(now, label, self._buf[0][0], self._buf[-1][0])
        self.emissions.append(em)
        return em


def predict_stream(model: Classifier, frames: Iterable, clock, cadence: float = DEFAULT_CADENCE,
                   frame_rate: float = 40.0) -> Iterator[Emission]:
    """Yield an emission every ``cadence`` clock-seconds once the window is full.

    ``frames`` may contain ``None`` heartbeats (e.g. receive timeouts) so that
    the schedule advances while the stream is quiet.
    """
    sc = StreamClassifier(model, cadence, frame_rate)
    for frame in frames:
        now = clock.now()
        if frame is not None:
            sc.push(frame, now)
        em = sc.poll(now)
        if em is not None:
            yield em
