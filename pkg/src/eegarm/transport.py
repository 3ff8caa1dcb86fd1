"""UDP feature-frame wire format and the one-byte serial action protocol.

Datagram payload is ASCII ``i,v1,...,v20``: a non-negative decimal frame
index followed by twenty values printed with ``format(v, "#.9g")`` (nine
significant digits, trailing zeros kept). The frame index is the only
ordering and loss signal; there is no retransmission.
"""

from __future__ import annotations

import logging
import math
import queue
import re
import socket
import threading
import time
from dataclasses import dataclass, field
from typing import Callable, Iterable, Iterator

import numpy as np

from eegarm.bands import N_FEATURES
from eegarm.clock import WallClock
from eegarm.errors import EncodingError, FrameFormatError, ProtocolError, TransportError
from eegarm.labels import ActionLabel

log = logging.getLogger(__name__)

MAX_DATAGRAM = 1024
SIG_DIGITS = 9
_INDEX_RE = re.compile(rb"[0-9]+\Z")


@dataclass(frozen=True)
class FeatureFrame:
    index: int
    values: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))

    @classmethod
    def from_vector(cls, fv) -> "FeatureFrame":
        return cls(fv.index, tuple(fv.values))


def format_value(v: float) -> str:
    return format(v, f"#.{SIG_DIGITS}g")


def encode_frame(frame: FeatureFrame) -> bytes:
    if not isinstance(frame.index, (int, np.integer)) or frame.index < 0:
        raise EncodingError(f"frame index must be a non-negative integer, got {frame.index!r}")
    if len(frame.values) != N_FEATURES:
        raise EncodingError(f"frame needs {N_FEATURES} values, got {len(frame.values)}")
    if not all(math.isfinite(v) for v in frame.values):
        raise EncodingError("frame contains non-finite values")
    payload = ",".join([str(int(frame.index)), *map(format_value, frame.values)]).encode("ascii")
    if len(payload) > MAX_DATAGRAM:
        raise EncodingError(f"encoded frame is {len(payload)} bytes (> {MAX_DATAGRAM})")
    return payload


def decode_frame(data: bytes) -> FeatureFrame:
    if len(data) > MAX_DATAGRAM:
        raise FrameFormatError(f"datagram of {len(data)} bytes exceeds {MAX_DATAGRAM}")
    fields = data.split(b",")
    if len(fields) != N_FEATURES + 1:
        raise FrameFormatError(f"expected {N_FEATURES + 1} fields, got {len(fields)}")
    if not _INDEX_RE.match(fields[0]):
        raise FrameFormatError(f"bad frame index {fields[0][:32]!r}")
    try:
        values = tuple(float(f) for f in fields[1:])
    except ValueError as exc:
        raise FrameFormatError(f"unparseable value: {exc}") from None
    if not all(math.isfinite(v) for v in values):
        raise FrameFormatError("non-finite value in frame")
    return FeatureFrame(int(fields[0]), values)


# -- UDP ---------------------------------------------------------------------

@dataclass
class LossStats:
    """Receive-side accounting.

    ``gaps`` counts indices skipped over and not (yet) seen; a late frame
    that fills a hole decrements it and counts as a reorder.
    """

    received: int = 0
    gaps: int = 0
    reorders: int = 0
    duplicates: int = 0
    format_errors: int = 0
    highest: int = -1
    _missing: set = field(default_factory=set, repr=False)

    def observe(self, index: int) -> str:
        self.received += 1
        if index > self.highest:
            skipped = range(self.highest + 1, index)
            self.gaps += len(skipped)
            self._missing.update(skipped)
            self.highest = index
            return "in-order" if not skipped else "gap"
        if index in self._missing:
            self._missing.discard(index)
            self.gaps -= 1
            self.reorders += 1
            return "reorder"
        self.duplicates += 1
        return "duplicate"

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in
                ("received", "gaps", "reorders", "duplicates", "format_errors", "highest")}


@dataclass
class ProducerStats:
    sent: int = 0
    dropped_local: int = 0     # would-block or injected drops; never retried
    max_lag: float = 0.0       # worst lateness against the target schedule, seconds


def stream_producer(frames: Iterable, endpoint: tuple[str, int], rate: float | None,
                    clock=None, drop: Callable[[int], bool] | None = None,
                    stop: threading.Event | None = None, sock: socket.socket | None = None,
                    on_send: Callable[[object], None] | None = None) -> ProducerStats:
    """Send frames as datagrams at ``rate`` frames per (clock) second.

    ``frames`` may hold :class:`FeatureFrame` or anything with ``index``
    and ``values``. The socket is non-blocking; a send that would block is
    dropped and counted rather than waited on. ``drop`` is a fault-injection
    hook: frames whose index it accepts are skipped. ``rate=None`` sends as
    fast as the loop runs.
    """
    clock = clock or WallClock()
    own = sock is None
    try:
        if own:
            sock = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
        sock.setblocking(False)
    except OSError as exc:
        raise TransportError(f"cannot open UDP socket: {exc}") from exc
    stats = ProducerStats()
    period = None if not rate else 1.0 / rate
    t0 = clock.now()
    try:
        for k, item in enumerate(frames):
            if stop is not None and stop.is_set():
                break
            if period is not None:
                due = t0 + k * period
                lag = clock.now() - due
                if lag < 0:
                    clock.sleep(-lag)
                else:
                    stats.max_lag = max(stats.max_lag, lag)
            frame = item if isinstance(item, FeatureFrame) else FeatureFrame.from_vector(item)
            if on_send is not None:
                on_send(item)
            if drop is not None and drop(frame.index):
                stats.dropped_local += 1
                continue
            try:
                sock.sendto(encode_frame(frame), endpoint)
                stats.sent += 1
            except BlockingIOError:
                stats.dropped_local += 1
            except OSError as exc:
                raise TransportError(f"send to {endpoint} failed: {exc}") from exc
    finally:
        if own:
            sock.close()
    return stats


class FrameConsumer:
    """Bound UDP receiver yielding decoded frames in arrival order."""

    def __init__(self, host: str = "127.0.0.1", port: int = 0, timeout: float = 0.05,
                 rcvbuf: int = 1 << 20):
        try:
            self.sock = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
            self.sock.setsockopt(socket.SOL_SOCKET, socket.SO_RCVBUF, rcvbuf)
            self.sock.bind((host, port))
        except OSError as exc:
            raise TransportError(f"cannot bind UDP {host}:{port}: {exc}") from exc
        self.sock.settimeout(timeout)
        self.stats = LossStats()

    @property
    def endpoint(self) -> tuple[str, int]:
        return self.sock.getsockname()

    def receive(self) -> FeatureFrame | None:
        """One frame, or None on timeout or a malformed datagram."""
        try:
            data = self.sock.recv(MAX_DATAGRAM + 1)
        except socket.timeout:
            return None
        try:
            frame = decode_frame(data)
        except FrameFormatError as exc:
            self.stats.format_errors += 1
            log.debug("dropped malformed datagram: %s", exc)
            return None
        self.stats.observe(frame.index)
        return frame

    def frames(self, stop: threading.Event | None = None, idle_timeout: float | None = None,
               heartbeat: bool = False) -> Iterator[FeatureFrame | None]:
        """Iterate received frames until ``stop`` is set or nothing arrives for
        ``idle_timeout`` real seconds. With ``heartbeat`` a ``None`` is yielded
        on every receive timeout so callers can run periodic work."""
        last = time.monotonic()
        while stop is None or not stop.is_set():
            frame = self.receive()
            if frame is not None:
                last = time.monotonic()
                yield frame
            else:
                if idle_timeout is not None and time.monotonic() - last > idle_timeout:
                    return
                if heartbeat:
                    yield None

    def close(self) -> None:
        self.sock.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def stream_consumer(endpoint: tuple[str, int], stop: threading.Event | None = None,
                    idle_timeout: float = 1.0) -> tuple[list[FeatureFrame], LossStats]:
    """Receive until idle; convenience wrapper over :class:`FrameConsumer`."""
    with FrameConsumer(*endpoint) as rx:
        frames = list(rx.frames(stop=stop, idle_timeout=idle_timeout))
        return frames, rx.stats


# -- serial action bytes ------------------------------------------------------

_ACTION_BYTES = {label: str(int(label)).encode("ascii") for label in ActionLabel}
_BYTE_ACTIONS = {v: k for k, v in _ACTION_BYTES.items()}


def action_to_byte(label: ActionLabel | int) -> bytes:
    return _ACTION_BYTES[ActionLabel(label)]


def byte_to_action(b: bytes) -> ActionLabel:
    try:
        return _BYTE_ACTIONS[bytes(b)]
    except KeyError:
        raise ProtocolError(f"unknown action byte {bytes(b)!r}") from None


class SerialChannel:
    """In-process ordered byte pipe with a fixed per-byte latency.

    Stands in for the serial link to the arm controller. Each written byte
    becomes readable ``latency`` clock-seconds after the write.
    """

    def __init__(self, clock=None, latency: float = 0.0):
        self.clock = clock or WallClock()
        self.latency = float(latency)
        self._q: queue.Queue[tuple[float, bytes]] = queue.Queue()
        self._head: tuple[float, bytes] | None = None
        self.protocol_errors = 0
        self.bytes_written = 0
        self.write_log: list[tuple[float, bytes]] = []

    def write(self, data: bytes, at: float | None = None) -> None:
        """Queue bytes as if written at clock time ``at`` (default: now).

        Scheduled writes must be issued in time order.
        """
        t = self.clock.now() if at is None else at
        for b in data:
            byte = bytes([b])
            self._q.put((t + self.latency, byte))
            self.write_log.append((t, byte))
            self.bytes_written += 1

    def read(self, timeout: float | None = 0.0) -> bytes | None:
        """Next byte whose delivery time has passed, else None.

        ``timeout`` is in real seconds; 0 polls.
        """
        if self._head is None:
            try:
                self._head = self._q.get(timeout=timeout) if timeout else self._q.get_nowait()
            except queue.Empty:
                return None
        due, byte = self._head
        if due > self.clock.now():
            return None
        self._head = None
        return byte


def send_action(channel: SerialChannel, label: ActionLabel | int, at: float | None = None) -> None:
    channel.write(action_to_byte(label), at)


def recv_action(channel: SerialChannel, timeout: float | None = 0.0) -> ActionLabel | None:
    """Read bytes until a valid action arrives; unknown bytes are counted and skipped."""
    while True:
        b = channel.read(timeout)
        if b is None:
            return None
        try:
            return byte_to_action(b)
        except ProtocolError:
            channel.protocol_errors += 1
            log.warning("ignored unknown action byte %r", b)
