"""Simulated 4-joint prosthetic arm driven by serial action bytes.

A new label is only read once the running action is at least a third of
the way through; this keeps the servos from flipping back and forth on
noisy predictions.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from eegarm.labels import ActionLabel
from eegarm.transport import SerialChannel, recv_action

JOINTS = ("shoulder", "elbow", "wrist", "grip")
JOINT_MIN, JOINT_MAX = 0.0, 180.0
DEBOUNCE = 1.0 / 3.0
DEFAULT_DURATION = 3.0
DEFAULT_TICK_RATE = 100.0

NEUTRAL = (90.0, 90.0, 90.0, 20.0)


@dataclass(frozen=True)
class Trajectory:
    keyframes: tuple[tuple[float, tuple[float, ...]], ...]

    def __post_init__(self):
        kf = tuple((float(f), tuple(float(a) for a in pose)) for f, pose in self.keyframes)
        fr = [f for f, _ in kf]
        if len(kf) < 2 or fr[0] != 0.0 or fr[-1] != 1.0 or any(b <= a for a, b in zip(fr, fr[1:])):
            raise ValueError("keyframe fractions must rise strictly from 0 to 1")
        for _, pose in kf:
            if len(pose) != len(JOINTS) or not all(JOINT_MIN <= a <= JOINT_MAX for a in pose):
                raise ValueError(f"pose {pose} outside joint limits")
        object.__setattr__(self, "keyframes", kf)

    def pose_at(self, progress: float, start: Sequence[float] | None = None) -> tuple[float, ...]:
        """Linear interpolation between the keyframes around ``progress``.

        ``start`` replaces the first keyframe's pose, so an action that
        interrupts another blends from wherever the arm is.
        """
        fr = np.array([f for f, _ in self.keyframes])
        poses = np.array([p for _, p in self.keyframes])
        if start is not None:
            poses[0] = start
        p = min(max(progress, 0.0), 1.0)
        k = min(int(np.searchsorted(fr, p, side="right")) - 1, len(fr) - 2)
        w = (p - fr[k]) / (fr[k + 1] - fr[k])
        return tuple(float(a) for a in (1 - w) * poses[k] + w * poses[k + 1])


TRAJECTORIES = {
    ActionLabel.STAY_IDLE: Trajectory(((0.0, NEUTRAL), (1.0, NEUTRAL))),
    # reach forward, then pump the elbow
    ActionLabel.SHAKE_HANDS: Trajectory((
        (0.0, NEUTRAL),
        (0.25, (90.0, 60.0, 90.0, 70.0)),
        (0.4, (90.0, 75.0, 90.0, 70.0)),
        (0.55, (90.0, 55.0, 90.0, 70.0)),
        (0.7, (90.0, 75.0, 90.0, 70.0)),
        (0.85, (90.0, 55.0, 90.0, 70.0)),
        (1.0, (90.0, 60.0, 90.0, 70.0)),
    )),
    # open and reach, close the grip, raise the elbow
    ActionLabel.PICK_UP_CUP: Trajectory((
        (0.0, NEUTRAL),
        (0.3, (110.0, 60.0, 90.0, 5.0)),
        (0.5, (110.0, 60.0, 90.0, 120.0)),
        (0.8, (110.0, 130.0, 90.0, 120.0)),
        (1.0, (110.0, 130.0, 90.0, 120.0)),
    )),
}


@dataclass(frozen=True)
class ActuatorState:
    current: ActionLabel = ActionLabel.STAY_IDLE
    progress: float = 1.0
    joints: tuple[float, ...] = NEUTRAL
    action_duration: float = DEFAULT_DURATION


@dataclass(frozen=True)
class Event:
    t: float
    kind: str               # accept | reject | transition | sample
    label: int
    progress: float
    joints: tuple[float, ...]

    def to_json(self) -> str:
        return json.dumps({"t": round(self.t, 6), "kind": self.kind, "label": self.label,
                           "progress": round(self.progress, 9),
                           "joints": [round(a, 6) for a in self.joints]})

    @classmethod
    def from_json(cls, line: str) -> "Event":
        d = json.loads(line)
        return cls(d["t"], d["kind"], d["label"], d["progress"], tuple(d["joints"]))


@dataclass
class ProstheticArm:
    """Starts at rest: idle, progress 1, neutral pose."""

    action_duration: float = DEFAULT_DURATION
    trajectories: dict = field(default_factory=lambda: dict(TRAJECTORIES))
    state: ActuatorState = None
    events: list[Event] = field(default_factory=list)

    def __post_init__(self):
        if self.action_duration <= 0:
            raise ValueError("action_duration must be positive")
        if self.state is None:
            self.state = ActuatorState(action_duration=self.action_duration)
        self._start_pose = self.state.joints

    def _log(self, t: float, kind: str, label) -> None:
        s = self.state
        self.events.append(Event(t, kind, int(label), s.progress, s.joints))

    def submit_label(self, label: ActionLabel | int, now: float) -> bool:
        label = ActionLabel(label)
        s = self.state
        if s.progress < DEBOUNCE:
            self._log(now, "reject", label)
            return False
        self._log(now, "accept", label)
        if label != s.current:
            self._start_pose = s.joints
            self.state = ActuatorState(label, 0.0, s.joints, s.action_duration)
            self._log(now, "transition", label)
        return True

    def tick(self, dt: float) -> ActuatorState:
        if dt <= 0:
            raise ValueError("dt must be positive")
        s = self.state
        progress = min(1.0, s.progress + dt / s.action_duration)
        joints = self.trajectories[s.current].pose_at(progress, self._start_pose)
        self.state = ActuatorState(s.current, progress, joints, s.action_duration)
        return self.state

    def sample(self, now: float) -> None:
        self._log(now, "sample", self.state.current)


def run_actuator(channel: SerialChannel, clock, duration: float,
                 arm: ProstheticArm | None = None, tick_rate: float = DEFAULT_TICK_RATE,
                 sample_every: int = 10, stop: threading.Event | None = None) -> list[Event]:
    """Consume action bytes and tick the arm at ``tick_rate`` Hz for ``duration`` clock-seconds."""
    arm = arm or ProstheticArm()
    dt = 1.0 / tick_rate
    t0 = clock.now()
    n_ticks = int(round(duration * tick_rate))
    for k in range(n_ticks):
        if stop is not None and stop.is_set():
            break
        clock.sleep_until(t0 + k * dt)
        now = clock.now()
        while (label := recv_action(channel)) is not None:
            arm.submit_label(label, now)
        arm.tick(dt)
        if sample_every and k % sample_every == 0:
            arm.sample(now)
    return arm.events
