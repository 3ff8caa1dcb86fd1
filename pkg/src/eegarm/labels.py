"""Action labels and the synthetic brain states that drive them."""

from __future__ import annotations

import enum


class ActionLabel(enum.IntEnum):
    """Three-way action class. Integer values are the wire/CSV labels."""

    PICK_UP_CUP = 0
    SHAKE_HANDS = 1
    STAY_IDLE = 2

    @property
    def display_name(self) -> str:
        return _DISPLAY[self]

    @property
    def file_stem(self) -> str:
        return _FILE_STEM[self]


_DISPLAY = {
    ActionLabel.PICK_UP_CUP: "pickUpCup",
    ActionLabel.SHAKE_HANDS: "shakeHands",
    ActionLabel.STAY_IDLE: "stayStationary",
}

_FILE_STEM = {
    ActionLabel.PICK_UP_CUP: "pickupcup",
    ActionLabel.SHAKE_HANDS: "shakehands",
    ActionLabel.STAY_IDLE: "stayidle",
}


class BrainState(enum.Enum):
    RELAXED_HANDSHAKE = "relaxed_handshake"
    CONCENTRATED_CUP = "concentrated_cup"
    IDLE = "idle"

    @property
    def action(self) -> ActionLabel:
        return _STATE_TO_ACTION[self]

    @classmethod
    def from_action(cls, label: ActionLabel | int) -> "BrainState":
        return _ACTION_TO_STATE[ActionLabel(label)]

    @classmethod
    def parse(cls, text: str) -> "BrainState":
        """Accept a state value, a state name, or an action display name."""
        key = text.strip().lower()
        for state in cls:
            if key in (state.value, state.name.lower(), state.action.display_name.lower(),
                       state.action.file_stem):
                return state
        raise ValueError(f"unknown brain state {text!r}")


_STATE_TO_ACTION = {
    BrainState.RELAXED_HANDSHAKE: ActionLabel.SHAKE_HANDS,
    BrainState.CONCENTRATED_CUP: ActionLabel.PICK_UP_CUP,
    BrainState.IDLE: ActionLabel.STAY_IDLE,
}
_ACTION_TO_STATE = {v: k for k, v in _STATE_TO_ACTION.items()}
