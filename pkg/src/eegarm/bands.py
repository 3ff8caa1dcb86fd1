"""Frequency bands and electrode channels shared by synthesis and DSP."""

from __future__ import annotations

import enum
import math


CHANNELS = ("Fp1", "Fp2", "T3", "T4")
N_CHANNELS = len(CHANNELS)


class Band(enum.Enum):
    DELTA = ("delta", 1.0, 4.0, 2.5)
    THETA = ("theta", 4.0, 8.0, 6.0)
    ALPHA = ("alpha", 8.0, 13.0, 10.0)
    BETA = ("beta", 13.0, 30.0, 20.0)
    GAMMA = ("gamma", 30.0, math.inf, 40.0)

    def __init__(self, key: str, lo: float, hi: float, center: float):
        self.key = key
        self.lo = lo
        # gamma is open-ended; callers clip to Nyquist
        self.hi = hi
        self.center = center

    def edges(self, rate: float) -> tuple[float, float]:
        return self.lo, min(self.hi, rate / 2.0)

    @classmethod
    def parse(cls, name: str) -> "Band":
        for band in cls:
            if band.key == name.strip().lower():
                return band
        raise ValueError(f"unknown band {name!r}")


BANDS = tuple(Band)
N_BANDS = len(BANDS)
N_FEATURES = N_BANDS * N_CHANNELS

# alpha sub-bands, debug output only
ALPHA_SUBBANDS = {"alpha1": (8.0, 10.0), "alpha2": (11.0, 13.0)}

FEATURE_NAMES = tuple(f"{ch}_{band.key}" for ch in CHANNELS for band in BANDS)
