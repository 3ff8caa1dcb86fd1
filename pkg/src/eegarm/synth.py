"""Seedable 4-channel synthetic EEG conditioned on a brain state.

Each channel is a sum of one sinusoid per band at the band's centre
frequency, plus mains interference and Gaussian white noise. Randomness
comes from numpy's PCG64 bit generator, seeded through ``SeedSequence``:
child 0 draws the per-(band, channel) phases, child 1 the white noise.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

from eegarm.bands import BANDS, N_CHANNELS, Band
from eegarm.errors import ConfigError
from eegarm.labels import BrainState

DEFAULT_RATE = 200.0


@dataclass(frozen=True)
class BandProfile:
    """Per-band, per-channel sinusoid amplitudes in microvolts."""

    amplitudes: Mapping[Band, tuple[float, ...]]

    def __post_init__(self):
        amps = {}
        for band in BANDS:
            if band not in self.amplitudes:
                raise ConfigError(f"band profile missing {band.key}")
            row = tuple(float(a) for a in self.amplitudes[band])
            if len(row) != N_CHANNELS:
                raise ConfigError(f"{band.key}: expected {N_CHANNELS} channel amplitudes, got {len(row)}")
            if any(not np.isfinite(a) or a < 0 for a in row):
                raise ConfigError(f"{band.key}: amplitudes must be finite and >= 0")
            amps[band] = row
        if set(self.amplitudes) - set(BANDS):
            raise ConfigError("band profile has unknown bands")
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def uniform(cls, **per_band: float) -> "BandProfile":
        """``BandProfile.uniform(alpha=10)``; unnamed bands are zero."""
        return cls({b: (float(per_band.get(b.key, 0.0)),) * N_CHANNELS for b in BANDS})

    @classmethod
    def from_dict(cls, data: Mapping) -> "BandProfile":
        amps = {}
        for b in BANDS:
            v = data.get(b.key, 0.0)
            amps[b] = tuple(v) if isinstance(v, (list, tuple)) else (float(v),) * N_CHANNELS
        unknown = set(data) - {b.key for b in BANDS}
        if unknown:
            raise ConfigError(f"unknown bands in profile: {sorted(unknown)}")
        return cls(amps)

    def to_dict(self) -> dict:
        return {b.key: list(self.amplitudes[b]) for b in BANDS}

    def matrix(self) -> np.ndarray:
        """(bands, channels) amplitude matrix."""
        return np.array([self.amplitudes[b] for b in BANDS])


@dataclass(frozen=True)
class NoiseSpec:
    mains_freq: float = 60.0
    mains_amp: float = 10.0
    white_sigma: float = 2.0

    def __post_init__(self):
        if self.mains_freq not in (50, 60):
            raise ConfigError(f"mains_freq must be 50 or 60, got {self.mains_freq}")
        if self.mains_amp < 0 or self.white_sigma < 0:
            raise ConfigError("noise amplitudes must be >= 0")

    @classmethod
    def quiet(cls, mains_freq: float = 60.0) -> "NoiseSpec":
        return cls(mains_freq=mains_freq, mains_amp=0.0, white_sigma=0.0)


def default_profiles() -> dict[BrainState, BandProfile]:
    # relaxation raises alpha (frontal sites most), concentration raises beta/gamma,
    # idle is low-amplitude broadband
    return {
        BrainState.RELAXED_HANDSHAKE: BandProfile({
            Band.DELTA: (3.0, 3.0, 3.0, 3.0),
            Band.THETA: (4.0, 4.0, 4.0, 4.0),
            Band.ALPHA: (16.0, 16.0, 12.0, 12.0),
            Band.BETA: (3.0, 3.0, 3.0, 3.0),
            Band.GAMMA: (1.5, 1.5, 1.5, 1.5),
        }),
        BrainState.CONCENTRATED_CUP: BandProfile({
            Band.DELTA: (3.0, 3.0, 3.0, 3.0),
            Band.THETA: (3.0, 3.0, 3.0, 3.0),
            Band.ALPHA: (4.0, 4.0, 4.0, 4.0),
            Band.BETA: (12.0, 12.0, 10.0, 10.0),
            Band.GAMMA: (8.0, 8.0, 7.0, 7.0),
        }),
        BrainState.IDLE: BandProfile.uniform(delta=3.0, theta=3.0, alpha=3.0, beta=3.0, gamma=3.0),
    }


@dataclass(frozen=True)
class RawChunk:
    """Block of raw samples, shape (n, 4), in microvolts."""

    samples: np.ndarray
    start_index: int
    rate: float = DEFAULT_RATE
    truth: BrainState | None = None

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=float)
        if samples.ndim != 2 or samples.shape[1] != N_CHANNELS:
            raise ValueError(f"samples must be (n, {N_CHANNELS}), got {samples.shape}")
        if self.rate <= 0:
            raise ValueError("rate must be positive")
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)

    def __len__(self) -> int:
        return self.samples.shape[0]

    @property
    def end_index(self) -> int:
        return self.start_index + len(self)

    @property
    def duration(self) -> float:
        return len(self) / self.rate

    def with_samples(self, samples: np.ndarray) -> "RawChunk":
        return RawChunk(samples, self.start_index, self.rate, self.truth)


class SignalGenerator:
    """Stateful sample source. Not shared between threads."""

    def __init__(self, profiles: Mapping[BrainState, BandProfile], noise: NoiseSpec,
                 seed: int, rate: float = DEFAULT_RATE):
        missing = [s.value for s in BrainState if s not in profiles]
        if missing:
            raise ConfigError(f"missing band profile for states: {missing}")
        if rate <= 0:
            raise ConfigError("rate must be positive")
        if max(b.center for b in BANDS) >= rate / 2:
            raise ConfigError(f"rate {rate} Hz cannot represent band centres")
        self.profiles = dict(profiles)
        self.noise = noise
        self.seed = int(seed)
        self.rate = float(rate)
        phase_seq, noise_seq = np.random.SeedSequence(self.seed).spawn(2)
        self._phases = np.random.Generator(np.random.PCG64(phase_seq)).uniform(
            0.0, 2 * np.pi, size=(len(BANDS), N_CHANNELS))
        self._noise_rng = np.random.Generator(np.random.PCG64(noise_seq))
        self._freqs = np.array([b.center for b in BANDS])
        self._index = 0
        self.state = BrainState.IDLE

    @property
    def sample_index(self) -> int:
        return self._index

    def set_state(self, state: BrainState) -> None:
        self.state = BrainState(state)

    def next_chunk(self, n: int) -> RawChunk:
        if n < 1:
            raise ValueError("n must be >= 1")
        t = (self._index + np.arange(n)) / self.rate
        amps = self.profiles[self.state].matrix()                      # (B, C)
        arg = 2 * np.pi * self._freqs[None, :, None] * t[:, None, None] + self._phases[None]
        x = np.einsum("tbc,bc->tc", np.sin(arg), amps)
        if self.noise.mains_amp:
            x += self.noise.mains_amp * np.sin(2 * np.pi * self.noise.mains_freq * t)[:, None]
        # always draw so the noise stream is independent of the sigma value
        white = self._noise_rng.standard_normal((n, N_CHANNELS))
        if self.noise.white_sigma:
            x += self.noise.white_sigma * white
        chunk = RawChunk(x, self._index, self.rate, self.state)
        self._index += n
        return chunk

    def run_script(self, script: Iterable[tuple[BrainState, float]], chunk_size: int = 200):
        """Yield chunks following ``(state, seconds)`` segments."""
        for state, seconds in script:
            self.set_state(state)
            remaining = int(round(seconds * self.rate))
            while remaining > 0:
                n = min(chunk_size, remaining)
                yield self.next_chunk(n)
                remaining -= n


def make_generator(profiles: Mapping[BrainState, BandProfile] | None = None,
                   noise: NoiseSpec | None = None, seed: int = 0,
                   rate: float = DEFAULT_RATE) -> SignalGenerator:
    return SignalGenerator(default_profiles() if profiles is None else profiles,
                           NoiseSpec() if noise is None else noise, seed, rate)


def write_raw_csv(path: str | Path, chunks: Iterable[RawChunk]) -> int:
    """Dump chunks as ``index,ch1..ch4,truth`` rows. Returns the row count."""
    rows = 0
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["index", "ch1", "ch2", "ch3", "ch4", "truth"])
        for chunk in chunks:
            truth = chunk.truth.value if chunk.truth else ""
            for k, row in enumerate(chunk.samples):
                w.writerow([chunk.start_index + k, *(f"{v:.9g}" for v in row), truth])
                rows += 1
    return rows
