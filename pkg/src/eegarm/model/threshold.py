"""Relaxation/concentration threshold baseline."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from eegarm import dsp
from eegarm.labels import BrainState
from eegarm.synth import BandProfile, NoiseSpec, SignalGenerator

SWEEP_THRESHOLDS = (0.6, 0.7, 0.8, 0.9)


@dataclass(frozen=True)
class ThresholdConfig:
    metric_threshold: float = 0.8

    def __post_init__(self):
        if not 0.0 <= self.metric_threshold <= 1.0:
            raise ValueError("metric_threshold must lie in [0, 1]")


def threshold_classify(metrics: tuple[float, float], cfg: ThresholdConfig) -> BrainState:
    """Relaxed -> handshake, concentrated -> cup, otherwise (or both) idle."""
    relaxation, concentration = metrics
    relaxed = relaxation >= cfg.metric_threshold
    focused = concentration >= cfg.metric_threshold
    if relaxed and not focused:
        return BrainState.RELAXED_HANDSHAKE
    if focused and not relaxed:
        return BrainState.CONCENTRATED_CUP
    return BrainState.IDLE


def attempt_metrics(profiles: Mapping[BrainState, BandProfile], noise: NoiseSpec, seed: int,
                    state: BrainState, seconds: float = 2.0, settle: float = 2.0) -> tuple[float, float]:
    """Mean focus metrics over one attempt of ``seconds`` spent in ``state``.

    The generator spends ``settle`` seconds in the state first so the
    cleaning filter and the FFT window see only that state.
    """
    gen = SignalGenerator(profiles, noise, seed)
    gen.set_state(state)
    n = int(round((settle + seconds) * gen.rate))
    frames = list(dsp.iter_features([gen.next_chunk(n)], noise.mains_freq))
    keep = frames[-int(round(seconds * gen.rate / dsp.HOP)):]
    m = np.array([dsp.focus_metrics(f) for f in keep])
    return float(m[:, 0].mean()), float(m[:, 1].mean())


def threshold_sweep(profiles: Mapping[BrainState, BandProfile], noise: NoiseSpec, seed: int = 0,
                    thresholds: Sequence[float] = SWEEP_THRESHOLDS, attempts: int = 20) -> list[dict]:
    """Successful predictions out of ``attempts`` per threshold, for handshake and cup intents."""
    targets = (BrainState.RELAXED_HANDSHAKE, BrainState.CONCENTRATED_CUP)
    metrics = {s: [attempt_metrics(profiles, noise, seed * 1000 + k, s) for k in range(attempts)]
               for s in targets}
    rows = []
    for th in thresholds:
        cfg = ThresholdConfig(th)
        hits = {s: sum(threshold_classify(m, cfg) is s for m in metrics[s]) for s in targets}
        rows.append({"threshold": th, "handshake_successes": hits[BrainState.RELAXED_HANDSHAKE],
                     "cup_successes": hits[BrainState.CONCENTRATED_CUP], "attempts": attempts})
    return rows
