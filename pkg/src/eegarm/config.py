"""Harness configuration: one YAML file, every section optional.

Example (all values shown are the defaults)::

    seed: 7
    eeg:
      rate: 200.0
      chunk: 20                  # samples per generator chunk
      warmup: 2.0                # unlabeled idle lead-in while the filters settle
      noise: {mains_freq: 60, mains_amp: 10.0, white_sigma: 2.0}
      profiles: {}               # state -> {band: amp or [Fp1, Fp2, T3, T4]}; empty = built-in
    dsp: {win_len: 256, hop: 5}
    transport: {host: 127.0.0.1, port: 0, serial_latency: 0.01}
    dataset: {win_size: 80, test_fraction: 0.2}
    model: {model_dim: 32, heads: 4, ff_dim: 64, ffnn_hidden: 64}
    training: {epochs: 50, lr: 0.001, batch_size: 16, compare_ffnn: true, window_sizes: []}
    collect: {seconds_per_action: 120.0, speed: 50.0}
    run: {duration: 300.0, segment: 30.0, script: [idle, relaxed_handshake, concentrated_cup],
          speed: 1.0, cadence: 2.0, seed_offset: 1000}
    actuator: {action_duration: 3.0, tick_rate: 100.0, sample_every: 10}

Port 0 binds an ephemeral port. ``speed`` runs the simulated clock faster
than real time.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import yaml

from eegarm.errors import ConfigError
from eegarm.labels import BrainState
from eegarm.model import FFNNConfig, TransformerConfig
from eegarm.synth import BandProfile, NoiseSpec, default_profiles


@dataclass
class NoiseSection:
    mains_freq: float = 60.0
    mains_amp: float = 10.0
    white_sigma: float = 2.0


@dataclass
class EegSection:
    rate: float = 200.0
    chunk: int = 20
    warmup: float = 2.0
    noise: NoiseSection = field(default_factory=NoiseSection)
    profiles: dict = field(default_factory=dict)


@dataclass
class DspSection:
    win_len: int = 256
    hop: int = 5


@dataclass
class TransportSection:
    host: str = "127.0.0.1"
    port: int = 0
    serial_latency: float = 0.01


@dataclass
class DatasetSection:
    win_size: int = 80
    test_fraction: float = 0.2


@dataclass
class ModelSection:
    model_dim: int = 32
    heads: int = 4
    ff_dim: int = 64
    ffnn_hidden: int = 64


@dataclass
class TrainingSection:
    epochs: int = 50
    lr: float = 1e-3
    batch_size: int = 16
    compare_ffnn: bool = True
    window_sizes: list = field(default_factory=list)


@dataclass
class CollectSection:
    seconds_per_action: float = 120.0
    speed: float = 50.0


@dataclass
class RunSection:
    duration: float = 300.0
    segment: float = 30.0
    script: list = field(default_factory=lambda: ["idle", "relaxed_handshake", "concentrated_cup"])
    speed: float = 1.0
    cadence: float = 2.0
    seed_offset: int = 1000


@dataclass
class ActuatorSection:
    action_duration: float = 3.0
    tick_rate: float = 100.0
    sample_every: int = 10


@dataclass
class Config:
    seed: int = 7
    eeg: EegSection = field(default_factory=EegSection)
    dsp: DspSection = field(default_factory=DspSection)
    transport: TransportSection = field(default_factory=TransportSection)
    dataset: DatasetSection = field(default_factory=DatasetSection)
    model: ModelSection = field(default_factory=ModelSection)
    training: TrainingSection = field(default_factory=TrainingSection)
    collect: CollectSection = field(default_factory=CollectSection)
    run: RunSection = field(default_factory=RunSection)
    actuator: ActuatorSection = field(default_factory=ActuatorSection)

    # -- derived objects --

    @property
    def frame_rate(self) -> float:
        return self.eeg.rate / self.dsp.hop

    def noise(self) -> NoiseSpec:
        n = self.eeg.noise
        return NoiseSpec(n.mains_freq, n.mains_amp, n.white_sigma)

    def profiles(self) -> dict[BrainState, BandProfile]:
        profiles = default_profiles()
        for name, spec in self.eeg.profiles.items():
            try:
                profiles[BrainState.parse(name)] = BandProfile.from_dict(spec)
            except ValueError as exc:
                raise ConfigError(f"eeg.profiles.{name}: {exc}") from None
        return profiles

    def transformer_config(self, win_size: int | None = None) -> TransformerConfig:
        m = self.model
        return TransformerConfig(win_size=win_size or self.dataset.win_size, model_dim=m.model_dim,
                                 heads=m.heads, ff_dim=m.ff_dim, seed=self.seed)

    def ffnn_config(self, win_size: int | None = None) -> FFNNConfig:
        return FFNNConfig(win_size=win_size or self.dataset.win_size, hidden=self.model.ffnn_hidden,
                          seed=self.seed)

    def run_script(self) -> list[tuple[BrainState, float]]:
        """Cycle the run script's states in ``segment``-second blocks to fill ``duration``."""
        try:
            states = [BrainState.parse(s) for s in self.run.script]
        except ValueError as exc:
            raise ConfigError(f"run.script: {exc}") from None
        if not states or self.run.segment <= 0:
            raise ConfigError("run.script must be non-empty and run.segment positive")
        out, t, k = [], 0.0, 0
        while t < self.run.duration - 1e-9:
            seg = min(self.run.segment, self.run.duration - t)
            out.append((states[k % len(states)], seg))
            t += seg
            k += 1
        return out

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def validate(self) -> "Config":
        self.noise()
        self.profiles()
        self.transformer_config()
        self.run_script()
        if self.eeg.rate <= 2 * self.eeg.noise.mains_freq:
            raise ConfigError("eeg.rate must exceed twice the mains frequency")
        if self.dataset.win_size < 4:
            raise ConfigError("dataset.win_size must be >= 4")
        if not 0 < self.dataset.test_fraction < 1:
            raise ConfigError("dataset.test_fraction must lie in (0, 1)")
        for name in ("collect", "run"):
            if getattr(self, name).speed <= 0:
                raise ConfigError(f"{name}.speed must be positive")
        return self


def _merge(obj, data: dict, path: str = ""):
    if not isinstance(data, dict):
        raise ConfigError(f"{path or 'config'}: expected a mapping")
    known = {f.name: f for f in dataclasses.fields(obj)}
    for key, value in data.items():
        if key not in known:
            raise ConfigError(f"unknown config key {path}{key}")
        current = getattr(obj, key)
        if dataclasses.is_dataclass(current):
            _merge(current, value or {}, f"{path}{key}.")
        else:
            setattr(obj, key, _coerce(current, value, f"{path}{key}"))
    return obj


def _coerce(current: Any, value: Any, where: str) -> Any:
    try:
        if isinstance(current, bool):
            if not isinstance(value, bool):
                raise TypeError
            return value
        if isinstance(current, int):
            if isinstance(value, bool) or float(value) != int(value):
                raise TypeError
            return int(value)
        if isinstance(current, float):
            return float(value)
        if isinstance(current, str):
            return str(value)
        if isinstance(current, (list, dict)) and not isinstance(value, type(current)):
            raise TypeError
    except (TypeError, ValueError):
        raise ConfigError(f"{where}: bad value {value!r}") from None
    return value


def load_config(path: str | Path | None = None, overrides: dict | None = None) -> Config:
    cfg = Config()
    if path is not None:
        try:
            data = yaml.safe_load(Path(path).read_text()) or {}
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        except yaml.YAMLError as exc:
            raise ConfigError(f"bad YAML in {path}: {exc}") from None
        _merge(cfg, data)
    if overrides:
        _merge(cfg, overrides)
    return cfg.validate()
