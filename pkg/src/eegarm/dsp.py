"""Artifact cleaning and FFT band-power features.

Raw (n, 4) sample blocks are cleaned with a mains notch plus a gentle
high-pass, cut into Hann-tapered 256-sample windows every ``hop`` samples,
and reduced to 20 band powers (5 bands x 4 channels). Each channel's five
powers are divided by their sum, so a frame is a set of per-channel band
shares.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy import signal

from eegarm.bands import ALPHA_SUBBANDS, BANDS, N_BANDS, N_CHANNELS, N_FEATURES, Band
from eegarm.errors import ConfigError, SizeError
from eegarm.labels import BrainState
from eegarm.synth import RawChunk

WIN_LEN = 256
HOP = 5
NOTCH_Q = 30.0
HIGHPASS_HZ = 0.5
HIGHPASS_ORDER = 2


# -- artifact cleaning -------------------------------------------------------

def cleaning_sos(rate: float, mains_freq: float) -> np.ndarray:
    """Second-order sections: IIR notch at ``mains_freq`` then a Butterworth high-pass."""
    if rate <= 2 * mains_freq:
        raise ConfigError(f"rate {rate} Hz too low for a {mains_freq} Hz notch")
    b, a = signal.iirnotch(mains_freq, NOTCH_Q, fs=rate)
    notch = signal.tf2sos(b, a)
    hp = signal.butter(HIGHPASS_ORDER, HIGHPASS_HZ, btype="highpass", fs=rate, output="sos")
    return np.vstack([notch, hp])


def clean_artifacts(chunk: RawChunk, mains_freq: float) -> RawChunk:
    """Filter one chunk from rest (zero initial state).

    Use :class:`ArtifactCleaner` for a stream of consecutive chunks.
    """
    sos = cleaning_sos(chunk.rate, mains_freq)
    return chunk.with_samples(signal.sosfilt(sos, chunk.samples, axis=0))


class ArtifactCleaner:
    """Stateful version of :func:`clean_artifacts` that carries filter memory across chunks."""

    def __init__(self, rate: float, mains_freq: float):
        self.sos = cleaning_sos(rate, mains_freq)
        self.rate = rate
        self._zi = np.zeros((self.sos.shape[0], 2, N_CHANNELS))

    def __call__(self, chunk: RawChunk) -> RawChunk:
        if chunk.rate != self.rate:
            raise ConfigError(f"chunk rate {chunk.rate} != cleaner rate {self.rate}")
        out, self._zi = signal.sosfilt(self.sos, chunk.samples, axis=0, zi=self._zi)
        return chunk.with_samples(out)


# -- spectra -----------------------------------------------------------------

@dataclass(frozen=True)
class Spectrum:
    bin_freqs: np.ndarray       # (window_len // 2 + 1,)
    magnitudes: np.ndarray      # (bins, channels), |X_k| of the (tapered) DFT
    window_len: int
    rate: float

    @property
    def power(self) -> np.ndarray:
        return self.magnitudes ** 2


def _taper(n: int, kind: str) -> np.ndarray:
    if kind == "hann":
        # periodic Hann
        return 0.5 - 0.5 * np.cos(2 * np.pi * np.arange(n) / n)
    if kind in ("rect", "none", None):
        return np.ones(n)
    raise ValueError(f"unknown taper {kind!r}")


def _check_window_len(n: int) -> None:
    if n < 64 or n & (n - 1):
        raise SizeError(f"window length must be a power of two >= 64, got {n}")


def spectrum(window: np.ndarray, rate: float, taper: str = "hann") -> Spectrum:
    x = np.asarray(window, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    n = x.shape[0]
    _check_window_len(n)
    if not np.all(np.isfinite(x)):
        raise ValueError("window contains non-finite samples")
    X = np.fft.rfft(x * _taper(n, taper)[:, None], axis=0)
    return Spectrum(np.fft.rfftfreq(n, 1.0 / rate), np.abs(X), n, float(rate))


def _band_mask(freqs: np.ndarray, lo: float, hi: float) -> np.ndarray:
    return (freqs >= lo) & (freqs < hi)


def band_power(spec: Spectrum, band: Band) -> np.ndarray:
    """Per-channel sum of squared magnitudes over bins with lo <= f < hi."""
    lo, hi = band.edges(spec.rate)
    return spec.power[_band_mask(spec.bin_freqs, lo, hi)].sum(axis=0)


def band_powers(spec: Spectrum) -> np.ndarray:
    """(channels, bands) matrix of :func:`band_power` values."""
    return np.stack([band_power(spec, b) for b in BANDS], axis=1)


def alpha_subband_powers(spec: Spectrum) -> dict[str, np.ndarray]:
    """Alpha-1/alpha-2 powers; debug only, never part of the feature vector."""
    return {name: spec.power[_band_mask(spec.bin_freqs, lo, hi)].sum(axis=0)
            for name, (lo, hi) in ALPHA_SUBBANDS.items()}


# -- feature frames ----------------------------------------------------------

@dataclass(frozen=True)
class FeatureVector:
    """20 band shares ordered channel-major: Fp1[d,t,a,b,g], Fp2[...], T3[...], T4[...]."""

    index: int
    values: np.ndarray
    truth: BrainState | None = None

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float).reshape(-1)
        if v.shape != (N_FEATURES,):
            raise ValueError(f"feature vector needs {N_FEATURES} values, got {v.size}")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def by_channel(self) -> np.ndarray:
        """(channels, bands) view."""
        return self.values.reshape(N_CHANNELS, N_BANDS)


def _bin_matrix(win_len: int, rate: float) -> np.ndarray:
    """(bins, bands) 0/1 matrix assigning each rfft bin to its band."""
    freqs = np.fft.rfftfreq(win_len, 1.0 / rate)
    return np.stack([_band_mask(freqs, *b.edges(rate)) for b in BANDS], axis=1).astype(float)


def normalize_band_powers(p: np.ndarray) -> np.ndarray:
    """Divide each channel's band powers by their sum (last axis = bands).

    A channel with zero total power maps to equal shares.
    """
    total = p.sum(axis=-1, keepdims=True)
    safe = np.where(total > 0, total, 1.0)
    return np.where(total > 0, p / safe, 1.0 / p.shape[-1])


def window_features(windows: np.ndarray, rate: float, taper: str = "hann") -> np.ndarray:
    """Normalized features for a stack of windows shaped (frames, win_len, channels)."""
    win_len = windows.shape[1]
    _check_window_len(win_len)
    X = np.fft.rfft(windows * _taper(win_len, taper)[None, :, None], axis=1)
    power = np.abs(X) ** 2                                        # (F, bins, C)
    bp = np.einsum("fkc,kb->fcb", power, _bin_matrix(win_len, rate))
    return normalize_band_powers(bp).reshape(len(windows), N_FEATURES)


def _state_codes(truth: BrainState | None, n: int) -> np.ndarray:
    code = -1 if truth is None else list(BrainState).index(truth)
    return np.full(n, code, dtype=np.int8)


class FeatureExtractor:
    """Streaming feature extraction over consecutive cleaned chunks.

    The first frame covers samples [0, win_len); frame k covers
    [k*hop, k*hop + win_len). A frame's ``truth`` is set only when every
    sample in its window shares one ground-truth state.
    """

    def __init__(self, win_len: int = WIN_LEN, hop: int = HOP, rate: float = 200.0,
                 start_index: int = 0):
        _check_window_len(win_len)
        if hop < 1:
            raise ValueError("hop must be >= 1")
        self.win_len = win_len
        self.hop = hop
        self.rate = float(rate)
        self._buf = np.empty((0, N_CHANNELS))
        self._codes = np.empty(0, dtype=np.int8)
        self._buf_start = 0     # absolute sample index of _buf[0]
        self._next_start = 0    # absolute sample index of the next frame's first sample
        self._index = start_index

    @property
    def frame_rate(self) -> float:
        return self.rate / self.hop

    def push(self, chunk: RawChunk | np.ndarray) -> list[FeatureVector]:
        if isinstance(chunk, RawChunk):
            samples, codes = chunk.samples, _state_codes(chunk.truth, len(chunk))
        else:
            samples = np.asarray(chunk, dtype=float)
            codes = _state_codes(None, len(samples))
        buf = np.concatenate([self._buf, samples])
        codes = np.concatenate([self._codes, codes])
        offset = self._next_start - self._buf_start
        avail = len(buf) - offset - self.win_len
        out: list[FeatureVector] = []
        if avail >= 0:
            n_frames = avail // self.hop + 1
            span = buf[offset:offset + (n_frames - 1) * self.hop + self.win_len]
            wins = sliding_window_view(span, self.win_len, axis=0)[::self.hop]
            wins = np.moveaxis(wins, -1, 1)                           # (F, win, C)
            feats = window_features(wins, self.rate)
            cwins = sliding_window_view(codes[offset:offset + len(span)], self.win_len)[::self.hop]
            states = list(BrainState)
            for k in range(n_frames):
                cw = cwins[k]
                truth = states[cw[0]] if cw[0] >= 0 and np.all(cw == cw[0]) else None
                out.append(FeatureVector(self._index, feats[k], truth))
                self._index += 1
            self._next_start += n_frames * self.hop
        keep = self._next_start - self._buf_start
        self._buf = buf[keep:]
        self._codes = codes[keep:]
        self._buf_start = self._next_start
        return out


def extract_features(stream: np.ndarray | Iterable[RawChunk], win_len: int = WIN_LEN,
                     hop: int = HOP, rate: float = 200.0) -> list[FeatureVector]:
    """Batch feature extraction; a stream shorter than ``win_len`` yields nothing."""
    ex = FeatureExtractor(win_len, hop, rate)
    if isinstance(stream, np.ndarray):
        return ex.push(stream)
    out = []
    for chunk in stream:
        out.extend(ex.push(chunk))
    return out


def iter_features(chunks: Iterable[RawChunk], mains_freq: float, win_len: int = WIN_LEN,
                  hop: int = HOP) -> Iterator[FeatureVector]:
    """Clean then featurize a chunk stream lazily."""
    cleaner = extractor = None
    for chunk in chunks:
        if cleaner is None:
            cleaner = ArtifactCleaner(chunk.rate, mains_freq)
            extractor = FeatureExtractor(win_len, hop, chunk.rate)
        yield from extractor.push(cleaner(chunk))


def focus_metrics(fv: FeatureVector | np.ndarray) -> tuple[float, float]:
    """(relaxation, concentration) from alpha/beta shares.

    relaxation is the mean over channels of alpha / (alpha + beta); channels
    with no alpha or beta power are skipped, and if none remain both metrics
    are 0.5.
    """
    v = fv.values if isinstance(fv, FeatureVector) else np.asarray(fv, dtype=float)
    m = v.reshape(N_CHANNELS, N_BANDS)
    a = m[:, BANDS.index(Band.ALPHA)]
    b = m[:, BANDS.index(Band.BETA)]
    denom = a + b
    ok = denom > 0
    if not ok.any():
        return 0.5, 0.5
    relax = float(np.mean(a[ok] / denom[ok]))
    return relax, 1.0 - relax
