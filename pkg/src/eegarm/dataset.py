"""Per-action feature CSVs and windowed, standardized training splits.

CSV rows are ``index,f1,...,f20`` with an optional trailing ``truth``
column; the file a row lives in decides its label. Windows are cut with
a random overlap per step (``overlap`` drawn uniformly from
``[min(20, win//4), win//2]``), labelled by their first row.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

from eegarm import container
from eegarm.bands import N_FEATURES
from eegarm.errors import DatasetError, LoadError, StratificationError
from eegarm.labels import ActionLabel
from eegarm.transport import format_value

CSV_HEADER = ["index", *(f"f{k}" for k in range(1, N_FEATURES + 1))]
N_CLASSES = len(ActionLabel)


@dataclass(frozen=True)
class LabeledRecord:
    index: int
    features: np.ndarray
    label: ActionLabel

    def __post_init__(self):
        f = np.asarray(self.features, dtype=float).reshape(-1)
        if f.shape != (N_FEATURES,) or not np.all(np.isfinite(f)):
            raise ValueError(f"record needs {N_FEATURES} finite features")
        object.__setattr__(self, "features", f)
        object.__setattr__(self, "label", ActionLabel(self.label))


# -- CSV ----------------------------------------------------------------------

def _row_of(rec) -> list[str]:
    values = rec.features if hasattr(rec, "features") else rec.values
    return [str(int(rec.index)), *map(format_value, values)]


def append_records(path: str | Path, records: Iterable, with_truth: bool = False) -> int:
    """Append rows to ``path``, writing the header if the file is new or empty.

    ``records`` may be :class:`LabeledRecord`, feature vectors or frames
    (anything with ``index`` and ``features``/``values``). With
    ``with_truth`` a ``truth`` column carries each record's ``truth`` value.
    """
    path = Path(path)
    fresh = not path.exists() or path.stat().st_size == 0
    n = 0
    with open(path, "a", newline="") as fh:
        w = csv.writer(fh)
        if fresh:
            w.writerow(CSV_HEADER + (["truth"] if with_truth else []))
        for rec in records:
            row = _row_of(rec)
            if with_truth:
                t = getattr(rec, "truth", None)
                row.append(t.value if t is not None else "")
            w.writerow(row)
            n += 1
    return n


def read_feature_csv(path: str | Path) -> tuple[np.ndarray, np.ndarray]:
    """(indices, features) arrays from a feature CSV; a truth column is ignored."""
    indices, rows = [], []
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or (lineno == 1 and row[0].strip() == "index"):
                continue
            if len(row) not in (N_FEATURES + 1, N_FEATURES + 2):
                raise LoadError(path, lineno, f"expected {N_FEATURES} features, got {len(row) - 1}")
            try:
                idx = int(row[0])
                vals = [float(v) for v in row[1:N_FEATURES + 1]]
            except ValueError as exc:
                raise LoadError(path, lineno, str(exc)) from None
            if not all(np.isfinite(vals)):
                raise LoadError(path, lineno, "non-finite feature")
            indices.append(idx)
            rows.append(vals)
    return (np.array(indices, dtype=np.int64),
            np.array(rows, dtype=float).reshape(-1, N_FEATURES))


def load_action_file(path: str | Path, label: ActionLabel | int) -> list[LabeledRecord]:
    indices, X = read_feature_csv(path)
    label = ActionLabel(label)
    return [LabeledRecord(int(i), x, label) for i, x in zip(indices, X)]


# -- standardization ----------------------------------------------------------

class ZeroVarianceWarning(UserWarning):
    pass


@dataclass(frozen=True)
class Standardizer:
    mean: np.ndarray
    std: np.ndarray
    degenerate: tuple[int, ...] = ()

    def apply(self, X: np.ndarray) -> np.ndarray:
        return (np.asarray(X, dtype=float) - self.mean) / self.std


def _zscore(X: np.ndarray):
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] < 2:
        raise ValueError("standardize needs a 2-D array with at least 2 rows")
    mean = X.mean(axis=0)
    std = X.std(axis=0)
    flat = std <= 1e-12 * np.maximum(1.0, np.abs(mean))
    std = np.where(flat, 1.0, std)
    Xs = (X - mean) / std
    Xs[:, flat] = 0.0
    if flat.any():
        warnings.warn(f"zero-variance columns {np.flatnonzero(flat).tolist()} mapped to 0",
                      ZeroVarianceWarning, stacklevel=3)
    return Xs, mean, std, flat


def standardize(X: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Column-wise z-score (population std). Returns ``(X', mean, std)``.

    Zero-variance columns get std 1 (so they become all zeros) and raise a
    :class:`ZeroVarianceWarning` naming them.
    """
    Xs, mean, std, _ = _zscore(X)
    return Xs, mean, std


def fit_standardizer(X: np.ndarray) -> tuple[np.ndarray, Standardizer]:
    Xs, mean, std, flat = _zscore(X)
    return Xs, Standardizer(mean, std, tuple(int(k) for k in np.flatnonzero(flat)))


# -- segmentation ----------------------------------------------------------------

def overlap_bounds(win_size: int) -> tuple[int, int]:
    """(min_overlap, max_overlap) with integer division."""
    return min(20, win_size // 4), win_size // 2


def as_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.PCG64(seed))


def file_rng(seed: int, label: int, ordinal: int = 0) -> np.random.Generator:
    """Overlap PRNG for one action file, derived from (seed, label, file ordinal)."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, int(label), ordinal])))


def window_starts(n: int, win_size: int, rng=None, random_overlap: bool = True) -> np.ndarray:
    """Start rows of every window; one overlap draw per emitted window."""
    if win_size < 4:
        raise ValueError("win_size must be >= 4")
    lo, hi = overlap_bounds(win_size)
    rng = as_rng(rng) if random_overlap else None
    starts = []
    start = 0
    while start + win_size <= n:
        overlap = int(rng.integers(lo, hi, endpoint=True)) if random_overlap else 0
        starts.append(start)
        start += win_size - overlap
    return np.array(starts, dtype=np.int64)


def segment_dataset(X: np.ndarray, y: np.ndarray, win_size: int, num_chan: int = N_FEATURES,
                    seed=None, random_overlap: bool = True) -> tuple[np.ndarray, np.ndarray]:
    """Cut ``X`` (n, num_chan) into windows (m, win_size, num_chan) labelled ``y[start]``.

    ``seed`` is an int or a ``numpy.random.Generator``; with
    ``random_overlap=False`` windows tile without overlap (step = win_size).
    """
    X = np.asarray(X)
    y = np.asarray(y)
    if X.ndim != 2 or X.shape[1] != num_chan:
        raise ValueError(f"X must be (n, {num_chan}), got {X.shape}")
    starts = window_starts(len(X), win_size, seed, random_overlap)
    if len(starts) == 0:
        return np.empty((0, win_size, num_chan), dtype=X.dtype), np.empty(0, dtype=y.dtype)
    idx = starts[:, None] + np.arange(win_size)[None, :]
    return X[idx], y[starts]


def one_hot(labels: np.ndarray, classes: int = N_CLASSES) -> np.ndarray:
    labels = np.asarray(labels, dtype=np.int64)
    out = np.zeros((len(labels), classes))
    out[np.arange(len(labels)), labels] = 1.0
    return out


# -- splits -------------------------------------------------------------------------

@dataclass
class SplitDataset:
    train_X: np.ndarray          # (m, win_size, 20), standardized
    train_y: np.ndarray          # (m,) int labels
    test_X: np.ndarray
    test_y: np.ndarray
    standardizer: Standardizer
    win_size: int
    info: dict = field(default_factory=dict)

    @property
    def train_one_hot(self) -> np.ndarray:
        return one_hot(self.train_y)

    @property
    def test_one_hot(self) -> np.ndarray:
        return one_hot(self.test_y)

    def save(self, path: str | Path) -> None:
        container.write(path, {"kind": "split", "win_size": self.win_size, "info": self.info,
                               "degenerate": list(self.standardizer.degenerate)}, {
            "train_X": self.train_X, "train_y": self.train_y,
            "test_X": self.test_X, "test_y": self.test_y,
            "std_mean": self.standardizer.mean, "std_std": self.standardizer.std,
        })

    @classmethod
    def load(cls, path: str | Path) -> "SplitDataset":
        meta, a = container.read(path)
        if meta.get("kind") != "split":
            raise DatasetError(f"{path} is not a split dataset")
        std = Standardizer(a["std_mean"], a["std_std"], tuple(meta.get("degenerate", ())))
        return cls(a["train_X"], a["train_y"], a["test_X"], a["test_y"], std,
                   int(meta["win_size"]), meta.get("info", {}))


def build_split(files: Mapping[str | Path, ActionLabel | int], win_size: int,
                test_fraction: float = 0.2, seed: int = 0, random_overlap: bool = True,
                standardizer: Standardizer | None = None) -> SplitDataset:
    """Load, standardize (on all rows combined), segment per file, shuffle and split.

    Passing ``standardizer`` applies stored statistics instead of fitting new
    ones, e.g. to rebuild a model's test split for evaluation.

    The split is stratified: each class contributes ``round(test_fraction * m_c)``
    windows to the test set, and a class left empty on either side raises
    :class:`StratificationError`.
    """
    if not files:
        raise DatasetError("no input files")
    items = [(Path(p), ActionLabel(lab)) for p, lab in files.items()]
    arrays = [read_feature_csv(p)[1] for p, _ in items]
    sizes = [len(a) for a in arrays]
    combined = np.concatenate(arrays) if arrays else np.empty((0, N_FEATURES))
    if len(combined) < 2:
        raise DatasetError("not enough rows to standardize")
    if standardizer is None:
        Xs, standardizer = fit_standardizer(combined)
    else:
        Xs = standardizer.apply(combined)

    windows = {lab: [] for lab in ActionLabel}
    ordinal = {lab: 0 for lab in ActionLabel}
    info_files = []
    offset = 0
    for (path, label), n in zip(items, sizes):
        part = Xs[offset:offset + n]
        offset += n
        rng = file_rng(seed, label, ordinal[label])
        ordinal[label] += 1
        W, _ = segment_dataset(part, np.full(n, int(label)), win_size, seed=rng,
                               random_overlap=random_overlap)
        windows[label].append(W)
        info_files.append({"path": str(path), "label": int(label), "rows": n, "windows": len(W)})

    split_rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, 0x5EED])))
    trX, trY, teX, teY = [], [], [], []
    for label in ActionLabel:
        W = np.concatenate(windows[label]) if windows[label] else np.empty((0, win_size, N_FEATURES))
        m = len(W)
        n_test = int(round(test_fraction * m))
        if m == 0 or n_test == 0 or n_test == m:
            raise StratificationError(
                f"class {label.display_name}: {m} windows, {n_test} for test "
                f"(test_fraction={test_fraction}) leaves a split without this class")
        order = split_rng.permutation(m)
        teX.append(W[order[:n_test]])
        trX.append(W[order[n_test:]])
        teY.append(np.full(n_test, int(label)))
        trY.append(np.full(m - n_test, int(label)))
    train_X, train_y = np.concatenate(trX), np.concatenate(trY)
    test_X, test_y = np.concatenate(teX), np.concatenate(teY)
    p = split_rng.permutation(len(train_y))
    q = split_rng.permutation(len(test_y))
    info = {"files": info_files, "seed": seed, "test_fraction": test_fraction,
            "random_overlap": random_overlap}
    return SplitDataset(train_X[p], train_y[p], test_X[q], test_y[q], standardizer, win_size, info)


def dimension_table(info: dict, win_size: int) -> str:
    """Per-file "Original Dimension / Windowed Dimension" table."""
    lines = [f"{'Action':<16}{'Original Dimension':<22}Windowed Dimension"]
    for f in info["files"]:
        name = ActionLabel(f["label"]).display_name
        lines.append(f"{name:<16}{str([f['rows'], N_FEATURES]):<22}"
                     f"{[f['windows'], win_size, N_FEATURES]}")
    return "\n".join(lines)
