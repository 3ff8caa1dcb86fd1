"""Mini-batch gradient descent, evaluation, and model files."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from types import ModuleType

import numpy as np

from eegarm import container
from eegarm.dataset import SplitDataset, Standardizer, build_split, one_hot
from eegarm.errors import ConfigError, DatasetError, TrainingError
from eegarm.model import ffnn, transformer
from eegarm.model.ffnn import FFNNConfig
from eegarm.model.metrics import EvalReport, report
from eegarm.model.transformer import TransformerConfig

log = logging.getLogger(__name__)

ARCHS: dict[str, tuple[ModuleType, type]] = {
    "transformer": (transformer, TransformerConfig),
    "ffnn": (ffnn, FFNNConfig),
}
EVAL_BATCH = 128


def _arch_of(cfg) -> str:
    for name, (_, cls) in ARCHS.items():
        if isinstance(cfg, cls):
            return name
    raise ConfigError(f"unknown model config {type(cfg).__name__}")


@dataclass
class Classifier:
    config: TransformerConfig | FFNNConfig
    params: dict
    standardizer: Standardizer | None = None

    @property
    def arch(self) -> str:
        return _arch_of(self.config)

    @property
    def _impl(self) -> ModuleType:
        return ARCHS[self.arch][0]

    @property
    def win_size(self) -> int:
        return self.config.win_size

    @classmethod
    def init(cls, cfg, standardizer: Standardizer | None = None) -> "Classifier":
        return cls(cfg, ARCHS[_arch_of(cfg)][0].init_params(cfg), standardizer)

    def logits(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim == 2:
            return self._impl.forward(self.params, X)
        if len(X) == 0:
            return np.empty((0, self.config.classes))
        return np.concatenate([self._impl.forward(self.params, X[k:k + EVAL_BATCH])
                               for k in range(0, len(X), EVAL_BATCH)])

    def predict(self, X: np.ndarray) -> np.ndarray:
        """Argmax class; ties go to the lowest class index."""
        return np.argmax(self.logits(X), axis=-1)

    def predict_raw(self, window: np.ndarray) -> int:
        """Standardize a raw (win_size, 20) feature window, then classify it."""
        if self.standardizer is None:
            raise ConfigError("classifier has no standardizer")
        return int(self.predict(self.standardizer.apply(window)))

    def loss_and_grads(self, X, Y):
        return self._impl.loss_and_grads(self.params, X, Y)

    # -- persistence --

    def to_bytes(self) -> bytes:
        order = ARCHS[self.arch][0].PARAM_ORDER
        arrays = {f"param/{k}": self.params[k] for k in order}
        if self.standardizer is not None:
            arrays["std/mean"] = self.standardizer.mean
            arrays["std/std"] = self.standardizer.std
        meta = {"kind": "model", "arch": self.arch, "config": self.config.to_dict(),
                "degenerate": list(self.standardizer.degenerate) if self.standardizer else []}
        return container.dumps(meta, arrays)

    def save(self, path: str | Path) -> None:
        Path(path).write_bytes(self.to_bytes())

    @classmethod
    def load(cls, path: str | Path) -> "Classifier":
        meta, arrays = container.read(path)
        if meta.get("kind") != "model":
            raise ConfigError(f"{path} is not a model file")
        impl, cfg_cls = ARCHS[meta["arch"]]
        cfg = cfg_cls(**meta["config"])
        params = {k: arrays[f"param/{k}"] for k in impl.PARAM_ORDER}
        std = None
        if "std/mean" in arrays:
            std = Standardizer(arrays["std/mean"], arrays["std/std"], tuple(meta.get("degenerate", ())))
        return cls(cfg, params, std)


@dataclass
class History:
    epochs: list[dict] = field(default_factory=list)

    @property
    def val_acc(self) -> list[float]:
        return [e["val_acc"] for e in self.epochs]

    @property
    def train_acc(self) -> list[float]:
        return [e["train_acc"] for e in self.epochs]

    def to_csv(self) -> str:
        cols = ("epoch", "train_loss", "train_acc", "val_loss", "val_acc")
        rows = [",".join(cols)]
        rows += [",".join(repr(e[c]) for c in cols) for e in self.epochs]
        return "\n".join(rows) + "\n"


def _loss_acc(model: Classifier, X: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    if len(y) == 0:
        return float("nan"), float("nan")
    logits = model.logits(X)
    loss = transformer.cross_entropy(logits, one_hot(y))
    return loss, float(np.mean(np.argmax(logits, axis=1) == y))


def train(data: SplitDataset, cfg: TransformerConfig | FFNNConfig, epochs: int = 50,
          lr: float = 1e-3, batch_size: int = 16, seed: int = 0) -> tuple[Classifier, History]:
    """Plain mini-batch gradient descent on mean cross-entropy.

    ``cfg.seed`` seeds the initial weights and ``seed`` the per-epoch
    shuffles, so a fixed pair reproduces the run bit for bit. The test split
    doubles as the validation set.
    """
    if len(data.train_y) == 0:
        raise DatasetError("empty training split")
    if cfg.win_size != data.win_size:
        raise ConfigError(f"config win_size {cfg.win_size} != dataset win_size {data.win_size}")
    model = Classifier.init(cfg, data.standardizer)
    rng = np.random.Generator(np.random.PCG64(seed))
    X, Y = data.train_X, one_hot(data.train_y)
    history = History()
    for epoch in range(1, epochs + 1):
        order = rng.permutation(len(X))
        for k in range(0, len(order), batch_size):
            b = order[k:k + batch_size]
            loss, grads, _ = model.loss_and_grads(X[b], Y[b])
            if not np.isfinite(loss):
                raise TrainingError(epoch, "loss is not finite (diverged)")
            for name, g in grads.items():
                model.params[name] -= lr * g
        tr_loss, tr_acc = _loss_acc(model, data.train_X, data.train_y)
        va_loss, va_acc = _loss_acc(model, data.test_X, data.test_y)
        if not np.isfinite(tr_loss):
            raise TrainingError(epoch, "loss is not finite (diverged)")
        history.epochs.append({"epoch": epoch, "train_loss": tr_loss, "train_acc": tr_acc,
                               "val_loss": va_loss, "val_acc": va_acc})
        log.debug("epoch %d loss %.4f train %.3f val %.3f", epoch, tr_loss, tr_acc, va_acc)
    return model, history


def evaluate(model: Classifier, X: np.ndarray, y: np.ndarray) -> EvalReport:
    if len(y) == 0:
        raise DatasetError("empty test split")
    return report(y, model.predict(X))


def window_size_study(files: dict, sizes, cfg: TransformerConfig | FFNNConfig, epochs: int = 50,
                      lr: float = 1e-3, batch_size: int = 16, seed: int = 0,
                      test_fraction: float = 0.2) -> list[dict]:
    """Train one model per window size on the same source files; returns bar data rows."""
    rows = []
    for size in sizes:
        data = build_split(files, size, test_fraction, seed)
        sized = type(cfg)(**{**cfg.to_dict(), "win_size": size})
        model, hist = train(data, sized, epochs, lr, batch_size, seed)
        rows.append({"win_size": size, "accuracy": evaluate(model, data.test_X, data.test_y).accuracy,
                     "best_val_acc": max(hist.val_acc), "train_windows": int(len(data.train_y))})
    return rows
