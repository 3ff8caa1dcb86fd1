"""One-hidden-layer feed-forward baseline on the flattened (win_size * 20) window."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from eegarm.bands import N_FEATURES
from eegarm.errors import ConfigError, DimensionError
from eegarm.model.transformer import N_CLASSES, cross_entropy, softmax

PARAM_ORDER = ("W_1", "b_1", "W_2", "b_2")


@dataclass(frozen=True)
class FFNNConfig:
    win_size: int = 80
    feat_dim: int = N_FEATURES
    hidden: int = 64
    classes: int = N_CLASSES
    seed: int = 0

    def __post_init__(self):
        if self.classes != N_CLASSES or self.feat_dim != N_FEATURES:
            raise ConfigError("FFNN expects 20 features and 3 classes")
        if min(self.win_size, self.hidden) < 1:
            raise ConfigError("sizes must be positive")

    def to_dict(self) -> dict:
        return asdict(self)


def init_params(cfg: FFNNConfig, rng: np.random.Generator | None = None) -> dict:
    rng = rng or np.random.Generator(np.random.PCG64(cfg.seed))
    n_in = cfg.win_size * cfg.feat_dim
    return {
        "W_1": rng.standard_normal((n_in, cfg.hidden)) * np.sqrt(2.0 / n_in), "b_1": np.zeros(cfg.hidden),
        "W_2": rng.standard_normal((cfg.hidden, cfg.classes)) / np.sqrt(cfg.hidden),
        "b_2": np.zeros(cfg.classes),
    }


def forward(params: dict, X: np.ndarray, return_cache: bool = False):
    X = np.asarray(X, dtype=float)
    single = X.ndim == 2
    if single:
        X = X[None]
    flat = X.reshape(len(X), -1)
    if flat.shape[1] != params["W_1"].shape[0]:
        raise DimensionError(f"window flattens to {flat.shape[1]}, model expects {params['W_1'].shape[0]}")
    Z = flat @ params["W_1"] + params["b_1"]
    H = np.maximum(Z, 0.0)
    logits = H @ params["W_2"] + params["b_2"]
    out = logits[0] if single else logits
    if return_cache:
        return out, {"flat": flat, "Z": Z, "H": H}
    return out


def backward(params: dict, cache: dict, dlogits: np.ndarray) -> dict:
    dlogits = np.atleast_2d(dlogits)
    dH = dlogits @ params["W_2"].T
    dZ = dH * (cache["Z"] > 0)
    return {"W_2": cache["H"].T @ dlogits, "b_2": dlogits.sum(axis=0),
            "W_1": cache["flat"].T @ dZ, "b_1": dZ.sum(axis=0)}


def loss_and_grads(params: dict, X: np.ndarray, one_hot: np.ndarray):
    logits, cache = forward(params, X, return_cache=True)
    logits = np.atleast_2d(logits)
    one_hot = np.atleast_2d(one_hot)
    dlogits = (softmax(logits) - one_hot) / len(logits)
    return cross_entropy(logits, one_hot), backward(params, cache, dlogits), logits
