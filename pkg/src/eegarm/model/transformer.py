"""Single-block transformer encoder classifier in plain numpy.

Pipeline for a window X of shape (T, 20)::

    E = X W_in + b_in
    per head h:  Q,K,V = E W_{q,k,v}[h] + b;  O_h = softmax(Q K^T / sqrt(d_k)) V
    R = E + sum_h O_h W_o[h] + b_o           (residual around attention)
    Y = LayerNorm(R)
    p = mean_t Y                               (average pooling over time)
    logits = gelu(p W_1 + b_1) W_2 + b_2

There is no positional encoding, so logits are invariant to row order.
Everything is batched over a leading axis; gradients are derived by hand.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from eegarm.bands import N_FEATURES
from eegarm.errors import ConfigError, DimensionError

N_CLASSES = 3
LN_EPS = 1e-5
_GELU_C = np.sqrt(2.0 / np.pi)

PARAM_ORDER = ("W_in", "b_in", "W_q", "b_q", "W_k", "b_k", "W_v", "b_v", "W_o", "b_o",
               "ln_g", "ln_b", "W_1", "b_1", "W_2", "b_2")


@dataclass(frozen=True)
class TransformerConfig:
    win_size: int = 80
    feat_dim: int = N_FEATURES
    model_dim: int = 32
    heads: int = 4
    ff_dim: int = 64
    classes: int = N_CLASSES
    seed: int = 0

    def __post_init__(self):
        if self.model_dim % self.heads:
            raise ConfigError(f"model_dim {self.model_dim} not divisible by heads {self.heads}")
        if self.classes != N_CLASSES:
            raise ConfigError("classes must be 3")
        if self.feat_dim != N_FEATURES:
            raise ConfigError(f"feat_dim must be {N_FEATURES}")
        if min(self.win_size, self.model_dim, self.heads, self.ff_dim) < 1:
            raise ConfigError("sizes must be positive")

    @property
    def head_dim(self) -> int:
        return self.model_dim // self.heads

    def to_dict(self) -> dict:
        return asdict(self)


def init_params(cfg: TransformerConfig, rng: np.random.Generator | None = None) -> dict:
    rng = rng or np.random.Generator(np.random.PCG64(cfg.seed))
    D, H, dk, F, FF, C = cfg.model_dim, cfg.heads, cfg.head_dim, cfg.feat_dim, cfg.ff_dim, cfg.classes

    def w(*shape, fan_in):
        return rng.standard_normal(shape) / np.sqrt(fan_in)

    return {
        "W_in": w(F, D, fan_in=F), "b_in": np.zeros(D),
        "W_q": w(H, D, dk, fan_in=D), "b_q": np.zeros((H, dk)),
        "W_k": w(H, D, dk, fan_in=D), "b_k": np.zeros((H, dk)),
        "W_v": w(H, D, dk, fan_in=D), "b_v": np.zeros((H, dk)),
        "W_o": w(H, dk, D, fan_in=D), "b_o": np.zeros(D),
        "ln_g": np.ones(D), "ln_b": np.zeros(D),
        "W_1": w(D, FF, fan_in=D), "b_1": np.zeros(FF),
        "W_2": w(FF, C, fan_in=FF), "b_2": np.zeros(C),
    }


def gelu(x: np.ndarray) -> np.ndarray:
    """tanh approximation of GELU."""
    return 0.5 * x * (1.0 + np.tanh(_GELU_C * (x + 0.044715 * x ** 3)))


def gelu_grad(x: np.ndarray) -> np.ndarray:
    t = np.tanh(_GELU_C * (x + 0.044715 * x ** 3))
    return 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * _GELU_C * (1.0 + 3 * 0.044715 * x * x)


def softmax(z: np.ndarray, axis: int = -1) -> np.ndarray:
    z = z - z.max(axis=axis, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=axis, keepdims=True)


def log_softmax(z: np.ndarray, axis: int = -1) -> np.ndarray:
    z = z - z.max(axis=axis, keepdims=True)
    return z - np.log(np.exp(z).sum(axis=axis, keepdims=True))


def cross_entropy(logits: np.ndarray, one_hot: np.ndarray) -> float:
    """Mean cross-entropy over the batch."""
    logits = np.atleast_2d(logits)
    one_hot = np.atleast_2d(one_hot)
    return float(-(one_hot * log_softmax(logits)).sum(axis=-1).mean())


def _as_batch(params: dict, X: np.ndarray) -> tuple[np.ndarray, bool]:
    X = np.asarray(X, dtype=float)
    single = X.ndim == 2
    if single:
        X = X[None]
    F = params["W_in"].shape[0]
    if X.ndim != 3 or X.shape[2] != F or X.shape[1] < 1:
        raise DimensionError(f"expected window (T, {F}) or batch (B, T, {F}), got {X.shape}")
    return X, single


def forward(params: dict, X: np.ndarray, return_cache: bool = False):
    """Logits for one window (T, F) or a batch (B, T, F)."""
    X, single = _as_batch(params, X)
    dk = params["W_q"].shape[2]
    B, T, _ = X.shape
    H = params["W_q"].shape[0]
    E = X @ params["W_in"] + params["b_in"]                                   # (B,T,D)
    E4 = E[:, None]                                                           # (B,1,T,D)
    Q = E4 @ params["W_q"] + params["b_q"][:, None, :]                        # (B,H,T,dk)
    K = E4 @ params["W_k"] + params["b_k"][:, None, :]
    V = E4 @ params["W_v"] + params["b_v"][:, None, :]
    A = softmax(Q @ K.swapaxes(-1, -2) / np.sqrt(dk))                         # (B,H,T,T)
    O = A @ V
    O_cat = O.transpose(0, 2, 1, 3).reshape(B, T, H * dk)
    R = E + O_cat @ params["W_o"].reshape(H * dk, -1) + params["b_o"]
    mu = R.mean(axis=-1, keepdims=True)
    inv_sigma = 1.0 / np.sqrt(R.var(axis=-1, keepdims=True) + LN_EPS)
    xhat = (R - mu) * inv_sigma
    Y = xhat * params["ln_g"] + params["ln_b"]
    P = Y.mean(axis=1)                                                        # (B,D)
    Z1 = P @ params["W_1"] + params["b_1"]
    H1 = gelu(Z1)
    logits = H1 @ params["W_2"] + params["b_2"]
    out = logits[0] if single else logits
    if not return_cache:
        return out
    cache = dict(X=X, E=E, Q=Q, K=K, V=V, A=A, O_cat=O_cat, xhat=xhat, inv_sigma=inv_sigma,
                 P=P, Z1=Z1, H1=H1, logits=logits, dk=dk)
    return out, cache


def backward(params: dict, cache: dict, dlogits: np.ndarray) -> dict:
    """Gradients of a scalar loss given its gradient w.r.t. the batch logits (B, C)."""
    X, E, Q, K, V, A, O_cat = (cache[k] for k in ("X", "E", "Q", "K", "V", "A", "O_cat"))
    xhat, inv_sigma, P, Z1, H1 = (cache[k] for k in ("xhat", "inv_sigma", "P", "Z1", "H1"))
    B, T, D = E.shape
    H, _, dk = params["W_q"].shape
    g = {}
    dlogits = np.atleast_2d(dlogits)
    g["W_2"] = H1.T @ dlogits
    g["b_2"] = dlogits.sum(axis=0)
    dZ1 = (dlogits @ params["W_2"].T) * gelu_grad(Z1)
    g["W_1"] = P.T @ dZ1
    g["b_1"] = dZ1.sum(axis=0)
    dP = dZ1 @ params["W_1"].T                                                # (B,D)
    dY = np.broadcast_to(dP[:, None, :] / T, xhat.shape)
    g["ln_g"] = (dY * xhat).sum(axis=(0, 1))
    g["ln_b"] = dY.sum(axis=(0, 1))
    dxhat = dY * params["ln_g"]
    dR = inv_sigma * (dxhat - dxhat.mean(axis=-1, keepdims=True)
                      - xhat * (dxhat * xhat).mean(axis=-1, keepdims=True))
    dR2 = dR.reshape(B * T, D)
    g["W_o"] = (O_cat.reshape(B * T, H * dk).T @ dR2).reshape(H, dk, D)
    g["b_o"] = dR2.sum(axis=0)
    dO = (dR2 @ params["W_o"].reshape(H * dk, D).T).reshape(B, T, H, dk).transpose(0, 2, 1, 3)
    dA = dO @ V.swapaxes(-1, -2)
    dV = A.swapaxes(-1, -2) @ dO
    dS = A * (dA - (dA * A).sum(axis=-1, keepdims=True)) / np.sqrt(dk)
    dQ = dS @ K
    dK = dS.swapaxes(-1, -2) @ Q
    dE = dR.copy()
    E2 = E.reshape(B * T, D)
    for name, d in (("q", dQ), ("k", dK), ("v", dV)):
        d_cat = d.transpose(0, 2, 1, 3).reshape(B * T, H * dk)               # columns (h, e)
        W_cat = params[f"W_{name}"].transpose(1, 0, 2).reshape(D, H * dk)
        g[f"W_{name}"] = (E2.T @ d_cat).reshape(D, H, dk).transpose(1, 0, 2)
        g[f"b_{name}"] = d.sum(axis=(0, 2))
        dE += (d_cat @ W_cat.T).reshape(B, T, D)
    F = X.shape[2]
    g["W_in"] = X.reshape(B * T, F).T @ dE.reshape(B * T, D)
    g["b_in"] = dE.sum(axis=(0, 1))
    return g


def loss_and_grads(params: dict, X: np.ndarray, one_hot: np.ndarray) -> tuple[float, dict, np.ndarray]:
    """Mean cross-entropy, its gradients, and the batch logits."""
    logits, cache = forward(params, X, return_cache=True)
    logits = np.atleast_2d(logits)
    one_hot = np.atleast_2d(one_hot)
    dlogits = (softmax(logits) - one_hot) / len(logits)
    return cross_entropy(logits, one_hot), backward(params, cache, dlogits), logits
