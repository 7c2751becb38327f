"""Two-hidden-layer tanh MLP regressor trained with mini-batch Adam.

Parameters live in a plain dict of arrays so the loss/gradient routine can
be checked against finite differences and serialised without ceremony.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..core import angle_diff, normalize_angle

PARAM_NAMES = ("W1", "b1", "W2", "b2", "W3", "b3")
LABEL_SCALE = 90.0


class TrainingDiverged(RuntimeError):
    def __init__(self, seed: int, epoch: int):
        super().__init__(f"training diverged (seed={seed}, epoch={epoch})")
        self.seed = seed
        self.epoch = epoch


@dataclass
class Standardizer:
    mean: np.ndarray
    scale: np.ndarray

    @classmethod
    def fit(cls, X) -> "Standardizer":
        X = np.asarray(X, dtype=float)
        sd = X.std(axis=0)
        return cls(X.mean(axis=0), np.where(sd > 1e-12, sd, 1.0))

    def transform(self, X) -> np.ndarray:
        return (np.asarray(X, dtype=float) - self.mean) / self.scale

    def to_json(self) -> dict:
        return {"mean": self.mean.tolist(), "scale": self.scale.tolist()}

    @classmethod
    def from_json(cls, obj) -> "Standardizer":
        return cls(np.asarray(obj["mean"], dtype=float), np.asarray(obj["scale"], dtype=float))


def init_params(n_in: int, hidden=(64, 32), seed: int = 0) -> dict:
    rng = np.random.default_rng(seed)
    sizes = (n_in, *hidden, 1)
    params = {}
    for k in range(3):
        lim = math.sqrt(6.0 / (sizes[k] + sizes[k + 1]))
        params[f"W{k + 1}"] = rng.uniform(-lim, lim, (sizes[k], sizes[k + 1]))
        params[f"b{k + 1}"] = np.zeros(sizes[k + 1])
    return params


def forward(params: dict, X: np.ndarray):
    h1 = np.tanh(X @ params["W1"] + params["b1"])
    h2 = np.tanh(h1 @ params["W2"] + params["b2"])
    out = (h2 @ params["W3"] + params["b3"])[:, 0]
    return out, (h1, h2)


def loss_and_grad(params: dict, X: np.ndarray, y: np.ndarray, scale: float = LABEL_SCALE):
    """Mean squared error in degrees and its gradient w.r.t. every parameter.

    The network output is in units of ``scale`` degrees.
    """
    n = len(X)
    out, (h1, h2) = forward(params, X)
    err = out * scale - y
    loss = float(np.mean(err ** 2))
    d_out = (2.0 * scale / n) * err[:, None]
    g = {"W3": h2.T @ d_out, "b3": d_out.sum(axis=0)}
    d2 = (d_out @ params["W3"].T) * (1.0 - h2 ** 2)
    g["W2"] = h1.T @ d2
    g["b2"] = d2.sum(axis=0)
    d1 = (d2 @ params["W2"].T) * (1.0 - h1 ** 2)
    g["W1"] = X.T @ d1
    g["b1"] = d1.sum(axis=0)
    return loss, g


@dataclass
class MlpModel:
    params: dict
    seed: int
    val_mae: float
    standardizer: Standardizer
    epochs: int = 0
    history: list = field(default_factory=list)

    def predict_raw(self, X) -> np.ndarray:
        """Unwrapped predictions (degrees) for raw, unstandardised features."""
        out, _ = forward(self.params, self.standardizer.transform(X))
        return out * LABEL_SCALE

    def predict(self, X) -> np.ndarray:
        return normalize_angle(self.predict_raw(X))

    def flat(self) -> np.ndarray:
        return np.concatenate([self.params[k].ravel() for k in PARAM_NAMES])

    def to_json(self) -> dict:
        return {"seed": self.seed, "val_mae": self.val_mae, "epochs": self.epochs,
                "params": {k: self.params[k].tolist() for k in PARAM_NAMES}}

    @classmethod
    def from_json(cls, obj, standardizer: Standardizer) -> "MlpModel":
        params = {k: np.asarray(v, dtype=float) for k, v in obj["params"].items()}
        return cls(params, int(obj["seed"]), float(obj["val_mae"]), standardizer,
                   int(obj.get("epochs", 0)))


def mae_deg(pred, y) -> float:
    return float(np.mean(np.abs(angle_diff(pred, y))))


def train_mlp(X_train, y_train, X_val, y_val, seed: int, cfg=None,
              standardizer: Standardizer | None = None) -> MlpModel:
    """Fit one network; early-stops on validation MAE and keeps the best epoch.

    Features are z-scored with statistics from ``X_train`` unless a
    standardizer is supplied. Raises :class:`TrainingDiverged` on a
    non-finite loss.
    """
    from ..config import DEFAULT
    cfg = cfg or DEFAULT
    std = standardizer or Standardizer.fit(X_train)
    Xt = std.transform(X_train)
    Xv = std.transform(X_val)
    yt = np.asarray(y_train, dtype=float)
    yv = np.asarray(y_val, dtype=float)

    params = init_params(Xt.shape[1], (cfg.hidden1, cfg.hidden2), seed)
    rng = np.random.default_rng([seed, 1])
    m = {k: np.zeros_like(v) for k, v in params.items()}
    v = {k: np.zeros_like(p) for k, p in params.items()}
    b1, b2, eps, lr = 0.9, 0.999, 1e-8, cfg.learning_rate
    step = 0

    def val_mae(p):
        out, _ = forward(p, Xv)
        return mae_deg(out * LABEL_SCALE, yv)

    best = {k: p.copy() for k, p in params.items()}
    best_mae, best_epoch, wait = val_mae(params), 0, 0
    history = [best_mae]
    epoch = 0
    for epoch in range(1, cfg.max_epochs + 1):
        order = rng.permutation(len(Xt))
        for start in range(0, len(order), cfg.batch_size):
            idx = order[start:start + cfg.batch_size]
            loss, g = loss_and_grad(params, Xt[idx], yt[idx])
            if not math.isfinite(loss):
                raise TrainingDiverged(seed, epoch)
            step += 1
            c1, c2 = 1 - b1 ** step, 1 - b2 ** step
            for k in PARAM_NAMES:
                m[k] = b1 * m[k] + (1 - b1) * g[k]
                v[k] = b2 * v[k] + (1 - b2) * g[k] ** 2
                params[k] -= lr * (m[k] / c1) / (np.sqrt(v[k] / c2) + eps)
                if k[0] == "W" and cfg.weight_decay:
                    params[k] -= lr * cfg.weight_decay * params[k]
        cur = val_mae(params)
        if not math.isfinite(cur):
            raise TrainingDiverged(seed, epoch)
        history.append(cur)
        if cur < best_mae:
            best_mae, best_epoch, wait = cur, epoch, 0
            best = {k: p.copy() for k, p in params.items()}
        else:
            wait += 1
            if wait >= cfg.patience:
                break
    return MlpModel(best, seed, best_mae, std, best_epoch, history)
