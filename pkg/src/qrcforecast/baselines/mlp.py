"""Small fully connected regressor trained with mini-batch Adam (numpy only)."""

from __future__ import annotations

import dataclasses
from typing import Optional

import numpy as np

from ..errors import DataError, SpecError, TrainingError


@dataclasses.dataclass(frozen=True)
class MlpSpec:
    """MLP hyperparameters.

    The network is ``window -> hidden[0] -> hidden[1] -> 1`` with ReLU hidden
    layers and a linear output.  ``window`` is the length of the lagged input
    vector used for one-step forecasting.
    """

    __pydantic_config__ = {"extra": "forbid"}

    window: int = 156
    hidden: tuple = (156, 136)
    epochs: int = 60
    batch_size: int = 16
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    val_fraction: float = 0.5
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "hidden", tuple(int(h) for h in self.hidden))
        if self.window < 1 or any(h < 1 for h in self.hidden):
            raise SpecError("layer widths must be positive")
        if self.epochs < 1 or self.batch_size < 1:
            raise SpecError("epochs and batch_size must be at least 1")
        if not 0 < self.val_fraction < 1:
            raise SpecError("val_fraction must lie in (0, 1)")

    def layer_sizes(self, input_dim: Optional[int] = None) -> tuple:
        return (input_dim or self.window, *self.hidden, 1)

    def to_dict(self) -> dict:
        out = dataclasses.asdict(self)
        out["hidden"] = list(self.hidden)
        return out


class Adam:
    """Adam over a list of parameter arrays (updated in place)."""

    def __init__(self, params, learning_rate=1e-3, beta1=0.9, beta2=0.999, epsilon=1e-8):
        self.lr = learning_rate
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = epsilon
        self.t = 0
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]

    def step(self, params, grads):
        self.t += 1
        c1 = 1.0 - self.beta1**self.t
        c2 = 1.0 - self.beta2**self.t
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            p -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


@dataclasses.dataclass
class MlpModel:
    params: list  # [W1, b1, W2, b2, ..., Wout, bout]
    history: dict = dataclasses.field(default_factory=dict)
    best_epoch: int = 0

    @property
    def input_dim(self) -> int:
        return self.params[0].shape[0]


def mlp_init(spec: MlpSpec, input_dim: Optional[int] = None, rng=None) -> list:
    """He-uniform weights, zero biases."""
    if rng is None:
        rng = np.random.default_rng(spec.seed)
    params = []
    sizes = spec.layer_sizes(input_dim)
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        limit = np.sqrt(6.0 / fan_in)
        params.append(rng.uniform(-limit, limit, (fan_in, fan_out)))
        params.append(np.zeros(fan_out))
    return params


def _forward(params, X):
    acts = [X]
    pre = []
    h = X
    n_layers = len(params) // 2
    for i in range(n_layers):
        z = h @ params[2 * i] + params[2 * i + 1]
        pre.append(z)
        h = z if i == n_layers - 1 else np.maximum(z, 0.0)
        acts.append(h)
    return acts, pre


def mlp_loss_and_grad(params, X, y):
    """Mean squared error and its gradient with respect to every parameter."""
    acts, pre = _forward(params, X)
    out = acts[-1][:, 0]
    resid = out - y
    loss = float(np.mean(resid**2))
    grads = [None] * len(params)
    delta = (2.0 / y.size) * resid[:, None]
    n_layers = len(params) // 2
    for i in range(n_layers - 1, -1, -1):
        grads[2 * i] = acts[i].T @ delta
        grads[2 * i + 1] = delta.sum(axis=0)
        if i > 0:
            delta = (delta @ params[2 * i].T) * (pre[i - 1] > 0)
    return loss, grads


def mlp_predict(model: MlpModel, inputs) -> np.ndarray:
    X = np.asarray(inputs, dtype=float)
    if X.ndim != 2 or X.shape[1] != model.input_dim:
        raise DataError(f"expected inputs of shape (n, {model.input_dim}), got {X.shape}")
    return _forward(model.params, X)[0][-1][:, 0]


def _mse(params, X, y) -> float:
    return float(np.mean((_forward(params, X)[0][-1][:, 0] - y) ** 2))


def mlp_train(inputs, targets, spec: MlpSpec, params: Optional[list] = None) -> MlpModel:
    """Train on the leading part of the samples, validate on the rest.

    The sample order is kept for the train/validation cut (the trailing
    ``val_fraction`` is held out); mini-batches are reshuffled every epoch
    from the seeded stream.  The returned parameters are those with the
    lowest validation MSE seen, including the initial ones (epoch 0).
    """
    X = np.asarray(inputs, dtype=float)
    y = np.asarray(targets, dtype=float)
    if X.ndim != 2 or y.shape != (X.shape[0],):
        raise DataError(f"inputs {X.shape} and targets {y.shape} are not aligned")
    n_fit = int(np.floor(X.shape[0] * (1.0 - spec.val_fraction)))
    if n_fit < 1 or n_fit >= X.shape[0]:
        raise DataError(f"{X.shape[0]} samples are too few for a train/validation split")
    X_fit, y_fit = X[:n_fit], y[:n_fit]
    X_val, y_val = X[n_fit:], y[n_fit:]
    rng = np.random.default_rng(spec.seed)
    if params is None:
        params = mlp_init(spec, X.shape[1], rng)
    else:
        params = [p.copy() for p in params]
    opt = Adam(params, spec.learning_rate, spec.beta1, spec.beta2, spec.eps)
    history = {"train_loss": [_mse(params, X_fit, y_fit)], "val_loss": [_mse(params, X_val, y_val)]}
    best = [p.copy() for p in params]
    best_val, best_epoch = history["val_loss"][0], 0
    for epoch in range(1, spec.epochs + 1):
        order = rng.permutation(n_fit)
        losses = []
        for start in range(0, n_fit, spec.batch_size):
            idx = order[start : start + spec.batch_size]
            loss, grads = mlp_loss_and_grad(params, X_fit[idx], y_fit[idx])
            if not np.isfinite(loss):
                raise TrainingError(f"non-finite loss at epoch {epoch}, batch starting {start}")
            opt.step(params, grads)
            losses.append(loss * idx.size)
        history["train_loss"].append(float(np.sum(losses) / n_fit))
        val = _mse(params, X_val, y_val)
        if not np.isfinite(val):
            raise TrainingError(f"non-finite validation loss at epoch {epoch}")
        history["val_loss"].append(val)
        if val < best_val:
            best_val, best_epoch = val, epoch
            best = [p.copy() for p in params]
    return MlpModel(best, history, best_epoch)


def window_dataset(values, window: int, first_target: int, stop: int):
    """Lag windows for one-step forecasting.

    Row ``j`` holds ``values[k - window + 1 .. k]`` and target ``values[k + 1]``
    for ``k = first_target - 1 + j`` with target indices in
    ``[first_target, stop)``.
    """
    values = np.asarray(values, dtype=float)
    first_k = first_target - 1
    if first_k < window - 1:
        raise DataError(f"target {first_target} has fewer than {window} past points")
    ks = np.arange(first_k, stop - 1)
    X = np.stack([values[k - window + 1 : k + 1] for k in ks]) if ks.size else np.empty((0, window))
    return X, values[ks + 1]
