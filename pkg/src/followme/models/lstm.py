"""Single-layer LSTM regressor reading a fixed-length observation window.

Gate order wherever weights are stacked internally: input, forget, output, candidate.
"""
from __future__ import annotations

from typing import Tuple

import numpy as np

from ..validation import check_windows
from .adam import Params
from .base import GradientPolicy, uniform_init

GATES = ("i", "f", "o", "g")


def lstm_init(n_features: int, hidden: int = 32, rng: np.random.Generator | None = None, forget_bias: float = 1.0) -> Params:
    rng = rng or np.random.default_rng(0)
    params = {}
    for g in GATES:
        params[f"W_{g}"] = uniform_init(rng, (hidden, n_features), n_features)
    for g in GATES:
        params[f"U_{g}"] = uniform_init(rng, (hidden, hidden), hidden)
    for g in GATES:
        params[f"b_{g}"] = np.full(hidden, forget_bias if g == "f" else 0.0)
    params["W_y"] = uniform_init(rng, (2, hidden), hidden)
    params["b_y"] = np.zeros(2)
    return params


def _stack(params: Params):
    Wx = np.concatenate([params[f"W_{g}"] for g in GATES])
    Uh = np.concatenate([params[f"U_{g}"] for g in GATES])
    b = np.concatenate([params[f"b_{g}"] for g in GATES])
    return Wx, Uh, b


def _run(params: Params, X: np.ndarray, keep: bool):
    n, W, D = X.shape
    Wx, Uh, b = _stack(params)
    if D != Wx.shape[1]:
        raise ValueError(f"expected {Wx.shape[1]} features per step, got {D}")
    H = Uh.shape[1]
    # sigmoid(z) = (1 + tanh(z / 2)) / 2, so halve the i, f, o rows and take one tanh per step
    scale = np.ones((4 * H, 1))
    scale[: 3 * H] = 0.5
    Wx, Uh, b = Wx * scale, Uh * scale, b * scale[:, 0]
    steps = np.ascontiguousarray(X.transpose(1, 0, 2))  # (W, n, D)
    WxT, UhT = np.ascontiguousarray(Wx.T), np.ascontiguousarray(Uh.T)
    h = np.zeros((n, H))
    c = np.zeros((n, H))
    cache = []
    for t in range(W):
        act = steps[t] @ WxT
        act += b
        act += h @ UhT
        np.tanh(act, out=act)
        act[:, : 3 * H] *= 0.5
        act[:, : 3 * H] += 0.5
        i, f, o, g = act[:, :H], act[:, H : 2 * H], act[:, 2 * H : 3 * H], act[:, 3 * H :]
        c_prev, h_prev = c, h
        c = f * c_prev
        c += i * g
        tc = np.tanh(c)
        h = o * tc
        if keep:
            cache.append((i, f, o, g, c_prev, h_prev, tc))
    return h, cache


def lstm_forward(params: Params, window) -> np.ndarray:
    """Readout of the final hidden state for one window (W, D) or a batch (n, W, D)."""
    window = np.asarray(window, dtype=float)
    single = window.ndim == 2
    X = window[None] if single else window
    h, _ = _run(params, X, keep=False)
    out = h @ params["W_y"].T + params["b_y"]
    return out[0] if single else out


def lstm_gradient(params: Params, X, y) -> Tuple[float, Params]:
    """Batch MSE and its gradient by backpropagation through every window step."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 3 or len(X) == 0 or y.shape != (len(X), 2):
        raise ValueError(f"bad batch shapes X={X.shape}, y={y.shape}")
    n, W, D = X.shape
    h, cache = _run(params, X, keep=True)
    _, Uh, _ = _stack(params)
    H = Uh.shape[1]
    err = h @ params["W_y"].T + params["b_y"] - y
    loss = float(np.mean(err**2))
    d_out = err / n

    dz_all = np.empty((n, W, 4 * H))
    h_prev_all = np.empty((n, W, H))
    dh = d_out @ params["W_y"]
    dc = np.zeros((n, H))
    for t in range(W - 1, -1, -1):
        i, f, o, g, c_prev, h_prev, tc = cache[t]
        dc = dc + dh * o * (1.0 - tc * tc)
        dz = dz_all[:, t]
        dz[:, :H] = dc * g * i * (1.0 - i)
        dz[:, H : 2 * H] = dc * c_prev * f * (1.0 - f)
        dz[:, 2 * H : 3 * H] = dh * tc * o * (1.0 - o)
        dz[:, 3 * H :] = dc * i * (1.0 - g * g)
        h_prev_all[:, t] = h_prev
        dh = dz @ Uh
        dc = dc * f

    dz_flat = dz_all.reshape(-1, 4 * H)
    dWx = dz_flat.T @ X.reshape(-1, D)
    dUh = dz_flat.T @ h_prev_all.reshape(-1, H)
    db = dz_flat.sum(axis=0)
    grads = {}
    for k, g in enumerate(GATES):
        rows = slice(k * H, (k + 1) * H)
        grads[f"W_{g}"] = dWx[rows]
        grads[f"U_{g}"] = dUh[rows]
        grads[f"b_{g}"] = db[rows]
    grads["W_y"] = d_out.T @ h
    grads["b_y"] = d_out.sum(axis=0)
    return loss, grads


class LSTMPolicy(GradientPolicy):
    """LSTM over a window of ``window_len`` observations, read out to (v, omega).

    ``X`` passed to ``fit``/``predict`` has shape (n, window_len, D). Other
    parameters match :class:`MLPPolicy`.
    """

    kind = "lstm"

    def __init__(
        self,
        hidden=32,
        window_len=100,
        inputs="all",
        lr=0.1,
        epochs=200,
        batch_size=64,
        patience=20,
        early_stopping=True,
        standardize=False,
        random_state=0,
    ):
        self.hidden = hidden
        self.window_len = window_len
        self.inputs = inputs
        self.lr = lr
        self.epochs = epochs
        self.batch_size = batch_size
        self.patience = patience
        self.early_stopping = early_stopping
        self.standardize = standardize
        self.random_state = random_state

    def _check_X(self, X, fitting=False):
        X = check_windows(X, self.window_len, None if fitting else getattr(self, "n_features_in_", None))
        self._check_inputs_dim(X.shape[2])
        return X

    def _init_params(self, n_features, rng):
        return lstm_init(n_features, self.hidden, rng)

    def _forward(self, params, X):
        return lstm_forward(params, X)

    def _loss_grad(self, params, X, y):
        return lstm_gradient(params, X, y)
