from __future__ import annotations

from dataclasses import dataclass
from typing import Tuple

from ..dataset import Dataset, InputConfig, InsufficientData, feature_matrix, make_windows
from .base import mse
from .lstm import LSTMPolicy
from .mlp import MLPPolicy
from .svr import SVRPolicy

KINDS = ("mlp", "lstm", "svr")


@dataclass(frozen=True)
class TrainConfig:
    """Training protocol.

    ``window_stride`` thins the LSTM *training* windows only; evaluation
    always uses every window. Targets for every model kind are the actions
    at sample indices ``>= window_len - 1`` of each partition, so MLP, SVR
    and LSTM errors are measured on the same samples.
    """

    epochs: int = 200
    batch_size: int = 64
    seed: int = 0
    iterations: int = 10
    patience: int = 20
    early_stopping: bool = True
    lr: float = 0.1
    hidden: int = 32
    window_len: int = 100
    window_stride: int = 1
    standardize: bool = False
    svr_C: float = 10.0
    svr_epsilon: float = 0.01
    svr_gamma: float | None = None
    svr_kernel: str = "rbf"

    def __post_init__(self):
        for name in ("epochs", "batch_size", "iterations", "patience", "hidden", "window_len", "window_stride"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if self.lr <= 0:
            raise ValueError("lr must be positive")


def build_model(kind: str, cfg: InputConfig, tc: TrainConfig, seed: int | None = None):
    cfg = InputConfig.parse(cfg)
    seed = tc.seed if seed is None else seed
    common = dict(
        hidden=tc.hidden,
        inputs=cfg.value,
        lr=tc.lr,
        epochs=tc.epochs,
        batch_size=tc.batch_size,
        patience=tc.patience,
        early_stopping=tc.early_stopping,
        standardize=tc.standardize,
        random_state=seed,
    )
    if kind == "mlp":
        return MLPPolicy(**common)
    if kind == "lstm":
        return LSTMPolicy(window_len=tc.window_len, **common)
    if kind == "svr":
        return SVRPolicy(
            kernel=tc.svr_kernel, gamma=tc.svr_gamma, C=tc.svr_C, epsilon=tc.svr_epsilon,
            inputs=cfg.value, standardize=tc.standardize,
        )
    raise ValueError(f"unknown model kind {kind!r}; expected one of {KINDS}")


def training_arrays(kind: str, ds: Dataset, cfg: InputConfig, tc: TrainConfig, stride: int = 1):
    if kind == "lstm":
        return make_windows(ds, cfg, tc.window_len, stride)
    if len(ds) < tc.window_len:
        raise InsufficientData(f"{len(ds)} samples cannot fill a window of {tc.window_len}")
    # same target samples as the windowed model
    start = tc.window_len - 1
    return feature_matrix(ds, cfg)[start:], ds.actions[start:]


def train_model(kind: str, train: Dataset, test: Dataset, cfg, tc: TrainConfig = TrainConfig(), seed: int | None = None) -> Tuple[object, float, float]:
    """Fit one model; returns ``(model, train_mse, test_mse)`` in raw units."""
    cfg = InputConfig.parse(cfg)
    model = build_model(kind, cfg, tc, seed)
    X, y = training_arrays(kind, train, cfg, tc, tc.window_stride)
    Xt, yt = training_arrays(kind, test, cfg, tc, 1)
    model.fit(X, y, eval_set=(Xt, yt))
    Xf, yf = (X, y) if tc.window_stride == 1 or kind != "lstm" else training_arrays(kind, train, cfg, tc, 1)
    return model, mse(model.predict(Xf), yf), mse(model.predict(Xt), yt)
