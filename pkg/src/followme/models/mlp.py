from __future__ import annotations

from typing import Tuple

import numpy as np

from ..validation import check_features
from .adam import Params
from .base import GradientPolicy, uniform_init


def mlp_init(n_features: int, hidden: int = 32, rng: np.random.Generator | None = None) -> Params:
    rng = rng or np.random.default_rng(0)
    return {
        "W1": uniform_init(rng, (hidden, n_features), n_features),
        "b1": np.zeros(hidden),
        "W2": uniform_init(rng, (2, hidden), hidden),
        "b2": np.zeros(2),
    }


def mlp_forward(params: Params, x) -> np.ndarray:
    """``W2 tanh(W1 x + b1) + b2`` for one feature vector (2,) or a batch (n, 2)."""
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != params["W1"].shape[1]:
        raise ValueError(f"expected {params['W1'].shape[1]} features, got {x.shape[-1]}")
    h = np.tanh(x @ params["W1"].T + params["b1"])
    return h @ params["W2"].T + params["b2"]


def mlp_gradient(params: Params, X, y) -> Tuple[float, Params]:
    """Batch MSE and its exact gradient with respect to every parameter."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or len(X) == 0 or y.shape != (len(X), 2):
        raise ValueError(f"bad batch shapes X={X.shape}, y={y.shape}")
    if X.shape[1] != params["W1"].shape[1]:
        raise ValueError(f"expected {params['W1'].shape[1]} features, got {X.shape[1]}")
    h = np.tanh(X @ params["W1"].T + params["b1"])
    err = h @ params["W2"].T + params["b2"] - y
    loss = float(np.mean(err**2))
    d_out = err / len(X)  # d loss / d pred, loss averaged over n * 2 entries
    dz = (d_out @ params["W2"]) * (1.0 - h * h)
    grads = {
        "W1": dz.T @ X,
        "b1": dz.sum(axis=0),
        "W2": d_out.T @ h,
        "b2": d_out.sum(axis=0),
    }
    return loss, grads


class MLPPolicy(GradientPolicy):
    """Single hidden layer tanh perceptron mapping one observation to (v, omega).

    Parameters
    ----------
    hidden : int
        Hidden units.
    inputs : {"ranges", "angles", "all"}
        UWB channels the model consumes; fixes the expected feature count.
    lr, epochs, batch_size, patience, early_stopping :
        Mini-batch ADAM settings.
    standardize : bool
        Z-score inputs using training statistics.
    random_state : int
        Seed for initialization and batch shuffling.
    """

    kind = "mlp"

    def __init__(
        self,
        hidden=32,
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
        self.inputs = inputs
        self.lr = lr
        self.epochs = epochs
        self.batch_size = batch_size
        self.patience = patience
        self.early_stopping = early_stopping
        self.standardize = standardize
        self.random_state = random_state

    def _check_X(self, X, fitting=False):
        X = check_features(X, None if fitting else getattr(self, "n_features_in_", None))
        self._check_inputs_dim(X.shape[1])
        return X

    def _init_params(self, n_features, rng):
        return mlp_init(n_features, self.hidden, rng)

    def _forward(self, params, X):
        return mlp_forward(params, X)

    def _loss_grad(self, params, X, y):
        return mlp_gradient(params, X, y)
