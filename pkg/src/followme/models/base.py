"""Loss, shared mini-batch ADAM loop and the common estimator base class."""
from __future__ import annotations

import logging

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted

from ..dataset import InputConfig
from ..validation import check_targets
from .adam import AdamState, Params, adam_step

logger = logging.getLogger(__name__)


class TrainingDiverged(RuntimeError):
    def __init__(self, epoch: int, loss: float):
        self.epoch, self.loss = epoch, loss
        super().__init__(f"non-finite training loss {loss!r} at epoch {epoch}")


def mse(pred, target) -> float:
    """Mean squared error over all samples and both output dimensions."""
    pred = np.asarray(pred, dtype=float)
    target = np.asarray(target, dtype=float)
    if pred.shape != target.shape:
        raise ValueError(f"shape mismatch: {pred.shape} vs {target.shape}")
    if pred.size == 0:
        raise ValueError("mse of an empty sequence")
    return float(np.mean((pred - target) ** 2))


def uniform_init(rng: np.random.Generator, shape, fan_in: int) -> np.ndarray:
    s = 1.0 / np.sqrt(fan_in)
    return rng.uniform(-s, s, size=shape)


class PolicyEstimator(RegressorMixin, BaseEstimator):
    """Common predict path: validate, rescale, run the model's forward map."""

    kind: str = ""

    def predict(self, X) -> np.ndarray:
        """Raw (unclamped) ``(v, omega)`` predictions, shape (n, 2)."""
        check_is_fitted(self, "params_")
        return self._forward(self.params_, self._scale(self._check_X(X)))

    def _scale(self, X):
        return (X - self.input_mean_) / self.input_scale_

    def _check_inputs_dim(self, d: int):
        expected = InputConfig.parse(self.inputs).feature_dim
        if d != expected:
            raise ValueError(f"inputs={self.inputs!r} implies {expected} features, got {d}")


class GradientPolicy(PolicyEstimator):
    """Shared fit for the networks trained with mini-batch ADAM.

    Subclasses provide ``_init_params``, ``_forward``, ``_loss_grad`` and
    ``_check_X``. Feature standardization (``standardize=True``) acts on the
    last axis of ``X`` and is off by default.
    """

    def fit(self, X, y, eval_set=None):
        """Train from scratch.

        ``eval_set=(X_val, y_val)`` enables per-epoch validation MSE; when
        ``early_stopping`` is set, training stops after ``patience`` epochs
        without improvement and the best parameters are kept.
        """
        X = self._check_X(X, fitting=True)
        y = check_targets(y, X.shape[0])
        if eval_set is not None:
            X_val = self._check_X(eval_set[0])
            y_val = check_targets(eval_set[1], X_val.shape[0])
        flat = X.reshape(-1, X.shape[-1])
        if self.standardize:
            self.input_mean_ = flat.mean(axis=0)
            scale = flat.std(axis=0)
            self.input_scale_ = np.where(scale > 0, scale, 1.0)
        else:
            self.input_mean_ = np.zeros(X.shape[-1])
            self.input_scale_ = np.ones(X.shape[-1])
        Xs = self._scale(X)
        Xv = self._scale(X_val) if eval_set is not None else None

        rng = np.random.default_rng(self.random_state)
        params = self._init_params(X.shape[-1], rng)
        state = AdamState.fresh(params, self.lr)
        n = Xs.shape[0]
        best, best_score, best_epoch, stale = params, np.inf, 0, 0
        self.history_ = []
        for epoch in range(1, self.epochs + 1):
            order = rng.permutation(n)
            total = 0.0
            for start in range(0, n, self.batch_size):
                idx = order[start : start + self.batch_size]
                loss, grads = self._loss_grad(params, Xs[idx], y[idx])
                if not np.isfinite(loss):
                    raise TrainingDiverged(epoch, loss)
                total += loss * len(idx)
                params, state = adam_step(params, grads, state)
            train_loss = total / n
            val = mse(self._forward(params, Xv), y_val) if Xv is not None else train_loss
            if not np.isfinite(val):
                raise TrainingDiverged(epoch, val)
            self.history_.append((train_loss, val))
            if val < best_score:
                best, best_score, best_epoch, stale = params, val, epoch, 0
            else:
                stale += 1
            if self.early_stopping and Xv is not None and stale >= self.patience:
                logger.debug("%s: early stop at epoch %d (best %d)", self.kind, epoch, best_epoch)
                break
        if not (self.early_stopping and Xv is not None):
            best, best_epoch = params, len(self.history_)
        self.params_ = best
        self.best_epoch_ = best_epoch
        self.n_features_in_ = X.shape[-1]
        return self
