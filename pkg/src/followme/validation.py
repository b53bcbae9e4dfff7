"""Input checks shared by the estimators."""
from __future__ import annotations

import numpy as np
from sklearn.utils.validation import check_array


def check_targets(y, n_samples: int) -> np.ndarray:
    y = check_array(y, ensure_2d=True, dtype=np.float64)
    if y.shape != (n_samples, 2):
        raise ValueError(f"targets must have shape ({n_samples}, 2) for (v, omega), got {y.shape}")
    return y


def check_features(X, n_features: int | None = None) -> np.ndarray:
    """2-D per-sample features, shape (n, D)."""
    X = check_array(X, dtype=np.float64)
    if n_features is not None and X.shape[1] != n_features:
        raise ValueError(f"expected {n_features} features, got {X.shape[1]}")
    return X


def check_windows(X, window_len: int | None = None, n_features: int | None = None) -> np.ndarray:
    """3-D observation windows, shape (n, W, D)."""
    X = check_array(X, dtype=np.float64, allow_nd=True, ensure_2d=False)
    if X.ndim != 3:
        raise ValueError(f"expected windows of shape (n, W, D), got array with ndim={X.ndim}")
    if window_len is not None and X.shape[1] != window_len:
        raise ValueError(f"expected windows of length {window_len}, got {X.shape[1]}")
    if n_features is not None and X.shape[2] != n_features:
        raise ValueError(f"expected {n_features} features per step, got {X.shape[2]}")
    return X


def check_same_shapes(a: dict, b: dict, what: str = "gradients") -> None:
    if a.keys() != b.keys():
        raise ValueError(f"{what} keys {sorted(b)} do not match parameters {sorted(a)}")
    for k in a:
        if np.shape(a[k]) != np.shape(b[k]):
            raise ValueError(f"{what}[{k!r}] has shape {np.shape(b[k])}, expected {np.shape(a[k])}")
