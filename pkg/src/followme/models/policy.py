from __future__ import annotations

from typing import Sequence

import numpy as np

from ..dataset import InputConfig, select_inputs
from ..sim import OMEGA_MAX, V_MAX, Twist, UwbObservation
from .lstm import LSTMPolicy


def padded_window(history: Sequence[UwbObservation], window_len: int) -> list:
    """Last ``window_len`` observations, left-padded with copies of the oldest one."""
    if not history:
        raise ValueError("empty observation history")
    recent = list(history[-window_len:])
    return [recent[0]] * (window_len - len(recent)) + recent


def policy_predict(model, history: Sequence[UwbObservation], cfg: InputConfig | str | None = None) -> Twist:
    """Clamped velocity command from a fitted policy and the observation history.

    Per-observation models read only the newest observation; the LSTM reads the
    padded window ending at it.
    """
    if not history:
        raise ValueError("empty observation history")
    cfg = InputConfig.parse(cfg if cfg is not None else model.inputs)
    if cfg.feature_dim != InputConfig.parse(model.inputs).feature_dim:
        raise ValueError(f"model was built for inputs={model.inputs!r}, not {cfg.value!r}")
    if isinstance(model, LSTMPolicy):
        window = np.array([select_inputs(o, cfg) for o in padded_window(history, model.window_len)])
        raw = model.predict(window[None])[0]
    else:
        raw = model.predict(select_inputs(history[-1], cfg)[None])[0]
    v, w = (float(x) for x in raw)
    # NaN from a broken model maps to a stop rather than propagating
    v = 0.0 if np.isnan(v) else min(max(v, 0.0), V_MAX)
    w = 0.0 if np.isnan(w) else min(max(w, -OMEGA_MAX), OMEGA_MAX)
    return Twist(v, w)
