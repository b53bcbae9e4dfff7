from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Tuple

import numpy as np

from ..validation import check_same_shapes

Params = Dict[str, np.ndarray]


@dataclass
class AdamState:
    """First/second moment accumulators keyed like the parameter dict."""

    m: Params = field(default_factory=dict)
    v: Params = field(default_factory=dict)
    step_count: int = 0
    lr: float = 0.1
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def fresh(cls, params: Params, lr: float = 0.1, **kwargs) -> "AdamState":
        zeros = {k: np.zeros_like(p, dtype=float) for k, p in params.items()}
        return cls({k: z.copy() for k, z in zeros.items()}, zeros, 0, lr, **kwargs)


def adam_step(params: Params, grads: Params, state: AdamState) -> Tuple[Params, AdamState]:
    """One bias-corrected ADAM update; inputs are left untouched."""
    check_same_shapes(params, grads)
    if not state.m:
        state = AdamState.fresh(params, state.lr, beta1=state.beta1, beta2=state.beta2, eps=state.eps)
    check_same_shapes(params, state.m, "moments")
    t = state.step_count + 1
    b1, b2 = state.beta1, state.beta2
    bc1 = 1.0 - b1**t
    bc2 = 1.0 - b2**t
    new_params, new_m, new_v = {}, {}, {}
    for k, p in params.items():
        g = np.asarray(grads[k], dtype=float)
        m = b1 * state.m[k] + (1.0 - b1) * g
        v = b2 * state.v[k] + (1.0 - b2) * (g * g)
        new_params[k] = p - state.lr * (m / bc1) / (np.sqrt(v / bc2) + state.eps)
        new_m[k], new_v[k] = m, v
    return new_params, AdamState(new_m, new_v, t, state.lr, b1, b2, state.eps)
