"""Versioned JSON model files.

Layout::

    {"format_version": 1, "kind": "lstm", "hidden": 32, "input_config": "all",
     "hyperparameters": {...}, "fitted": {...}, "params": {name: {"shape": [...], "data": [...]}}}

Arrays are stored row-major with shortest round-trip float repr, so a
save/load/save cycle is byte-identical.
"""
from __future__ import annotations

import json
import os

import numpy as np

from .lstm import LSTMPolicy
from .mlp import MLPPolicy
from .svr import SVRPolicy

FORMAT_VERSION = 1
MODEL_CLASSES = {"mlp": MLPPolicy, "lstm": LSTMPolicy, "svr": SVRPolicy}


class CorruptModel(ValueError):
    pass


class ModelVersionError(CorruptModel):
    pass


def _tensor(a) -> dict:
    a = np.asarray(a, dtype=float)
    return {"shape": list(a.shape), "data": [float(x) for x in a.ravel()]}


def _array(name: str, blob) -> np.ndarray:
    try:
        shape = tuple(int(s) for s in blob["shape"])
        data = np.array(blob["data"], dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise CorruptModel(f"tensor {name!r} is malformed: {exc}") from None
    if data.size != int(np.prod(shape)):
        raise CorruptModel(f"tensor {name!r} declares shape {list(shape)} but holds {data.size} values")
    return data.reshape(shape)


def model_to_dict(model) -> dict:
    kind = model.kind
    hyper = model.get_params()
    return {
        "format_version": FORMAT_VERSION,
        "kind": kind,
        "hidden": hyper.get("hidden"),
        "input_config": str(getattr(hyper["inputs"], "value", hyper["inputs"])),
        "hyperparameters": {k: v for k, v in sorted(hyper.items()) if k != "inputs"},
        "fitted": {
            "n_features_in": int(model.n_features_in_),
            "input_mean": _tensor(model.input_mean_),
            "input_scale": _tensor(model.input_scale_),
        },
        "params": {k: _tensor(v) for k, v in model.params_.items()},
    }


def dumps_model(model) -> str:
    return json.dumps(model_to_dict(model), indent=1) + "\n"


def save_model(model, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(dumps_model(model))


def model_from_dict(doc: dict):
    if not isinstance(doc, dict):
        raise CorruptModel("model file is not a JSON object")
    version = doc.get("format_version")
    if version != FORMAT_VERSION:
        raise ModelVersionError(f"unsupported model format_version {version!r} (expected {FORMAT_VERSION})")
    try:
        cls = MODEL_CLASSES[doc["kind"]]
        model = cls(inputs=doc["input_config"], **doc["hyperparameters"])
        fitted = doc["fitted"]
        model.n_features_in_ = int(fitted["n_features_in"])
        model.input_mean_ = _array("input_mean", fitted["input_mean"])
        model.input_scale_ = _array("input_scale", fitted["input_scale"])
        params = {k: _array(k, v) for k, v in doc["params"].items()}
    except (KeyError, TypeError) as exc:
        raise CorruptModel(f"model file missing or malformed field: {exc}") from None
    expected = _expected_shapes(model, params)
    for k, shape in expected.items():
        if k not in params:
            raise CorruptModel(f"missing parameter tensor {k!r}")
        if params[k].shape != shape:
            raise CorruptModel(f"parameter {k!r} has shape {list(params[k].shape)}, expected {list(shape)}")
    model.params_ = params
    return model


def _expected_shapes(model, params) -> dict:
    d = model.n_features_in_
    if isinstance(model, MLPPolicy):
        h = model.hidden
        return {"W1": (h, d), "b1": (h,), "W2": (2, h), "b2": (2,)}
    if isinstance(model, LSTMPolicy):
        h = model.hidden
        shapes = {}
        for g in "ifog":
            shapes[f"W_{g}"] = (h, d)
            shapes[f"U_{g}"] = (h, h)
            shapes[f"b_{g}"] = (h,)
        shapes.update(W_y=(2, h), b_y=(2,))
        return shapes
    n_sv = params.get("support_vectors", np.empty((0, d))).shape[0]
    return {"support_vectors": (n_sv, d), "dual_coef": (n_sv, 2), "bias": (2,)}


def load_model(path):
    if not os.path.exists(path):
        raise FileNotFoundError(path)
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CorruptModel(f"{path}: not valid JSON ({exc})") from None
    return model_from_dict(doc)
