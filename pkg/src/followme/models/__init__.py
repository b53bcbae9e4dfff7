"""Regressors mapping UWB observations to (v, omega) commands."""
from .adam import AdamState, adam_step
from .base import TrainingDiverged, mse
from .io import CorruptModel, ModelVersionError, load_model, save_model
from .lstm import LSTMPolicy, lstm_forward, lstm_gradient, lstm_init
from .mlp import MLPPolicy, mlp_forward, mlp_gradient, mlp_init
from .policy import padded_window, policy_predict
from .svr import SVRPolicy, svr_train
from .training import KINDS, TrainConfig, build_model, train_model

__all__ = [
    "AdamState",
    "CorruptModel",
    "KINDS",
    "LSTMPolicy",
    "MLPPolicy",
    "ModelVersionError",
    "SVRPolicy",
    "TrainConfig",
    "TrainingDiverged",
    "adam_step",
    "build_model",
    "load_model",
    "lstm_forward",
    "lstm_gradient",
    "lstm_init",
    "mlp_forward",
    "mlp_gradient",
    "mlp_init",
    "mse",
    "padded_window",
    "policy_predict",
    "save_model",
    "svr_train",
    "train_model",
]
