"""Minimal reverse-mode differentiation with LSTM/MLP building blocks."""

from . import value as ops
from .gradcheck import grad_check, relative_error
from .nn import UNK, EmbeddingTable, LstmParams, MlpParams, ParamStore, bilstm_at, lstm_encode, mlp_apply
from .optim import Adam, AdamState, Sgd, adam_step, sgd_step
from .value import ShapeError, Value, backward, const, parameter

__all__ = [
    "ops", "grad_check", "relative_error", "UNK", "EmbeddingTable", "LstmParams", "MlpParams",
    "ParamStore", "bilstm_at", "lstm_encode", "mlp_apply", "Adam", "AdamState", "Sgd", "adam_step",
    "sgd_step", "ShapeError", "Value", "backward", "const", "parameter",
]
