"""Candidate scoring: symmetry, replacement and chart features fused by an MLP."""

from .model import COMPONENTS, ScorerConfig, ScorerModel, Vocab, connection_point, repl_vector, score_candidate, sym_score
from .paths import decompose_paths
from .prepare import PreparedInstance, Preparer, prepare_instances, target_pair
from .predict import Prediction, as_tokens, predict
from .train import (
    EpochStats,
    TrainResult,
    best_index,
    build_model,
    exact_f1,
    predict_prepared,
    ranking_loss,
    train,
    training_accuracy,
)

__all__ = [
    "COMPONENTS",
    "ScorerConfig",
    "ScorerModel",
    "Vocab",
    "connection_point",
    "repl_vector",
    "score_candidate",
    "sym_score",
    "decompose_paths",
    "PreparedInstance",
    "Preparer",
    "prepare_instances",
    "target_pair",
    "Prediction",
    "as_tokens",
    "predict",
    "EpochStats",
    "TrainResult",
    "best_index",
    "build_model",
    "exact_f1",
    "predict_prepared",
    "ranking_loss",
    "train",
    "training_accuracy",
]

