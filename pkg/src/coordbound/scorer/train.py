"""Ranking loss and the per-instance Adam training loop."""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import numpy as np

from ..cli.evaluation import evaluate_exact
from ..diffcore import value as V
from ..diffcore.optim import Adam
from ..diffcore.value import Value, backward
from .model import ScorerConfig, ScorerModel, Vocab

log = logging.getLogger(__name__)


def ranking_loss(scores, gold_index: int, margin: float = 1.0) -> Value:
    """``max(0, margin - (score_gold - best_wrong_score))``; 0 when gold is the only candidate."""
    if not isinstance(scores, Value):
        scores = V.const(np.asarray(scores, dtype=float))
    return V.hinge_rank(scores, gold_index, margin)


def best_index(scores: np.ndarray) -> int | None:
    """Argmax; candidates are in rank order, so the first maximum is the better-ranked one."""
    if len(scores) == 0:
        return None
    return int(np.argmax(scores))


def predict_prepared(model: ScorerModel, prep):
    """Highest-scoring candidate pair for a prepared instance, or None without candidates."""
    k = best_index(model.scores(prep))
    return None if k is None else prep.candidates[k].spans


def exact_f1(model: ScorerModel, prepared) -> float:
    preds = [predict_prepared(model, p) for p in prepared]
    return evaluate_exact([p.instance for p in prepared], preds).f1


@dataclass
class EpochStats:
    epoch: int
    loss: float
    updates: int
    train_accuracy: float
    dev_f1: float | None
    seconds: float


@dataclass
class TrainResult:
    model: ScorerModel
    history: list[EpochStats] = field(default_factory=list)
    best_epoch: int = 0
    skipped: int = 0  # gold pair exists but is not among the candidates
    no_gold: int = 0  # coordinators annotated as not conjoining anything


def build_model(config: ScorerConfig, train_prepared) -> ScorerModel:
    return ScorerModel(config, Vocab.from_prepared(train_prepared))


def train(model: ScorerModel, train_prepared, config: ScorerConfig | None = None, dev_prepared=None,
          epochs: int | None = None) -> TrainResult:
    """Per-instance hinge-loss training with Adam.

    Instances whose gold pair is missing from the candidates cannot be learned
    from and are skipped (their count is returned). Each epoch shuffles the
    trainable instances with the run seed. With a dev set, the parameters of the
    epoch with the highest dev exact-match F1 are kept (earliest on ties);
    otherwise those of the last epoch.
    """
    config = config or model.config
    epochs = config.epochs if epochs is None else epochs
    train_prepared = list(train_prepared)
    if not train_prepared:
        raise ValueError("empty training set")
    usable = [p for p in train_prepared if p.gold_index is not None]
    no_gold = sum(p.gold is None for p in train_prepared)
    skipped = len(train_prepared) - len(usable) - no_gold
    if not usable and epochs > 0:
        raise ValueError("no training instance has its gold pair among the candidates")
    rng = np.random.default_rng(config.seed)
    opt = Adam(model.parameters(), lr=config.lr)
    result = TrainResult(model, skipped=skipped, no_gold=no_gold)
    best_f1, best_snap = -1.0, None
    for epoch in range(1, epochs + 1):
        t0 = time.perf_counter()
        order = rng.permutation(len(usable))
        total, updates, hits = 0.0, 0, 0
        for idx in order:
            prep = usable[idx]
            scores = model.forward(prep, rng=rng)
            if best_index(scores.data) == prep.gold_index:
                hits += 1
            loss = ranking_loss(scores, prep.gold_index)
            total += loss.data.item()
            if loss.data > 0:
                model.store.zero_grad()
                backward(loss)
                opt.step()
                updates += 1
        dev_f1 = exact_f1(model, dev_prepared) if dev_prepared else None
        stats = EpochStats(epoch, total / len(usable), updates, hits / len(usable), dev_f1,
                           time.perf_counter() - t0)
        result.history.append(stats)
        log.info("epoch %d loss %.4f train-acc %.3f dev-f1 %s", epoch, stats.loss, stats.train_accuracy,
                 "-" if dev_f1 is None else f"{dev_f1:.4f}")
        if dev_f1 is not None and dev_f1 > best_f1:
            best_f1, best_snap, result.best_epoch = dev_f1, model.store.snapshot(), epoch
    if best_snap is not None:
        model.store.restore(best_snap)
    elif epochs > 0:
        result.best_epoch = epochs
    model.store.zero_grad()
    return result


def training_accuracy(model: ScorerModel, prepared) -> float:
    """Exact-match accuracy over instances with a gold pair (missing candidates count as errors)."""
    rows = [p for p in prepared if p.gold is not None]
    if not rows:
        return 0.0
    return sum(predict_prepared(model, p) == p.gold for p in rows) / len(rows)
