"""Exact-match and coordination-phrase evaluation."""

from __future__ import annotations

import random
from collections import Counter
from dataclasses import dataclass, field

NP_TYPES = ("NP", "NX")


def normalize_type(label: str | None) -> str | None:
    if label is None:
        return None
    return "NP" if label in NP_TYPES else label


def f1_score(p: float, r: float) -> float:
    return 2 * p * r / (p + r) if p + r > 0 else 0.0


@dataclass
class EvalReport:
    gold: int
    predicted: int
    correct: int
    per_type: dict[str, dict[str, float]] = field(default_factory=dict)

    @property
    def precision(self) -> float:
        return self.correct / self.predicted if self.predicted else 0.0

    @property
    def recall(self) -> float:
        return self.correct / self.gold if self.gold else 0.0

    @property
    def f1(self) -> float:
        return f1_score(self.precision, self.recall)

    def row(self, name: str = "") -> str:
        return (f"{name}\tP={100 * self.precision:.2f}\tR={100 * self.recall:.2f}\tF1={100 * self.f1:.2f}"
                f"\tgold={self.gold}\tpred={self.predicted}\tcorrect={self.correct}")

    def to_dict(self) -> dict:
        return {"precision": self.precision, "recall": self.recall, "f1": self.f1, "gold": self.gold,
                "predicted": self.predicted, "correct": self.correct, "per_type": self.per_type}


def evaluate_exact(gold, pred, typed: bool = False, pred_types=None, target_type: str = "NP") -> EvalReport:
    """Exact conjunct-boundary match.

    ``gold`` holds :class:`CoordinationInstance` objects (or bare pairs), ``pred``
    pairs or None. A None prediction counts as neither predicted nor correct.
    With ``typed`` only gold instances of ``target_type`` (NP and NX count as
    NP) are gold answers, and predictions whose type (``pred_types``, default
    ``target_type``) differs are not counted as predictions at all.
    """
    gold, pred = list(gold), list(pred)
    if len(gold) != len(pred):
        raise ValueError(f"{len(gold)} gold instances but {len(pred)} predictions")
    if pred_types is None:
        pred_types = [target_type] * len(pred)
    pred_types = list(pred_types)
    if len(pred_types) != len(pred):
        raise ValueError("pred_types must align with pred")
    n_gold = n_pred = n_correct = 0
    by_type_gold, by_type_correct = Counter(), Counter()
    for g, p, pt in zip(gold, pred, pred_types):
        pair = getattr(g, "gold", g)
        gtype = normalize_type(getattr(g, "coord_type", None))
        if pair is not None and typed and gtype != target_type:
            pair = None
        if p is not None and typed and normalize_type(pt) != target_type:
            p = None
        if pair is not None:
            n_gold += 1
            by_type_gold[gtype or "?"] += 1
        if p is None:
            continue
        n_pred += 1
        if pair is not None and _same(p, pair):
            n_correct += 1
            by_type_correct[gtype or "?"] += 1
    per_type = {t: {"gold": c, "correct": by_type_correct[t], "recall": by_type_correct[t] / c}
                for t, c in sorted(by_type_gold.items())}
    return EvalReport(n_gold, n_pred, n_correct, per_type)


def _same(a, b) -> bool:
    (i, j), (l, m) = a
    (i2, j2), (l2, m2) = b
    return (i, j, l, m) == (i2, j2, l2, m2)


def evaluate_phrase_recall(gold_phrases, predicted) -> EvalReport:
    """Recall of whole coordination phrases, bucketed by phrase label.

    ``gold_phrases`` holds ``(label, (start, end))`` items (inclusive spans);
    ``predicted`` holds, per item, a phrase span, a span tuple whose first and
    last members delimit the phrase, or None.
    """
    gold_phrases, predicted = list(gold_phrases), list(predicted)
    if len(gold_phrases) != len(predicted):
        raise ValueError(f"{len(gold_phrases)} gold phrases but {len(predicted)} predictions")
    by_gold, by_correct = Counter(), Counter()
    n_pred = 0
    for (label, span), p in zip(gold_phrases, predicted):
        by_gold[label] += 1
        if p is None:
            continue
        n_pred += 1
        if _phrase_of(p) == tuple(span):
            by_correct[label] += 1
    per_type = {t: {"gold": c, "correct": by_correct[t], "recall": by_correct[t] / c}
                for t, c in sorted(by_gold.items())}
    return EvalReport(sum(by_gold.values()), n_pred, sum(by_correct.values()), per_type)


def _phrase_of(p) -> tuple[int, int]:
    if hasattr(p, "phrase"):
        return tuple(p.phrase)
    if len(p) == 2 and all(isinstance(x, int) for x in p):
        return (p[0], p[1])
    return (p[0][0], p[-1][1])


def kfold(items, k: int = 5, seed: int = 0):
    """Deterministic k-fold split; yields ``(train, test)`` lists."""
    items = list(items)
    if not 2 <= k <= len(items):
        raise ValueError(f"need 2 <= k <= {len(items)}")
    order = list(range(len(items)))
    random.Random(seed).shuffle(order)
    folds = [order[f::k] for f in range(k)]
    for f in range(k):
        held = set(folds[f])
        yield [items[i] for i in order if i not in held], [items[i] for i in folds[f]]
