"""Logistic gates over biLSTM states: is this word a coordinator worth resolving,
and does the chosen pair form an NP coordination?"""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field

import numpy as np

from .cli.evaluation import f1_score, normalize_type
from .diffcore import value as V
from .diffcore.nn import EmbeddingTable, LstmParams, ParamStore, bilstm_at
from .diffcore.optim import Sgd
from .diffcore.value import backward

log = logging.getLogger(__name__)
_P_MIN = 1e-12


@dataclass
class GateConfig:
    emb_dim: int = 50
    lstm_dim: int = 50
    epochs: int = 10
    lr: float = 0.1
    seed: int = 0
    threshold: float = 0.5
    unk_prob: float = 0.25

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class GateExample:
    words: list[str]
    k: int  # coordinator position, 0-based
    label: int
    span: tuple[int, int] | None = None  # inclusive window (i, m) the NP gate is restricted to


@dataclass
class GateDecision:
    probability: float
    accept: bool


class GateModel:
    def __init__(self, config: GateConfig, words, singletons=()):
        self.config = config
        st = self.store = ParamStore(config.seed)
        self.emb = EmbeddingTable(st, "emb", words, config.emb_dim)
        self.fwd = LstmParams.create(st, "lstm_f", config.emb_dim, config.lstm_dim)
        self.bwd = LstmParams.create(st, "lstm_b", config.emb_dim, config.lstm_dim)
        self.v = st.add("v", (2 * config.lstm_dim,))
        self.b = st.add("b", (), init="zeros")
        self.singletons = sorted(singletons)
        self._single = set(self.emb.ids(self.singletons).tolist()) - {0}

    @property
    def threshold(self) -> float:
        return self.config.threshold

    def logit(self, words, k: int, rng=None):
        """``v . biLSTM(words, k) + b`` for a 0-based position ``k``."""
        if not 0 <= k < len(words):
            raise IndexError(f"position {k} outside 0..{len(words) - 1}")
        ids = self.emb.ids(words)
        if rng is not None and self._single and self.config.unk_prob > 0:
            drop = np.array([i in self._single for i in ids]) & (rng.random(len(ids)) < self.config.unk_prob)
            ids = np.where(drop, 0, ids)
        vecs = [V.getitem(self.emb.weights, int(i)) for i in ids]
        h = bilstm_at(self.fwd, self.bwd, vecs, k + 1)
        return V.add(V.total(V.mul(self.v, h)), self.b)

    def probability(self, words, k: int) -> float:
        z = self.logit(words, k).data.item()
        p = 1.0 / (1.0 + np.exp(-z)) if z >= 0 else np.exp(z) / (1.0 + np.exp(z))
        # keep the probability strictly inside (0, 1) even when the logit saturates
        return float(np.clip(p, _P_MIN, 1.0 - _P_MIN))

    def decide(self, words, k: int, threshold: float | None = None) -> GateDecision:
        p = self.probability(words, k)
        t = self.threshold if threshold is None else threshold
        return GateDecision(p, p >= t)

    def state(self) -> dict:
        return {"config": self.config.to_dict(), "vocab": self.emb.symbols[1:], "singletons": self.singletons,
                "params": self.store.snapshot()}

    @classmethod
    def from_state(cls, state: dict) -> "GateModel":
        gate = cls(GateConfig(**state["config"]), state["vocab"], state.get("singletons", ()))
        gate.store.restore(state["params"])
        return gate


def _words(sentence) -> list[str]:
    return [t if isinstance(t, str) else t.word for t in sentence]


def classify_coordination(gate: GateModel, sentence, k: int, threshold: float | None = None) -> GateDecision:
    """Does the word at ``k`` conjoin spans of the type this gate was trained for?"""
    return gate.decide(_words(sentence), k, threshold)


def classify_np(gate: GateModel, sentence, candidate, k: int, threshold: float | None = None) -> GateDecision:
    """NP-coordination probability, reading only the tokens from ``i`` to ``m``."""
    (i, _), (_, m) = getattr(candidate, "spans", candidate)
    words = _words(sentence)
    if not 0 <= i <= k <= m < len(words):
        raise IndexError(f"coordinator {k} outside candidate window ({i}, {m})")
    return gate.decide(words[i:m + 1], k - i, threshold)


def _example_input(ex: GateExample):
    if ex.span is None:
        return ex.words, ex.k
    i, m = ex.span
    return ex.words[i:m + 1], ex.k - i


def gate_f1(gate: GateModel, examples) -> float:
    tp = fp = fn = 0
    for ex in examples:
        words, k = _example_input(ex)
        yes = gate.decide(words, k).accept
        tp += yes and ex.label == 1
        fp += yes and ex.label == 0
        fn += (not yes) and ex.label == 1
    p = tp / (tp + fp) if tp + fp else 0.0
    r = tp / (tp + fn) if tp + fn else 0.0
    return f1_score(p, r)


def gate_accuracy(gate: GateModel, examples) -> float:
    examples = list(examples)
    if not examples:
        return 0.0
    hits = 0
    for ex in examples:
        words, k = _example_input(ex)
        hits += gate.decide(words, k).accept == bool(ex.label)
    return hits / len(examples)


@dataclass
class GateTrainResult:
    gate: GateModel
    losses: list[float] = field(default_factory=list)
    dev_f1: list[float] = field(default_factory=list)
    best_epoch: int = 0


def train_gate(examples, config: GateConfig | None = None, dev=None) -> GateTrainResult:
    """Log-loss SGD over the examples, shuffled each epoch with the run seed.

    With ``dev`` examples the snapshot with the best dev F1 is kept.
    """
    config = config or GateConfig()
    examples = list(examples)
    labels = {ex.label for ex in examples}
    if len(labels) < 2:
        raise ValueError(f"training examples must contain both classes, got {sorted(labels)}")
    counts: dict[str, int] = {}
    for ex in examples:
        words, _ = _example_input(ex)
        for w in words:
            counts[w] = counts.get(w, 0) + 1
    gate = GateModel(config, sorted(counts), [w for w, c in counts.items() if c == 1])
    rng = np.random.default_rng(config.seed)
    opt = Sgd(list(gate.store), lr=config.lr)
    result = GateTrainResult(gate)
    best, snap = -1.0, None
    for epoch in range(1, config.epochs + 1):
        total = 0.0
        for idx in rng.permutation(len(examples)):
            ex = examples[idx]
            words, k = _example_input(ex)
            loss, _ = V.logistic_loss(gate.logit(words, k, rng), float(ex.label))
            total += loss.data.item()
            gate.store.zero_grad()
            backward(loss)
            opt.step()
        result.losses.append(total / len(examples))
        if dev:
            f = gate_f1(gate, dev)
            result.dev_f1.append(f)
            if f > best:
                best, snap, result.best_epoch = f, gate.store.snapshot(), epoch
        log.info("gate epoch %d loss %.4f", epoch, result.losses[-1])
    if snap is not None:
        gate.store.restore(snap)
    elif config.epochs:
        result.best_epoch = config.epochs
    gate.store.zero_grad()
    return result


def coordination_examples(instances) -> list[GateExample]:
    """One example per coordinator; positive when it has a gold conjunct pair."""
    return [GateExample(list(inst.words), inst.coord_index, int(inst.gold is not None)) for inst in instances]


def np_examples(instances) -> list[GateExample]:
    """Examples for the NP gate, restricted to the gold coordination window."""
    out = []
    for inst in instances:
        if inst.gold is None:
            continue
        (i, _), (_, m) = inst.gold
        out.append(GateExample(list(inst.words), inst.coord_index, int(normalize_type(inst.coord_type) == "NP"),
                               (i, m)))
    return out
