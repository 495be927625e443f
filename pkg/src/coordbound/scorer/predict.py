"""End-to-end prediction: gate, candidates, scoring, optional NP check."""

from __future__ import annotations

from dataclasses import dataclass, field

from ..corpus.coordination import is_coord_word
from ..corpus.trees import Token
from ..gatekeepers import GateModel, classify_coordination, classify_np
from .model import ScorerModel
from .prepare import Preparer
from .train import best_index


@dataclass
class Prediction:
    pair: tuple | None
    reason: str  # "scored", "gate", "np_gate", "no_candidates", "not_coordinator"
    scores: list[float] = field(default_factory=list)
    probability: float | None = None

    @property
    def phrase(self):
        return None if self.pair is None else (self.pair[0][0], self.pair[1][1])


def as_tokens(sentence) -> list[Token]:
    out = []
    for i, t in enumerate(sentence):
        if isinstance(t, Token):
            out.append(t)
        else:
            word, pos = t
            out.append(Token(i, word, pos))
    return out


def predict(model: ScorerModel, gates: dict | None, sentence, coord_index: int, preparer: Preparer,
            np_mode: bool = False) -> Prediction:
    """Conjunct pair for the coordinator at ``coord_index`` or None.

    ``gates`` may hold a ``"coord"`` and an ``"np"`` :class:`GateModel`; missing
    gates accept everything. In NP mode the NP gate must also accept the
    winning pair.
    """
    tokens = as_tokens(sentence)
    if not 0 <= coord_index < len(tokens):
        raise IndexError(f"coordinator index {coord_index} outside 0..{len(tokens) - 1}")
    if not is_coord_word(tokens[coord_index].word):
        return Prediction(None, "not_coordinator")
    gates = gates or {}
    coord_gate: GateModel | None = gates.get("coord")
    if coord_gate is not None:
        d = classify_coordination(coord_gate, tokens, coord_index)
        if not d.accept:
            return Prediction(None, "gate", probability=d.probability)
    prep = preparer.prepare_sentence(tokens, coord_index)
    scores = model.scores(prep)
    k = best_index(scores)
    if k is None:
        return Prediction(None, "no_candidates")
    pair = prep.candidates[k].spans
    if np_mode and gates.get("np") is not None:
        d = classify_np(gates["np"], tokens, pair, coord_index)
        if not d.accept:
            return Prediction(None, "np_gate", scores.tolist(), d.probability)
    return Prediction(pair, "scored", scores.tolist())
