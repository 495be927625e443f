"""The candidate scorer: symmetry distance, replacement vectors and chart features
fused by an MLP into one score per candidate pair."""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import asdict, dataclass, field

import numpy as np

from ..candgen import CandidatePair
from ..diffcore import value as V
from ..diffcore.nn import EmbeddingTable, LstmParams, MlpParams, ParamStore, lstm_encode, mlp_apply
from ..diffcore.value import Value

COMPONENTS = ("sym", "repl_w", "repl_p", "feats")
MODES = ("path", "pos")
N_FEATS = 3


@dataclass
class ScorerConfig:
    mode: str = "path"  # symmetry inputs: label paths ("path") or POS tags ("pos")
    lstm_dim: int = 50
    emb_dim: int = 100
    mlp_hidden: int = 100
    epochs: int = 20
    lr: float = 0.001
    seed: int = 0
    unk_prob: float = 0.25
    components: tuple = COMPONENTS

    def __post_init__(self):
        self.components = tuple(self.components)
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        bad = set(self.components) - set(COMPONENTS)
        if bad or not self.components:
            raise ValueError(f"components must be a non-empty subset of {COMPONENTS}, got {self.components}")
        for name in ("lstm_dim", "emb_dim", "mlp_hidden"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["components"] = list(self.components)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ScorerConfig":
        return cls(**d)


@dataclass
class Vocab:
    words: list[str] = field(default_factory=list)
    pos: list[str] = field(default_factory=list)
    labels: list[str] = field(default_factory=list)
    word_singletons: list[str] = field(default_factory=list)
    pos_singletons: list[str] = field(default_factory=list)

    @classmethod
    def from_prepared(cls, prepared) -> "Vocab":
        wc, pc, lc = Counter(), Counter(), Counter()
        seen = set()
        for p in prepared:
            if id(p.words) not in seen:
                seen.add(id(p.words))
                wc.update(p.words)
                pc.update(p.pos)
            for paths in p.span_paths.values():
                for path in paths:
                    lc.update(path[1:])
        return cls(sorted(wc), sorted(pc), sorted(lc),
                   sorted(w for w, c in wc.items() if c == 1), sorted(t for t, c in pc.items() if c == 1))


class ScorerModel:
    """All trainable pieces of the scorer, held in one :class:`ParamStore`."""

    def __init__(self, config: ScorerConfig, vocab: Vocab):
        self.config = config
        self.vocab = vocab
        c = config
        st = self.store = ParamStore(c.seed)
        self.word_emb = EmbeddingTable(st, "emb.word", vocab.words, c.emb_dim)
        self.pos_emb = EmbeddingTable(st, "emb.pos", vocab.pos, c.emb_dim)
        self.label_emb = EmbeddingTable(st, "emb.label", vocab.labels, c.emb_dim)
        self.path_lstm = LstmParams.create(st, "lstm.path", c.emb_dim, c.lstm_dim)
        span_in = c.lstm_dim if c.mode == "path" else c.emb_dim
        self.span_lstm = LstmParams.create(st, "lstm.span", span_in, c.lstm_dim)
        self.word_f = LstmParams.create(st, "lstm.word_f", c.emb_dim, c.lstm_dim)
        self.word_b = LstmParams.create(st, "lstm.word_b", c.emb_dim, c.lstm_dim)
        self.pos_f = LstmParams.create(st, "lstm.pos_f", c.emb_dim, c.lstm_dim)
        self.pos_b = LstmParams.create(st, "lstm.pos_b", c.emb_dim, c.lstm_dim)
        self.mlp = MlpParams.create(st, "mlp", self.input_dim, c.mlp_hidden, 1, "relu")
        self._word_single = set(self.word_emb.ids(vocab.word_singletons).tolist()) - {0}
        self._pos_single = set(self.pos_emb.ids(vocab.pos_singletons).tolist()) - {0}

    @property
    def input_dim(self) -> int:
        return 1 + 8 * self.config.lstm_dim + N_FEATS

    def parameters(self) -> list[Value]:
        return list(self.store)

    # persistence

    def state(self) -> dict:
        return {"config": self.config.to_dict(), "vocab": asdict(self.vocab), "params": self.store.snapshot()}

    @classmethod
    def from_state(cls, state: dict) -> "ScorerModel":
        model = cls(ScorerConfig.from_dict(state["config"]), Vocab(**state["vocab"]))
        params = state["params"]
        missing = set(model.store.params) ^ set(params)
        if missing:
            raise ValueError(f"parameter names do not match: {sorted(missing)}")
        for k, arr in params.items():
            if model.store[k].data.shape != arr.shape:
                raise ValueError(f"parameter {k} has shape {arr.shape}, expected {model.store[k].data.shape}")
        model.store.restore(params)
        return model

    def header(self) -> str:
        return json.dumps({"config": self.config.to_dict(), "vocab": asdict(self.vocab)}, sort_keys=True)

    # building blocks

    def _ids(self, table: EmbeddingTable, symbols, singletons, rng) -> np.ndarray:
        ids = table.ids(symbols)
        if rng is not None and self.config.unk_prob > 0 and singletons:
            drop = np.array([i in singletons for i in ids]) & (rng.random(len(ids)) < self.config.unk_prob)
            ids = np.where(drop, 0, ids)
        return ids

    def _prefix_tables(self, ids: np.ndarray, table: EmbeddingTable, fwd: LstmParams, bwd: LstmParams):
        """Zero-padded prefix and suffix encodings.

        ``F[i]`` encodes the first ``i`` tokens left to right; ``B[s]`` encodes
        the last ``s`` tokens right to left. Row 0 of each is the empty
        encoding (zeros).
        """
        n = len(ids)
        h = self.config.lstm_dim
        zero = V.const(np.zeros((1, h)))
        x = V.reshape(V.take(table.weights, ids), (1, n, table.dim))
        xr = V.reshape(V.take(table.weights, ids[::-1].copy()), (1, n, table.dim))
        f = V.reshape(fwd.run(x), (n, h))
        b = V.reshape(bwd.run(xr), (n, h))
        return V.concat([zero, f], axis=0), V.concat([zero, b], axis=0)

    def _repl_rows(self, F: Value, B: Value, n: int, spans) -> Value:
        i = np.array([s[0][0] for s in spans])
        j = np.array([s[0][1] for s in spans])
        l = np.array([s[1][0] for s in spans])
        m = np.array([s[1][1] for s in spans])
        return V.concat([V.take(F, i), V.take(B, n - l), V.take(F, j + 1), V.take(B, n - m - 1)], axis=1)

    def _path_symbol_ids(self, path) -> list[int]:
        offset = len(self.pos_emb.symbols)
        first = int(self.pos_emb.ids([path[0]])[0])
        return [first] + [offset + int(k) for k in self.label_emb.ids(path[1:])]

    def _encode_conjuncts(self, conjuncts) -> Value:
        """Span-LSTM encodings, one row per conjunct.

        In path mode each conjunct is a list of label paths; in POS mode a list
        of POS tags.
        """
        h = self.config.lstm_dim
        U = len(conjuncts)
        lens = np.array([len(c) for c in conjuncts])
        if np.any(lens == 0):
            raise ValueError("conjuncts must be non-empty")
        T = int(lens.max())
        if self.config.mode == "pos":
            ids = np.zeros((U, T), dtype=np.int64)
            for u, tags in enumerate(conjuncts):
                ids[u, :len(tags)] = self.pos_emb.ids(tags)
            x = V.take(self.pos_emb.weights, ids)
        else:
            paths = [p for conj in conjuncts for p in conj]
            plens = np.array([len(p) for p in paths])
            L = int(plens.max())
            ids = np.zeros((len(paths), L), dtype=np.int64)
            for r, p in enumerate(paths):
                ids[r, :len(p)] = self._path_symbol_ids(p)
            table = V.concat([self.pos_emb.weights, self.label_emb.weights], axis=0)
            pout = self.path_lstm.run(V.take(table, ids), plens)
            pfinal = V.getitem(pout, (slice(None), -1))
            padded = V.concat([V.const(np.zeros((1, h))), pfinal], axis=0)
            rows = np.zeros((U, T), dtype=np.int64)
            start = 1
            for u, ln in enumerate(lens):
                rows[u, :ln] = np.arange(start, start + ln)
                start += ln
            x = V.take(padded, rows)
        out = self.span_lstm.run(x, lens)
        return V.getitem(out, (slice(None), -1))

    def _sym_rows(self, conj_inputs: dict, spans) -> Value:
        keys = sorted(conj_inputs)
        where = {k: r for r, k in enumerate(keys)}
        enc = self._encode_conjuncts([conj_inputs[k] for k in keys])
        a = V.take(enc, np.array([where[s[0]] for s in spans]))
        b = V.take(enc, np.array([where[s[1]] for s in spans]))
        return V.euclidean(a, b)

    # scoring

    def forward(self, prep, rng=None) -> Value:
        """Scores for every candidate of a prepared instance, shape (C,).

        ``rng`` switches on unknown-word substitution for training.
        """
        cands = prep.candidates
        spans = [c.spans for c in cands]
        C = len(cands)
        n = len(prep.words)
        h = self.config.lstm_dim
        use = set(self.config.components)
        blocks = []
        if "sym" in use:
            if self.config.mode == "path":
                conj = {s: prep.span_paths[s] for pair in spans for s in pair}
            else:
                conj = {s: prep.pos[s[0]:s[1] + 1] for pair in spans for s in pair}
            blocks.append(self._sym_rows(conj, spans))
        else:
            blocks.append(V.const(np.zeros((C, 1))))
        for name, table, fwd, bwd, seq, single in (
                ("repl_w", self.word_emb, self.word_f, self.word_b, prep.words, self._word_single),
                ("repl_p", self.pos_emb, self.pos_f, self.pos_b, prep.pos, self._pos_single)):
            if name in use:
                F, B = self._prefix_tables(self._ids(table, seq, single, rng), table, fwd, bwd)
                blocks.append(self._repl_rows(F, B, n, spans))
            else:
                blocks.append(V.const(np.zeros((C, 4 * h))))
        feats = np.stack([c.feats() for c in cands]) if "feats" in use else np.zeros((C, N_FEATS))
        blocks.append(V.const(feats))
        x = V.concat(blocks, axis=1)
        return V.reshape(mlp_apply(self.mlp, x), (C,))

    def scores(self, prep) -> np.ndarray:
        if not prep.candidates:
            return np.zeros(0)
        return self.forward(prep).data.copy()


# single-candidate views of the same computation


def sym_score(model: ScorerModel, conj_a, conj_b) -> Value:
    """Euclidean distance between span-LSTM encodings of two conjuncts.

    Conjuncts are lists of label paths in path mode, lists of POS tags in POS mode.
    """
    enc = model._encode_conjuncts([conj_a, conj_b])
    return V.reshape(V.euclidean(V.getitem(enc, 0), V.getitem(enc, 1)), ())


def connection_point(model: ScorerModel, seq, i: int, j: int, level: str = "word") -> Value:
    """``LSTM_F(seq[1..i]) ∘ LSTM_B(seq[n..j])`` with 1-based ``i`` and ``j``.

    ``i = 0`` or ``j = n + 1`` give an empty side, encoded as zeros.
    """
    n = len(seq)
    if not 0 <= i < j <= n + 1:
        raise IndexError(f"connection point ({i}, {j}) invalid for length {n}")
    table, fwd, bwd = _level(model, level)
    vecs = [V.getitem(table.weights, int(k)) for k in table.ids(seq)]
    return V.concat([lstm_encode(fwd, vecs[:i]), lstm_encode(bwd, vecs[j - 1:][::-1])], axis=0)


def repl_vector(model: ScorerModel, seq, i: int, j: int, l: int, m: int, level: str = "word") -> Value:
    """Replacement vector for conjuncts ``seq[i..j]`` and ``seq[l..m]`` (0-based, inclusive).

    The first connection point joins the text before the first conjunct to the
    text from the second conjunct on; the second joins everything up to the end
    of the first conjunct to the text after the second.
    """
    if not 0 <= i <= j < l <= m < len(seq):
        raise IndexError(f"spans ({i},{j}) ({l},{m}) invalid for length {len(seq)}")
    return V.concat([connection_point(model, seq, i, l + 1, level),
                     connection_point(model, seq, j + 1, m + 2, level)], axis=0)


def _level(model: ScorerModel, level: str):
    if level == "word":
        return model.word_emb, model.word_f, model.word_b
    if level == "pos":
        return model.pos_emb, model.pos_f, model.pos_b
    raise ValueError(f"level must be 'word' or 'pos', got {level!r}")


def score_candidate(model: ScorerModel, words, pos, candidate: CandidatePair, conj_inputs=None) -> float:
    """Score one candidate. ``conj_inputs`` maps each span to its label paths (path mode)."""
    from .prepare import PreparedInstance

    prep = PreparedInstance(list(words), list(pos), [candidate], None, conj_inputs or {})
    return float(model.forward(prep).data[0])
