"""Parameter containers and the small network pieces built on :mod:`value`."""

from __future__ import annotations

from collections import OrderedDict
from dataclasses import dataclass

import numpy as np

from . import value as V
from .value import ShapeError, Value, parameter

INIT_SCALE = 0.1
UNK = "<unk>"


class ParamStore:
    """Named trainable arrays, initialised uniform(-0.1, 0.1) from one RNG."""

    def __init__(self, seed: int = 0):
        self.rng = np.random.default_rng(seed)
        self.params: OrderedDict[str, Value] = OrderedDict()

    def add(self, name: str, shape, init: str = "uniform") -> Value:
        if name in self.params:
            raise KeyError(f"duplicate parameter {name!r}")
        if init == "zeros":
            data = np.zeros(shape)
        else:
            data = self.rng.uniform(-INIT_SCALE, INIT_SCALE, size=shape)
        p = parameter(data, name=name)
        self.params[name] = p
        return p

    def __getitem__(self, name: str) -> Value:
        return self.params[name]

    def __iter__(self):
        return iter(self.params.values())

    def __len__(self):
        return len(self.params)

    def zero_grad(self):
        for p in self.params.values():
            p.grad = None

    def snapshot(self) -> dict[str, np.ndarray]:
        return {k: p.data.copy() for k, p in self.params.items()}

    def restore(self, snap: dict[str, np.ndarray]) -> None:
        for k, arr in snap.items():
            self.params[k].data = arr.copy()

    def size(self) -> int:
        return sum(p.data.size for p in self.params.values())


@dataclass
class LstmParams:
    w: Value  # (4h, d) input weights, gates i, f, g, o
    u: Value  # (4h, h) recurrent weights
    b: Value  # (4h,)

    @classmethod
    def create(cls, store: ParamStore, name: str, input_dim: int, hidden_dim: int = 50) -> "LstmParams":
        return cls(store.add(f"{name}.w", (4 * hidden_dim, input_dim)),
                   store.add(f"{name}.u", (4 * hidden_dim, hidden_dim)),
                   store.add(f"{name}.b", (4 * hidden_dim,)))

    @property
    def input_dim(self) -> int:
        return self.w.data.shape[1]

    @property
    def hidden_dim(self) -> int:
        return self.u.data.shape[1]

    def run(self, x: Value, lengths=None) -> Value:
        return V.lstm(x, self.w, self.u, self.b, lengths)


@dataclass
class MlpParams:
    w: Value  # (hidden, in)
    b: Value  # (hidden,)
    v: Value  # (out, hidden)
    activation: str = "relu"

    @classmethod
    def create(cls, store: ParamStore, name: str, input_dim: int, hidden_dim: int, output_dim: int = 1,
               activation: str = "relu") -> "MlpParams":
        if activation not in ("relu", "sigmoid"):
            raise ValueError(f"unknown activation {activation!r}")
        return cls(store.add(f"{name}.w", (hidden_dim, input_dim)),
                   store.add(f"{name}.b", (hidden_dim,)),
                   store.add(f"{name}.v", (output_dim, hidden_dim)),
                   activation)


class EmbeddingTable:
    """Symbol -> vector lookup; index 0 is the shared unknown-symbol vector."""

    def __init__(self, store: ParamStore, name: str, symbols, dim: int, trainable: bool = True):
        self.symbols = [UNK] + [s for s in dict.fromkeys(symbols) if s != UNK]
        self.index = {s: i for i, s in enumerate(self.symbols)}
        self.dim = dim
        self.weights = store.add(name, (len(self.symbols), dim))
        self.weights.requires_grad = trainable

    def ids(self, symbols) -> np.ndarray:
        return np.array([self.index.get(s, 0) for s in symbols], dtype=np.int64)

    def lookup(self, symbols) -> Value:
        return V.take(self.weights, self.ids(symbols))

    def load_vectors(self, path) -> int:
        """Overwrite rows from a text file of ``symbol v1 v2 ...`` lines; returns rows loaded."""
        loaded = 0
        with open(path, encoding="utf-8") as f:
            for line in f:
                parts = line.split()
                if len(parts) != self.dim + 1 or parts[0] not in self.index:
                    continue
                self.weights.data[self.index[parts[0]]] = np.array(parts[1:], dtype=float)
                loaded += 1
        return loaded


def lstm_encode(params: LstmParams, inputs) -> Value:
    """Final hidden state after reading ``inputs`` in order (zero vector when empty)."""
    inputs = list(inputs)
    if not inputs:
        return V.const(np.zeros(params.hidden_dim))
    for x in inputs:
        if x.data.shape != (params.input_dim,):
            raise ShapeError(f"lstm input of shape {x.data.shape}, expected ({params.input_dim},)")
    x = V.reshape(V.concat(inputs, axis=0), (1, len(inputs), params.input_dim))
    out = params.run(x)
    return V.reshape(V.getitem(out, (0, -1)), (params.hidden_dim,))


def bilstm_at(fwd: LstmParams, bwd: LstmParams, inputs, i: int) -> Value:
    """Forward encoding of ``inputs[:i]`` joined with the backward encoding of
    ``inputs[i-1:]`` read right to left; ``i`` is 1-based."""
    inputs = list(inputs)
    if not 1 <= i <= len(inputs):
        raise IndexError(f"position {i} outside 1..{len(inputs)}")
    return V.concat([lstm_encode(fwd, inputs[:i]), lstm_encode(bwd, inputs[i - 1:][::-1])], axis=0)


def mlp_apply(params: MlpParams, x: Value) -> Value:
    """``v . g(w x + b)``; works on a single vector or a batch of rows."""
    if x.data.shape[-1] != params.w.data.shape[1]:
        raise ShapeError(f"mlp input {x.shape}, expected last dim {params.w.data.shape[1]}")
    pre = V.linear(x, params.w, params.b)
    hidden = V.relu(pre) if params.activation == "relu" else V.sigmoid(pre)
    return V.linear(hidden, params.v)
