"""Plain SGD and Adam over a list of parameters."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .value import ShapeError, Value


def sgd_step(params, grads, learning_rate: float) -> None:
    for p, g in zip(params, grads):
        if g is None:
            continue
        if g.shape != p.data.shape:
            raise ShapeError(f"gradient {g.shape} for parameter {p.data.shape}")
        p.data -= learning_rate * g


@dataclass
class AdamState:
    m: list = field(default_factory=list)
    v: list = field(default_factory=list)
    t: int = 0


def adam_step(params, grads, state: AdamState, lr: float = 0.001, beta1: float = 0.9,
              beta2: float = 0.999, eps: float = 1e-8) -> None:
    if not state.m:
        state.m = [np.zeros_like(p.data) for p in params]
        state.v = [np.zeros_like(p.data) for p in params]
    state.t += 1
    c1 = 1.0 - beta1 ** state.t
    c2 = 1.0 - beta2 ** state.t
    for p, g, m, v in zip(params, grads, state.m, state.v):
        if g is None:
            g = np.zeros_like(p.data)
        elif g.shape != p.data.shape:
            raise ShapeError(f"gradient {g.shape} for parameter {p.data.shape}")
        m *= beta1
        m += (1.0 - beta1) * g
        v *= beta2
        v += (1.0 - beta2) * g * g
        p.data -= lr * (m / c1) / (np.sqrt(v / c2) + eps)


class Sgd:
    def __init__(self, params, lr: float = 0.1):
        self.params = [p for p in params if p.requires_grad]
        self.lr = lr

    def step(self):
        sgd_step(self.params, [p.grad for p in self.params], self.lr)


class Adam:
    def __init__(self, params, lr: float = 0.001, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.params: list[Value] = [p for p in params if p.requires_grad]
        self.hyper = dict(lr=lr, beta1=beta1, beta2=beta2, eps=eps)
        self.state = AdamState()

    def step(self):
        adam_step(self.params, [p.grad for p in self.params], self.state, **self.hyper)
