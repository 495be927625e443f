"""Tape-free reverse-mode autodiff over numpy arrays.

Every op returns a :class:`Value` holding its parents and a closure that
pushes the output gradient back to them. :func:`backward` walks the graph in
reverse topological order.
"""

from __future__ import annotations

import numpy as np

DTYPE = np.float64
# D17: sqrt(x + eps) keeps the euclidean distance differentiable at zero.
DIST_EPS = 1e-12


class ShapeError(ValueError):
    pass


class Value:
    __slots__ = ("data", "grad", "parents", "_backward", "requires_grad", "name")

    def __init__(self, data, parents=(), backward=None, requires_grad=False, name=None):
        self.data = np.asarray(data, dtype=DTYPE)
        self.grad = None
        self.parents = parents
        self._backward = backward
        self.requires_grad = requires_grad or any(p.requires_grad for p in parents)
        self.name = name

    @property
    def shape(self):
        return self.data.shape

    def __repr__(self):
        tag = f" {self.name}" if self.name else ""
        return f"Value{tag}(shape={self.data.shape})"

    def accumulate(self, g):
        if self.grad is None:
            self.grad = np.array(g, dtype=DTYPE, copy=True).reshape(self.data.shape)
        else:
            self.grad += g

    def zero_grad(self):
        self.grad = None

    def grad_or_zero(self) -> np.ndarray:
        return self.grad if self.grad is not None else np.zeros_like(self.data)

    def item(self) -> float:
        return float(self.data.reshape(-1)[0]) if self.data.size == 1 else float("nan")

    # operator sugar
    def __add__(self, other):
        return add(self, other)

    def __sub__(self, other):
        return sub(self, other)

    def __mul__(self, other):
        return mul(self, other)

    def __matmul__(self, other):
        return matmul(self, other)

    def __getitem__(self, key):
        return getitem(self, key)


def parameter(data, name=None) -> Value:
    return Value(data, requires_grad=True, name=name)


def const(data) -> Value:
    return Value(data)


def _v(x) -> Value:
    return x if isinstance(x, Value) else Value(x)


def _unbroadcast(g: np.ndarray, shape) -> np.ndarray:
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for ax, n in enumerate(shape):
        if n == 1 and g.shape[ax] != 1:
            g = g.sum(axis=ax, keepdims=True)
    return g


def backward(loss: Value) -> None:
    """Accumulate d(loss)/d(node) into ``.grad`` of every node reachable from ``loss``."""
    if loss.data.size != 1:
        raise ShapeError(f"backward needs a scalar loss, got shape {loss.data.shape}")
    order = []
    seen = set()
    stack = [(loss, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node.parents:
            if id(p) not in seen and p.requires_grad:
                stack.append((p, False))
    loss.accumulate(np.ones_like(loss.data))
    for node in reversed(order):
        if node._backward is not None and node.grad is not None:
            node._backward(node.grad)


# elementwise and linear algebra


def add(a, b) -> Value:
    a, b = _v(a), _v(b)

    def bw(g):
        if a.requires_grad:
            a.accumulate(_unbroadcast(g, a.shape))
        if b.requires_grad:
            b.accumulate(_unbroadcast(g, b.shape))

    return Value(a.data + b.data, (a, b), bw)


def sub(a, b) -> Value:
    a, b = _v(a), _v(b)

    def bw(g):
        if a.requires_grad:
            a.accumulate(_unbroadcast(g, a.shape))
        if b.requires_grad:
            b.accumulate(_unbroadcast(-g, b.shape))

    return Value(a.data - b.data, (a, b), bw)


def mul(a, b) -> Value:
    a, b = _v(a), _v(b)

    def bw(g):
        if a.requires_grad:
            a.accumulate(_unbroadcast(g * b.data, a.shape))
        if b.requires_grad:
            b.accumulate(_unbroadcast(g * a.data, b.shape))

    return Value(a.data * b.data, (a, b), bw)


def matmul(a, b) -> Value:
    a, b = _v(a), _v(b)
    if a.data.shape[-1] != b.data.shape[0]:
        raise ShapeError(f"matmul {a.shape} @ {b.shape}")

    def bw(g):
        if a.requires_grad:
            if b.data.ndim == 1:
                a.accumulate(np.multiply.outer(g, b.data))
            else:
                a.accumulate(g @ b.data.T)
        if b.requires_grad:
            if a.data.ndim == 1:
                b.accumulate(np.multiply.outer(a.data, g))
            else:
                b.accumulate(a.data.T @ g)

    return Value(a.data @ b.data, (a, b), bw)


def linear(x, w, b=None) -> Value:
    """``x @ w.T + b`` for x of shape (..., d) and w of shape (k, d)."""
    x, w = _v(x), _v(w)
    if x.data.shape[-1] != w.data.shape[1]:
        raise ShapeError(f"linear: input {x.shape} vs weight {w.shape}")
    out = x.data @ w.data.T
    if b is not None:
        b = _v(b)
        out = out + b.data
    parents = (x, w) if b is None else (x, w, b)

    def bw(g):
        g2 = g.reshape(-1, g.shape[-1])
        if x.requires_grad:
            x.accumulate(g @ w.data)
        if w.requires_grad:
            w.accumulate(g2.T @ x.data.reshape(-1, x.data.shape[-1]))
        if b is not None and b.requires_grad:
            b.accumulate(g2.sum(axis=0))

    return Value(out, parents, bw)


def _unary(x, f, df_from_out):
    x = _v(x)
    out = f(x.data)

    def bw(g):
        x.accumulate(g * df_from_out(out, x.data))

    return Value(out, (x,), bw)


def _sigmoid(z):
    return np.where(z >= 0, 1.0 / (1.0 + np.exp(-np.abs(z))), np.exp(-np.abs(z)) / (1.0 + np.exp(-np.abs(z))))


def sigmoid(x) -> Value:
    return _unary(x, _sigmoid, lambda y, _: y * (1.0 - y))


def tanh(x) -> Value:
    return _unary(x, np.tanh, lambda y, _: 1.0 - y * y)


def relu(x) -> Value:
    return _unary(x, lambda z: np.maximum(z, 0.0), lambda _, z: (z > 0).astype(DTYPE))


def total(x) -> Value:
    x = _v(x)

    def bw(g):
        x.accumulate(np.broadcast_to(g, x.shape))

    return Value(np.sum(x.data), (x,), bw)


def reshape(x, shape) -> Value:
    x = _v(x)

    def bw(g):
        x.accumulate(g.reshape(x.shape))

    return Value(x.data.reshape(shape), (x,), bw)


def getitem(x, key) -> Value:
    x = _v(x)

    def bw(g):
        full = np.zeros_like(x.data)
        np.add.at(full, key, g)
        x.accumulate(full)

    return Value(x.data[key], (x,), bw)


def take(x, idx) -> Value:
    """Rows of ``x`` (first axis) at integer positions ``idx`` of any shape."""
    x = _v(x)
    idx = np.asarray(idx, dtype=np.int64)

    def bw(g):
        full = np.zeros_like(x.data)
        np.add.at(full, idx.reshape(-1), g.reshape(-1, *x.data.shape[1:]))
        x.accumulate(full)

    return Value(x.data[idx], (x,), bw)


def concat(values, axis=-1) -> Value:
    values = [_v(v) for v in values]
    datas = [v.data for v in values]
    out = np.concatenate(datas, axis=axis)
    ax = axis % out.ndim
    bounds = np.cumsum([0] + [d.shape[ax] for d in datas])

    def bw(g):
        for v, lo, hi in zip(values, bounds[:-1], bounds[1:]):
            if v.requires_grad:
                sl = [slice(None)] * g.ndim
                sl[ax] = slice(lo, hi)
                v.accumulate(g[tuple(sl)])

    return Value(out, tuple(values), bw)


def euclidean(a, b) -> Value:
    """Row-wise euclidean distance ``sqrt(sum((a-b)^2) + eps)``, output (..., 1)."""
    a, b = _v(a), _v(b)
    if a.shape != b.shape:
        raise ShapeError(f"euclidean: {a.shape} vs {b.shape}")
    diff = a.data - b.data
    d = np.sqrt(np.sum(diff * diff, axis=-1, keepdims=True) + DIST_EPS)

    def bw(g):
        gd = g * diff / d
        if a.requires_grad:
            a.accumulate(gd)
        if b.requires_grad:
            b.accumulate(-gd)

    return Value(d, (a, b), bw)


def hinge_rank(scores, gold: int, margin: float = 1.0) -> Value:
    """``max(0, margin - (s_gold - max_wrong))``; zero when gold is the only candidate."""
    scores = _v(scores)
    s = scores.data.reshape(-1)
    if not 0 <= gold < len(s):
        raise IndexError(f"gold index {gold} out of range for {len(s)} candidates")
    if len(s) == 1:
        return Value(0.0, (scores,), lambda g: None)
    wrong = np.delete(np.arange(len(s)), gold)
    w = int(wrong[np.argmax(s[wrong])])
    loss = max(0.0, margin - (s[gold] - s[w]))

    def bw(g):
        if loss > 0:
            full = np.zeros_like(s)
            full[gold] -= g
            full[w] += g
            scores.accumulate(full.reshape(scores.shape))

    return Value(loss, (scores,), bw)


def logistic_loss(logit, label: float) -> tuple[Value, float]:
    """Binary log-loss on a scalar logit; returns the loss and the probability."""
    logit = _v(logit)
    z = float(logit.data.reshape(-1)[0])
    p = float(_sigmoid(np.array(z)))
    loss = np.logaddexp(0.0, -z) if label else np.logaddexp(0.0, z)

    def bw(g):
        logit.accumulate(np.full(logit.shape, g * (p - label)))

    return Value(loss, (logit,), bw), p


# fused LSTM


def lstm(x, w, u, b, lengths=None) -> Value:
    """Run an LSTM over a padded batch.

    ``x`` is (B, T, d); ``w`` (4h, d), ``u`` (4h, h), ``b`` (4h,) with gates
    ordered input, forget, candidate, output. Steps at or beyond a sequence's
    length carry the previous state, so ``out[:, -1]`` is each sequence's final
    hidden state (zero for empty sequences).
    """
    x, w, u, b = _v(x), _v(w), _v(u), _v(b)
    B, T, d = x.data.shape
    h4 = w.data.shape[0]
    hdim = h4 // 4
    if w.data.shape[1] != d or u.data.shape != (h4, hdim) or b.data.shape != (h4,):
        raise ShapeError(f"lstm: x {x.shape}, w {w.shape}, u {u.shape}, b {b.shape}")
    lengths = np.full(B, T) if lengths is None else np.asarray(lengths)
    W, U, bias = w.data, u.data, b.data
    xw = x.data @ W.T + bias  # (B, T, 4h)
    h = np.zeros((B, hdim))
    c = np.zeros((B, hdim))
    out = np.empty((B, T, hdim))
    cache = []
    for t in range(T):
        z = xw[:, t] + h @ U.T
        ifo = _sigmoid(z[:, np.r_[0:2 * hdim, 3 * hdim:4 * hdim]])
        ig, fg, og = ifo[:, :hdim], ifo[:, hdim:2 * hdim], ifo[:, 2 * hdim:]
        gg = np.tanh(z[:, 2 * hdim:3 * hdim])
        c_new = fg * c + ig * gg
        tc = np.tanh(c_new)
        h_new = og * tc
        m = (t < lengths)[:, None].astype(DTYPE)
        cache.append((ig, fg, gg, og, c, tc, h, m))
        c = m * c_new + (1 - m) * c
        h = m * h_new + (1 - m) * h
        out[:, t] = h

    def bw(gout):
        dW = np.zeros_like(W)
        dU = np.zeros_like(U)
        db = np.zeros_like(bias)
        dx = np.zeros_like(x.data)
        dh_next = np.zeros((B, hdim))
        dc_next = np.zeros((B, hdim))
        for t in range(T - 1, -1, -1):
            ig, fg, gg, og, c_prev, tc, h_prev, m = cache[t]
            dh = gout[:, t] + dh_next
            dh_new = dh * m
            dc_new = dc_next * m + dh_new * og * (1.0 - tc * tc)
            dz = np.concatenate([
                dc_new * gg * ig * (1.0 - ig),
                dc_new * c_prev * fg * (1.0 - fg),
                dc_new * ig * (1.0 - gg * gg),
                dh_new * tc * og * (1.0 - og),
            ], axis=1)
            dW += dz.T @ x.data[:, t]
            dU += dz.T @ h_prev
            db += dz.sum(axis=0)
            dx[:, t] = dz @ W
            dh_next = dz @ U + dh * (1 - m)
            dc_next = dc_new * fg + dc_next * (1 - m)
        if x.requires_grad:
            x.accumulate(dx)
        if w.requires_grad:
            w.accumulate(dW)
        if u.requires_grad:
            u.accumulate(dU)
        if b.requires_grad:
            b.accumulate(db)

    return Value(out, (x, w, u, b), bw)
