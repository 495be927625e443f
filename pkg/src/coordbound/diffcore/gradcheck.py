"""Central finite-difference check of analytic gradients."""

from __future__ import annotations

import numpy as np

from .value import backward


def relative_error(analytic: float, numeric: float, floor: float = 1e-8) -> float:
    return abs(analytic - numeric) / max(abs(analytic), abs(numeric), floor)


def grad_check(build_loss, params, h: float = 1e-4, max_entries: int | None = 40, seed: int = 0) -> float:
    """Largest relative error between backprop and central differences.

    ``build_loss`` must rebuild the graph from the current parameter values
    and return a scalar :class:`Value`. At most ``max_entries`` coordinates per
    parameter are probed, chosen with ``seed``.
    """
    params = list(params)
    for p in params:
        p.grad = None
    loss = build_loss()
    backward(loss)
    analytic = [p.grad_or_zero().copy() for p in params]
    rng = np.random.default_rng(seed)
    worst = 0.0
    for p, grad in zip(params, analytic):
        flat = p.data.reshape(-1)
        idx = np.arange(flat.size)
        if max_entries is not None and flat.size > max_entries:
            idx = rng.choice(flat.size, size=max_entries, replace=False)
        for k in idx:
            old = flat[k]
            flat[k] = old + h
            up = build_loss().data.item()
            flat[k] = old - h
            down = build_loss().data.item()
            flat[k] = old
            numeric = (up - down) / (2 * h)
            worst = max(worst, relative_error(float(grad.reshape(-1)[k]), numeric))
    for p in params:
        p.grad = None
    return worst
