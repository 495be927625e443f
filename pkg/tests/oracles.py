"""Independent reference computations used by the tests.

Nothing here imports the chart or the autodiff code: the PCFG oracle
enumerates every derivation explicitly in probability space, and the network
oracles unroll the textbook equations with plain numpy on one vector at a time.
"""

from __future__ import annotations

import math
from collections import defaultdict

import numpy as np

MAX_CHAIN = 3


class DerivationEnumerator:
    """All derivations of a sentence under a PCFG given as plain rule dicts.

    A node may sit on at most ``MAX_CHAIN`` stacked unary rules, the same
    bound the chart uses. Each derivation is a nested tuple
    ``(symbol, start, end, children)`` paired with its probability.
    """

    def __init__(self, binary, unary, lexical, max_chain=MAX_CHAIN):
        self.binary = defaultdict(list)
        for (a, b, c), p in binary.items():
            self.binary[a].append((b, c, p))
        self.unary = defaultdict(list)
        for (a, b), p in unary.items():
            self.unary[a].append((b, p))
        self.lexical = defaultdict(dict)
        for (a, t), p in lexical.items():
            self.lexical[a][t] = p
        self.symbols = set(self.binary) | set(self.unary) | set(self.lexical)
        for rules in self.binary.values():
            for b, c, _ in rules:
                self.symbols |= {b, c}
        self.max_chain = max_chain
        self._memo = {}

    def derivations(self, sym, terms, i, j, chain=None):
        """List of (prob, tree) for ``sym`` over terms[i:j] with at most ``chain`` unaries on top."""
        chain = self.max_chain if chain is None else chain
        key = (sym, i, j, chain)
        if key in self._memo:
            return self._memo[key]
        out = []
        if j - i == 1 and terms[i] in self.lexical.get(sym, {}):
            out.append((self.lexical[sym][terms[i]], (sym, i, j, ())))
        if j - i > 1:
            for b, c, p in self.binary.get(sym, ()):
                for k in range(i + 1, j):
                    for pl, tl in self.derivations(b, terms, i, k):
                        for pr, tr in self.derivations(c, terms, k, j):
                            out.append((p * pl * pr, (sym, i, j, (tl, tr))))
        if chain > 0:
            for b, p in self.unary.get(sym, ()):
                for pc, tc in self.derivations(b, terms, i, j, chain - 1):
                    out.append((p * pc, (sym, i, j, (tc,))))
        self._memo[key] = out
        return out

    def analyse(self, start, terms):
        """Inside, marginal (inside*outside) and best-tree figures from full enumeration."""
        n = len(terms)
        full = self.derivations(start, terms, 0, n)
        total = sum(p for p, _ in full)
        marginal = defaultdict(float)
        inside = defaultdict(float)
        best = max(full, key=lambda x: x[0]) if full else (0.0, None)
        for p, tree in full:
            for node in _nodes(tree):
                marginal[node[:3]] += p
        for sym in self.symbols:
            for i in range(n):
                for j in range(i + 1, n + 1):
                    v = sum(p for p, _ in self.derivations(sym, terms, i, j))
                    if v:
                        inside[(sym, i, j)] = v
        return {"total": total, "count": len(full), "inside": dict(inside), "marginal": dict(marginal),
                "best_prob": best[0], "best_tree": best[1]}


def _nodes(tree):
    stack = [tree]
    while stack:
        node = stack.pop()
        yield node
        stack.extend(node[3])


def tree_spans(tree):
    """(symbol, start, end) of every node of an enumerated derivation."""
    return sorted(n[:3] for n in _nodes(tree))


# scalar network oracles

def sigmoid(x):
    return 1.0 / (1.0 + math.exp(-x))


def lstm_step(x, h, c, W, U, b):
    """One LSTM step written out gate by gate (gate order i, f, g, o)."""
    hd = len(h)
    z = [sum(W[r][k] * x[k] for k in range(len(x))) + sum(U[r][k] * h[k] for k in range(hd)) + b[r]
         for r in range(4 * hd)]
    i = [sigmoid(z[r]) for r in range(hd)]
    f = [sigmoid(z[hd + r]) for r in range(hd)]
    g = [math.tanh(z[2 * hd + r]) for r in range(hd)]
    o = [sigmoid(z[3 * hd + r]) for r in range(hd)]
    c_new = [f[r] * c[r] + i[r] * g[r] for r in range(hd)]
    h_new = [o[r] * math.tanh(c_new[r]) for r in range(hd)]
    return h_new, c_new


def lstm_final(xs, W, U, b):
    hd = len(b) // 4
    h, c = [0.0] * hd, [0.0] * hd
    for x in xs:
        h, c = lstm_step(list(x), h, c, W.tolist(), U.tolist(), b.tolist())
    return np.array(h)


def mlp(x, W, b, V, act="relu"):
    pre = [sum(W[r][k] * x[k] for k in range(len(x))) + b[r] for r in range(len(b))]
    hid = [max(0.0, p) if act == "relu" else sigmoid(p) for p in pre]
    return np.array([sum(V[o][r] * hid[r] for r in range(len(hid))) for o in range(len(V))])


def lca_paths(tree):
    """Label paths with L/R markers computed from explicit ancestor sets.

    ``tree`` is a nested ``(label, children)`` tuple with string leaves
    standing for words under a preterminal ``(POS, [word])``.
    """
    paths = []

    def collect(node, anc):
        label, kids = node
        if len(kids) == 1 and isinstance(kids[0], str):
            paths.append((label, list(reversed(anc))))
            return
        for k in kids:
            collect(k, anc + [node])

    collect(tree, [])
    out = []
    for t, (pos, anc) in enumerate(paths):
        ids = [id(a) for a in anc]
        left = right = None
        if t > 0:
            prev = {id(a) for a in paths[t - 1][1]}
            left = next(k for k, x in enumerate(ids) if x in prev)
        if t + 1 < len(paths):
            nxt = {id(a) for a in paths[t + 1][1]}
            right = next(k for k, x in enumerate(ids) if x in nxt)
        path = [pos]
        for k, a in enumerate(anc):
            path.append(a[0])
            if k == left:
                path.append("L")
            if k == right:
                path.append("R")
        out.append(path)
    return out
