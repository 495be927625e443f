"""Exact CKY inside/outside/Viterbi in log space.

Unary rules are applied as a closure of at most ``MAX_UNARY_CHAIN`` steps
above each span. To keep inside and outside exact under that bound, each
span stores one layer per chain depth: layer 0 holds nodes built by a binary
or lexical rule, layer ``c`` nodes sitting on top of ``c`` unaries.

Spans are half-open ``(i, j)`` over token positions.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..corpus.trees import Token, Tree
from .pcfg import Pcfg, debinarize, flat_tree

MAX_UNARY_CHAIN = 3
NEG_INF = -np.inf


def _lse(a: np.ndarray, axis: int) -> np.ndarray:
    m = np.max(a, axis=axis, keepdims=True)
    safe = np.where(np.isfinite(m), m, 0.0)
    with np.errstate(divide="ignore"):
        out = np.log(np.sum(np.exp(a - safe), axis=axis, keepdims=True)) + safe
    return np.squeeze(out, axis=axis)


class _Groups:
    """Reduction of rule-indexed rows into per-symbol rows (log-sum-exp or max)."""

    def __init__(self, keys: np.ndarray):
        self.order = np.argsort(keys, kind="stable")
        sorted_keys = keys[self.order]
        if len(sorted_keys):
            self.uniq, self.starts, self.counts = np.unique(sorted_keys, return_index=True, return_counts=True)
        else:
            self.uniq = self.starts = self.counts = np.zeros(0, dtype=np.int64)

    def lse(self, vals: np.ndarray) -> np.ndarray:
        v = vals[self.order]
        m = np.maximum.reduceat(v, self.starts, axis=0)
        safe = np.where(np.isfinite(m), m, 0.0)
        with np.errstate(divide="ignore", invalid="ignore"):
            s = np.add.reduceat(np.exp(v - np.repeat(safe, self.counts, axis=0)), self.starts, axis=0)
            return np.log(s) + safe

    def max(self, vals: np.ndarray) -> np.ndarray:
        return np.maximum.reduceat(vals[self.order], self.starts, axis=0)


def _unary_step(unary, layer: np.ndarray, viterbi: bool) -> np.ndarray:
    """One unary application; ``layer`` is (N, S) over S spans.

    ``unary`` is ``(rows, cols, logp, prob)`` restricted to symbols that take
    part in some unary rule.
    """
    rows, cols, logu, prob = unary
    out = np.full(layer.shape, NEG_INF)
    if not len(rows):
        return out
    sub = layer[cols]
    if viterbi:
        out[rows] = np.max(logu[:, :, None] + sub[None, :, :], axis=1)
        return out
    m = np.max(sub, axis=0, keepdims=True)
    safe = np.where(np.isfinite(m), m, 0.0)
    with np.errstate(divide="ignore"):
        out[rows] = np.log(prob @ np.exp(sub - safe)) + safe
    return out


def _unary_tables(pcfg: Pcfg, transpose: bool = False):
    prob = pcfg.unary_prob.T if transpose else pcfg.unary_prob
    rows = np.nonzero(prob.any(axis=1))[0]
    cols = np.nonzero(prob.any(axis=0))[0]
    sub = prob[np.ix_(rows, cols)]
    with np.errstate(divide="ignore"):
        return rows, cols, np.log(sub), sub


@dataclass
class Chart:
    """Inside/outside tables for one sentence.

    ``inside_layers[c, A, i, j]`` is the log probability that ``A``, sitting on
    exactly ``c`` unary rules, derives tokens ``i..j-1``. ``outside_layers`` is
    the matching context probability.
    """

    pcfg: Pcfg
    tokens: list
    inside_layers: np.ndarray
    outside_layers: np.ndarray | None = None
    unknown: list[int] = field(default_factory=list)
    _viterbi: np.ndarray | None = None
    _inside_top: np.ndarray | None = None
    _viterbi_top: np.ndarray | None = None

    @property
    def n(self) -> int:
        return len(self.tokens)

    @property
    def inside_top(self) -> np.ndarray:
        if self._inside_top is None:
            self._inside_top = _lse(self.inside_layers, 0)
        return self._inside_top

    @property
    def log_total(self) -> float:
        return float(self.inside_top[self.pcfg.index[self.pcfg.start], 0, self.n])

    @property
    def total(self) -> float:
        return float(np.exp(self.log_total))

    def _sym(self, sym) -> int:
        return self.pcfg.index[sym] if isinstance(sym, str) else int(sym)

    def log_inside(self, sym, i: int, j: int) -> float:
        return float(self.inside_top[self._sym(sym), i, j])

    def inside(self, sym, i: int, j: int) -> float:
        return float(np.exp(self.log_inside(sym, i, j)))

    def log_marginal(self, sym, i: int, j: int) -> float:
        """log of (total probability mass of derivations with ``sym`` over i..j-1), counting
        each occurrence in a unary chain separately."""
        a = self._sym(sym)
        return float(_lse(self.inside_layers[:, a, i, j] + self.outside_layers[:, a, i, j], 0))

    def log_outside(self, sym, i: int, j: int) -> float:
        """Outside score normalized so that ``inside * outside == marginal``.

        Where the inside score is zero the layer-0 outside is returned.
        """
        a = self._sym(sym)
        li = self.log_inside(a, i, j)
        if li == NEG_INF:
            return float(self.outside_layers[0, a, i, j])
        return self.log_marginal(a, i, j) - li

    def outside(self, sym, i: int, j: int) -> float:
        return float(np.exp(self.log_outside(sym, i, j)))

    def preterminal_mass(self, i: int) -> float:
        """Sum over symbols of I*O for lexical (layer-0) nodes at position i; equals the sentence
        probability since every derivation has one preterminal per position."""
        vals = self.inside_layers[0, :, i, i + 1] + self.outside_layers[0, :, i, i + 1]
        return float(np.exp(_lse(vals, 0)))

    # Viterbi

    @property
    def viterbi_layers(self) -> np.ndarray:
        if self._viterbi is None:
            self._viterbi = _fill_inside(self.pcfg, self._lexical_table(), self.n, viterbi=True)
        return self._viterbi

    def _lexical_table(self) -> np.ndarray:
        return _lexical(self.pcfg, self.tokens)[0]

    def viterbi_top(self) -> np.ndarray:
        if self._viterbi_top is None:
            self._viterbi_top = np.max(self.viterbi_layers, axis=0)
        return self._viterbi_top

    def viterbi_logprob(self, sym=None, i: int = 0, j: int | None = None) -> float:
        a = self._sym(self.pcfg.start if sym is None else sym)
        j = self.n if j is None else j
        return float(np.max(self.viterbi_layers[:, a, i, j]))

    def viterbi_tree(self, sym, i: int, j: int, binarized: bool = False) -> Tree | None:
        a = self._sym(sym)
        vl = self.viterbi_layers
        if not np.isfinite(np.max(vl[:, a, i, j])):
            return None
        c = int(np.argmax(vl[:, a, i, j]))
        tree = self._reconstruct(a, c, i, j)
        return tree if binarized else debinarize(tree)

    def _reconstruct(self, a: int, c: int, i: int, j: int) -> Tree:
        pcfg = self.pcfg
        vl = self.viterbi_layers
        label = pcfg.symbols[a]
        if c > 0:
            scores = pcfg.unary_logp[a] + vl[c - 1, :, i, j]
            b = int(np.argmax(scores))
            child = self._reconstruct(b, c - 1, i, j)
            return Tree(label, (), (child,), None, i, j)
        if j - i == 1:
            tok = self.tokens[i]
            word = tok if isinstance(tok, str) else tok.word
            return Tree(label, (), (), word, i, j)
        top = self.viterbi_top()
        best, arg = NEG_INF, None
        rules = np.nonzero(pcfg.bin_a == a)[0]
        for k in range(i + 1, j):
            s = pcfg.bin_logp[rules] + top[pcfg.bin_b[rules], i, k] + top[pcfg.bin_c[rules], k, j]
            r = int(np.argmax(s))
            if s[r] > best:
                best, arg = s[r], (rules[r], k)
        r, k = arg
        b, cc = int(pcfg.bin_b[r]), int(pcfg.bin_c[r])
        left = self._reconstruct(b, int(np.argmax(vl[:, b, i, k])), i, k)
        right = self._reconstruct(cc, int(np.argmax(vl[:, cc, k, j])), k, j)
        return Tree(label, (), (left, right), None, i, j)


def _lexical(pcfg: Pcfg, tokens) -> tuple[np.ndarray, list[int]]:
    n = len(tokens)
    table = np.full((pcfg.n_symbols, n), NEG_INF)
    unknown = []
    for i, tok in enumerate(tokens):
        rules = pcfg.lex_by_terminal.get(pcfg.terminal_of(tok))
        if rules is None:
            unknown.append(i)
            rules = pcfg.unknown_lex
        for a, lp in rules:
            table[a, i] = lp
    return table, unknown


def _fill_inside(pcfg: Pcfg, lex: np.ndarray, n: int, viterbi: bool) -> np.ndarray:
    N = pcfg.n_symbols
    layers = np.full((MAX_UNARY_CHAIN + 1, N, n + 1, n + 1), NEG_INF)
    top = np.full((N, n + 1, n + 1), NEG_INF)
    groups = _Groups(pcfg.bin_a)
    unary = _unary_tables(pcfg)
    A, B, C, lp = pcfg.bin_a, pcfg.bin_b, pcfg.bin_c, pcfg.bin_logp
    for length in range(1, n + 1):
        starts = np.arange(0, n - length + 1)
        ends = starts + length
        if length == 1:
            base = lex.copy()
        else:
            base = np.full((N, len(starts)), NEG_INF)
            if len(A):
                ks = np.arange(1, length)
                mid = starts[:, None] + ks[None, :]
                left = top[B[:, None, None], starts[None, :, None], mid[None]]
                right = top[C[:, None, None], mid[None], ends[None, :, None]]
                vals = lp[:, None, None] + left + right
                per_rule = np.max(vals, axis=2) if viterbi else _lse(vals, 2)
                base[groups.uniq] = groups.max(per_rule) if viterbi else groups.lse(per_rule)
        layers[0, :, starts, ends] = base.T
        cur = base
        for c in range(1, MAX_UNARY_CHAIN + 1):
            cur = _unary_step(unary, cur, viterbi)
            layers[c, :, starts, ends] = cur.T
        combined = np.max(layers[:, :, starts, ends], axis=0) if viterbi else _lse(layers[:, :, starts, ends], 0)
        top[:, starts, ends] = combined
    return layers


def _fill_outside(pcfg: Pcfg, inside_layers: np.ndarray, n: int) -> np.ndarray:
    N = pcfg.n_symbols
    C = MAX_UNARY_CHAIN
    top = _lse(inside_layers, 0)
    out = np.full((C + 1, N, n + 1, n + 1), NEG_INF)
    # outside mass arriving from binary parents or the root, before unary chains
    from_parent = np.full((N, n + 1, n + 1), NEG_INF)
    from_parent[pcfg.index[pcfg.start], 0, n] = 0.0
    A, B, Cc, lp = pcfg.bin_a, pcfg.bin_b, pcfg.bin_c, pcfg.bin_logp
    by_b, by_c = _Groups(B), _Groups(Cc)
    unary_t = _unary_tables(pcfg, transpose=True)
    for length in range(n, 0, -1):
        starts = np.arange(0, n - length + 1)
        ends = starts + length
        fp = from_parent[:, starts, ends]  # (N, S)
        layer = fp
        out[C, :, starts, ends] = layer.T
        for c in range(C - 1, -1, -1):
            up = _unary_step(unary_t, layer, viterbi=False)
            layer = np.logaddexp(fp, up)
            out[c, :, starts, ends] = layer.T
        if length == 1 or not len(A):
            continue
        ks = np.arange(1, length)
        mid = starts[:, None] + ks[None, :]
        parent = out[0][A[:, None, None], starts[None, :, None], ends[None, :, None]]
        right_in = top[Cc[:, None, None], mid[None], ends[None, :, None]]
        left_in = top[B[:, None, None], starts[None, :, None], mid[None]]
        to_left = by_b.lse(lp[:, None, None] + parent + right_in)
        to_right = by_c.lse(lp[:, None, None] + parent + left_in)
        ii = np.broadcast_to(starts[:, None], mid.shape)
        jj = np.broadcast_to(ends[:, None], mid.shape)
        bu = by_b.uniq[:, None, None]
        from_parent[bu, ii[None], mid[None]] = np.logaddexp(from_parent[bu, ii[None], mid[None]], to_left)
        cu = by_c.uniq[:, None, None]
        from_parent[cu, mid[None], jj[None]] = np.logaddexp(from_parent[cu, mid[None], jj[None]], to_right)
    return out


def inside(pcfg: Pcfg, tokens) -> Chart:
    """Fill the inside half of a chart. Unknown terminals back off to the
    preterminal distribution instead of failing."""
    tokens = list(tokens)
    lex, unknown = _lexical(pcfg, tokens)
    layers = _fill_inside(pcfg, lex, len(tokens), viterbi=False)
    return Chart(pcfg, tokens, layers, None, unknown)


def outside(pcfg: Pcfg, chart: Chart) -> Chart:
    chart.outside_layers = _fill_outside(pcfg, chart.inside_layers, chart.n)
    return chart


def compute_chart(pcfg: Pcfg, tokens) -> Chart:
    return outside(pcfg, inside(pcfg, tokens))


def viterbi(pcfg: Pcfg, tokens, chart: Chart | None = None) -> Tree | None:
    """Most probable parse (start symbol stripped), or None if the sentence has no derivation."""
    chart = chart if chart is not None else inside(pcfg, tokens)
    tree = chart.viterbi_tree(pcfg.start, 0, chart.n)
    if tree is None:
        return None
    if tree.label == pcfg.start and len(tree.children) == 1 and not tree.is_preterminal:
        return tree.children[0]
    return tree


@dataclass
class SubtreeResult:
    tree: Tree
    source: str  # "chart", "isolated" or "flat"

    @property
    def flagged(self) -> bool:
        return self.source != "chart"


def best_subtree(chart: Chart, span: tuple[int, int], pcfg: Pcfg | None = None) -> SubtreeResult:
    """Highest-probability subtree over a half-open span, across all real symbols.

    If no symbol derives the span, the span is parsed on its own as a sequence
    of best constituents under a FRAG node; if that degenerates to bare
    preterminals the result is a flat tree.
    """
    pcfg = pcfg or chart.pcfg
    i, j = span
    if not (0 <= i < j <= chart.n):
        raise IndexError(f"span {span} outside sentence of length {chart.n}")
    vtop = chart.viterbi_top()
    scores = np.where(pcfg.real, vtop[:, i, j], NEG_INF)
    best = int(np.argmax(scores))  # first maximum: lowest symbol id wins ties
    if np.isfinite(scores[best]):
        return SubtreeResult(chart.viterbi_tree(best, i, j), "chart")
    pieces = _segment(chart, vtop, i, j)
    if pieces is None or all(b - a == 1 for _, a, b in pieces):
        toks = [_as_token(t, i + o) for o, t in enumerate(chart.tokens[i:j])]
        return SubtreeResult(flat_tree(toks, start=i), "flat")
    kids = [chart.viterbi_tree(a, s, e) for a, s, e in pieces]
    return SubtreeResult(Tree("FRAG", (), tuple(kids), None, i, j), "isolated")


def _as_token(tok, index):
    if isinstance(tok, Token):
        return tok
    return Token(index, tok, tok)


def _segment(chart: Chart, vtop: np.ndarray, i: int, j: int):
    """Fewest real constituents covering i..j-1, ties broken by total log probability."""
    pcfg = chart.pcfg
    real = np.where(pcfg.real[:, None, None], vtop, NEG_INF)
    best = {i: (0, 0.0, None)}
    for e in range(i + 1, j + 1):
        cand = None
        for s in range(i, e):
            if s not in best:
                continue
            a = int(np.argmax(real[:, s, e]))
            sc = real[a, s, e]
            if not np.isfinite(sc):
                continue
            cnt, lp, _ = best[s]
            key = (cnt + 1, -(lp + sc))
            if cand is None or key < (cand[0], -cand[1]):
                cand = (cnt + 1, lp + sc, (s, a))
        if cand is not None:
            best[e] = cand
    if j not in best:
        return None
    pieces = []
    e = j
    while e > i:
        s, a = best[e][2]
        pieces.append((a, s, e))
        e = s
    return pieces[::-1]
