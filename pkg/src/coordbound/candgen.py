"""Candidate conjunct pairs extracted from a chart, with their chart features.

Spans here are inclusive token indices ``(i, j)``, matching
:class:`~coordbound.corpus.CoordinationInstance`; the chart itself uses
half-open spans, so ``(i, j)`` corresponds to chart cell ``(i, j + 1)``.
"""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass, field, replace

import numpy as np

from .corpus.coordination import is_coord_word
from .corpus.trees import Tree, is_punct
from .grammar.chart import Chart, _lse

Span = tuple[int, int]
RANK_CLIP = 20
TINY = sys.float_info.min  # ratio floor so a ratio is never exactly 0
ZERO_TIER_GAP = 50.0  # log-space gap placing zero-product pairs under every nonzero pair


@dataclass(frozen=True)
class CandidatePair:
    left: Span
    right: Span
    log_product: float = -math.inf
    rank: int = 0
    ratio: float = 1.0
    in_best: bool = False
    zero_tier: bool = False

    @property
    def spans(self) -> tuple[Span, Span]:
        return (self.left, self.right)

    @property
    def length(self) -> int:
        return (self.left[1] - self.left[0] + 1) + (self.right[1] - self.right[0] + 1)

    def feats(self) -> np.ndarray:
        """``[min(rank, 20), ratio, inBest]`` as fed to the scorer."""
        return np.array([min(self.rank, RANK_CLIP), self.ratio, float(self.in_best)])

    def to_line(self) -> str:
        (i, j), (l, m) = self.spans
        return f"{i} {j} {l} {m} {self.log_product!r} {self.rank} {self.ratio!r} {int(self.in_best)}"


@dataclass(frozen=True)
class CandidateTuple:
    spans: tuple[Span, ...]

    def __post_init__(self):
        if not 2 <= len(self.spans) <= 7:
            raise ValueError(f"a tuple holds 2..7 spans, got {len(self.spans)}")
        for (a, b), (c, d) in zip(self.spans, self.spans[1:]):
            if not (a <= b < c <= d):
                raise ValueError(f"spans {self.spans} are not ordered and disjoint")

    @property
    def pair(self) -> CandidatePair:
        return CandidatePair(self.spans[0], self.spans[-1])

    @property
    def phrase(self) -> Span:
        return (self.spans[0][0], self.spans[-1][1])


@dataclass
class SpanMass:
    """Per-span COORD mass: log of the sum over COORD symbols of inside*outside.

    ``partial`` holds the log of whichever factor is nonzero when the product
    vanishes (inside if available, else outside).
    """

    log_mass: dict[Span, float] = field(default_factory=dict)
    partial: dict[Span, float] = field(default_factory=dict)


def _gap_is(tokens, start: int, end: int, ok) -> bool:
    return all(ok(tokens[t]) for t in range(start, end))


def _tok_pos(tok) -> str:
    return tok if isinstance(tok, str) else tok.pos


def _tok_word(tok) -> str:
    return tok if isinstance(tok, str) else tok.word


def coord_cells(chart: Chart) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Half-open cells with a COORD symbol of nonzero inside or outside score.

    Returns ``(starts, ends, log_mass)`` where ``log_mass`` is -inf when the
    inside-times-outside product vanishes.
    """
    pcfg = chart.pcfg
    idx = np.nonzero(pcfg.coord_mask)[0]
    if not len(idx) or chart.outside_layers is None:
        if chart.outside_layers is None and len(idx):
            raise ValueError("chart has no outside scores; run grammar.outside first")
        return np.zeros(0, int), np.zeros(0, int), np.zeros(0)
    ins = chart.inside_top[idx]
    outs = _lse(chart.outside_layers[:, idx], 0)
    alive = np.isfinite(ins) | np.isfinite(outs)
    alive = np.any(alive, axis=0)
    starts, ends = np.nonzero(np.triu(alive, 1))
    mass = _lse(chart.inside_layers[:, idx][:, :, starts, ends] + chart.outside_layers[:, idx][:, :, starts, ends], 0)
    log_mass = _lse(mass, 0) if len(starts) else np.zeros(0)
    return starts, ends, log_mass


def span_mass(chart: Chart) -> SpanMass:
    pcfg = chart.pcfg
    idx = np.nonzero(pcfg.coord_mask)[0]
    starts, ends, log_mass = coord_cells(chart)
    out = SpanMass()
    for s, e, lm in zip(starts, ends, log_mass):
        span = (int(s), int(e) - 1)
        if np.isfinite(lm):
            out.log_mass[span] = float(lm)
            continue
        ins = float(_lse(chart.inside_top[idx, s, e], 0))
        if np.isfinite(ins):
            out.partial[span] = ins
        else:
            out.partial[span] = float(_lse(_lse(chart.outside_layers[:, idx, s, e], 0), 0))
    return out


def collect_spans(chart: Chart, coord_index: int) -> tuple[list[Span], list[Span]]:
    """COORD spans adjacent to the coordinator (punctuation may intervene).

    Returns the left and right span lists, each sorted.
    """
    n = chart.n
    if not 0 <= coord_index < n:
        raise IndexError(f"coordinator index {coord_index} outside 0..{n - 1}")
    toks = chart.tokens
    punct = lambda t: is_punct(_tok_pos(t))  # noqa: E731
    starts, ends, _ = coord_cells(chart)
    left, right = [], []
    for s, e in zip(starts.tolist(), ends.tolist()):
        if e <= coord_index and _gap_is(toks, e, coord_index, punct):
            left.append((s, e - 1))
        elif s > coord_index and _gap_is(toks, coord_index + 1, s, punct):
            right.append((s, e - 1))
    return sorted(left), sorted(right)


def enumerate_pairs(left, right) -> list[CandidatePair]:
    return [CandidatePair(tuple(a), tuple(b)) for a in left for b in right]


def best_tree_spans(tree: Tree | None) -> set[Span]:
    """Inclusive spans of every node in a parse (preterminals included)."""
    if tree is None:
        return set()
    return {(t.start, t.end - 1) for t in tree.subtrees()}


def featurize(pairs, chart: Chart, best_tree: Tree | None, mass: SpanMass | None = None) -> list[CandidatePair]:
    """Rank pairs by the product of inside and outside scores of both spans.

    Pairs whose product vanishes go below every nonzero pair and are ordered
    among themselves by their nonzero factors. Ties are broken by total span
    length, then span order.
    """
    pairs = list(pairs)
    if not pairs:
        return []
    mass = mass or span_mass(chart)
    in_tree = best_tree_spans(best_tree)

    def term(span):
        if span in mass.log_mass:
            return mass.log_mass[span], True
        if span in mass.partial:
            return mass.partial[span], False
        return _direct_mass(chart, span)

    keyed = []
    for p in pairs:
        (a, ok_a), (b, ok_b) = term(p.left), term(p.right)
        keyed.append((p, a + b, ok_a and ok_b))
    nonzero = [k for _, k, ok in keyed if ok]
    zero = [k for _, k, ok in keyed if not ok]
    offset = 0.0
    if zero and nonzero:
        offset = min(0.0, min(nonzero) - max(zero)) - ZERO_TIER_GAP
    items = []
    for p, k, ok in keyed:
        key = k if ok else k + offset
        items.append((p, key, not ok))
    items.sort(key=lambda x: (x[2], -x[1], x[0].length, x[0].left, x[0].right))
    out = []
    prev = None
    for r, (p, key, zt) in enumerate(items, 1):
        if prev is None or key == prev:
            ratio = 1.0
        else:
            ratio = max(TINY, min(1.0, math.exp(key - prev))) if math.isfinite(prev) else TINY
        prev = key
        out.append(replace(p, log_product=float(key), rank=r, ratio=float(ratio),
                           in_best=p.left in in_tree and p.right in in_tree, zero_tier=zt))
    return out


def _direct_mass(chart: Chart, span: Span) -> tuple[float, bool]:
    """Fallback for spans not produced by collect_spans (e.g. hand-built pairs)."""
    idx = np.nonzero(chart.pcfg.coord_mask)[0]
    s, e = span[0], span[1] + 1
    if not len(idx):
        return -math.inf, False
    m = float(_lse(_lse(chart.inside_layers[:, idx, s, e] + chart.outside_layers[:, idx, s, e], 0), 0))
    if math.isfinite(m):
        return m, True
    ins = float(_lse(chart.inside_top[idx, s, e], 0))
    if math.isfinite(ins):
        return ins, False
    return float(_lse(_lse(chart.outside_layers[:, idx, s, e], 0), 0)), False


def candidates(chart: Chart, coord_index: int, best_tree: Tree | None = None) -> list[CandidatePair]:
    """collect_spans, enumerate_pairs and featurize in one call."""
    left, right = collect_spans(chart, coord_index)
    return featurize(enumerate_pairs(left, right), chart, best_tree)


def enumerate_tuples(chart: Chart, coord_index: int, left, right, max_spans: int = 7) -> list[CandidateTuple]:
    """Chains of COORD spans ending in a left span, the coordinator and a right span.

    Earlier members are COORD spans separated from their successor by a
    non-empty run of punctuation or coordinating words, as in
    ``Seychelles , ko Samui and Sardinia``. The chart is needed to find those
    non-adjacent members.
    """
    if max_spans < 2:
        raise ValueError("max_spans must be at least 2")
    toks = chart.tokens
    sep = lambda t: is_punct(_tok_pos(t)) or is_coord_word(_tok_word(t))  # noqa: E731
    starts, ends, _ = coord_cells(chart)
    by_end: dict[int, list[Span]] = {}
    for s, e in zip(starts.tolist(), ends.tolist()):
        by_end.setdefault(e - 1, []).append((s, e - 1))
    for spans in by_end.values():
        spans.sort()

    def predecessors(span):
        # spans ending before span[0] with a non-empty separator gap
        for end in range(span[0] - 2, -1, -1):
            if not sep(toks[end + 1]):
                break
            for p in by_end.get(end, ()):
                yield p

    chains: list[tuple[Span, ...]] = []

    def grow(chain):
        chains.append(chain)
        if len(chain) + 1 >= max_spans:
            return
        for p in predecessors(chain[0]):
            grow((p, *chain))

    for a in sorted(left):
        grow((tuple(a),))
    out = []
    for chain in chains:
        for b in sorted(right):
            out.append(CandidateTuple((*chain, tuple(b))))
    return out


def dump_candidates(pairs) -> str:
    """One line per candidate: ``i j l m logprod rank ratio inBest``."""
    return "".join(p.to_line() + "\n" for p in pairs)


def load_candidates(text: str) -> list[CandidatePair]:
    out = []
    for line in text.splitlines():
        if not line.strip():
            continue
        i, j, l, m, lp, rank, ratio, best = line.split()
        out.append(CandidatePair((int(i), int(j)), (int(l), int(m)), float(lp), int(rank), float(ratio),
                                 best == "1"))
    return out
