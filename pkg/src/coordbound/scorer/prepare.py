"""Turn coordination instances into scorer inputs: chart, candidates, conjunct paths."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

from ..candgen import CandidatePair, candidates, collect_spans, enumerate_tuples, featurize
from ..corpus.coordination import CoordinationInstance
from ..grammar.chart import Chart, best_subtree, compute_chart, viterbi
from ..grammar.pcfg import Pcfg
from .paths import decompose_paths

Span = tuple[int, int]


@dataclass
class PreparedInstance:
    words: list[str]
    pos: list[str]
    candidates: list[CandidatePair]
    gold_index: int | None
    span_paths: dict[Span, list[list[str]]] = field(default_factory=dict)
    instance: CoordinationInstance | None = None
    coord_index: int | None = None
    multi_span: bool = False

    @property
    def gold(self):
        return None if self.instance is None else target_pair(self.instance, self.multi_span)


def target_pair(inst: CoordinationInstance, multi_span: bool = False):
    """The pair a candidate must equal: nearest conjuncts, or first and last conjunct."""
    if inst.gold is None:
        return None
    if multi_span and inst.conjuncts:
        return (inst.conjuncts[0], inst.conjuncts[-1])
    return inst.gold


@dataclass
class Preparer:
    """Caches charts per sentence so several coordinators share one parse."""

    pcfg: Pcfg
    mode: str = "path"
    multi_span: bool = False
    max_spans: int = 7
    stats: Counter = field(default_factory=Counter)
    _charts: dict = field(default_factory=dict)

    def chart(self, sentence) -> tuple[Chart, object]:
        key = tuple((t.word, t.pos) for t in sentence)
        hit = self._charts.get(key)
        if hit is None:
            ch = compute_chart(self.pcfg, list(sentence))
            hit = (ch, viterbi(self.pcfg, list(sentence), ch))
            self._charts = {key: hit}  # instances of one sentence arrive together
        return hit

    def candidates(self, chart: Chart, best, k: int) -> list[CandidatePair]:
        if not self.multi_span:
            return candidates(chart, k, best)
        left, right = collect_spans(chart, k)
        seen = {}
        for tup in enumerate_tuples(chart, k, left, right, self.max_spans):
            pair = tup.pair
            seen.setdefault(pair.spans, pair)
        return featurize(seen.values(), chart, best)

    def paths_for(self, chart: Chart, spans) -> dict[Span, list[list[str]]]:
        out = {}
        for s in spans:
            res = best_subtree(chart, (s[0], s[1] + 1))
            if res.flagged:
                self.stats[f"subtree_{res.source}"] += 1
            out[s] = decompose_paths(res.tree)
        return out

    def prepare_sentence(self, sentence, k: int, inst: CoordinationInstance | None = None) -> PreparedInstance:
        chart, best = self.chart(sentence)
        if chart.unknown:
            self.stats["unknown_tokens"] += len(chart.unknown)
        cands = self.candidates(chart, best, k)
        gold_index = None
        target = target_pair(inst, self.multi_span) if inst is not None else None
        if target is not None:
            for r, c in enumerate(cands):
                if c.spans == target:
                    gold_index = r
                    break
        span_paths = {}
        if self.mode == "path":
            span_paths = self.paths_for(chart, sorted({s for c in cands for s in c.spans}))
        self.stats["instances"] += 1
        self.stats["candidates"] += len(cands)
        if not cands:
            self.stats["no_candidates"] += 1
        return PreparedInstance([t.word for t in sentence], [t.pos for t in sentence], cands, gold_index,
                                span_paths, inst, k, self.multi_span)

    def prepare(self, instances) -> list[PreparedInstance]:
        return [self.prepare_sentence(inst.sentence, inst.coord_index, inst) for inst in instances]


def prepare_instances(pcfg: Pcfg, instances, mode: str = "path", multi_span: bool = False) -> list[PreparedInstance]:
    return Preparer(pcfg, mode, multi_span).prepare(instances)
