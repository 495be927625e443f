"""Synthetic COORD-annotated treebanks sampled from a declarative grammar.

Spec file format (``#`` starts a comment)::

    seed = 7
    start = S
    symmetry = noisy              # identical-POS | noisy | independent
    symmetry_prob = 0.8           # only used by "noisy"
    max_depth = 8
    discourse_prob = 0.1          # sentence-initial "And" with no conjuncts
    third_conjunct_prob = 0.2     # chance of a comma-separated extra conjunct
    coordinators = and:0.7 or:0.2 but:0.1

    rule S -> NP VP . : 1.0
    rule NP -> DT NN : 0.6
    rule NP -> NP PP : 0.4
    lex DT : the a
    lex . : .
    coord NP : 0.3                # chance an NP expansion becomes a coordination

Rule weights of each left-hand side must sum to 1.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from .coordination import CCP, COORD
from .trees import Tree, build, leaf

SYMMETRY_LEVELS = ("identical-POS", "noisy", "independent")


class GrammarSpecError(ValueError):
    pass


@dataclass
class GrammarSpec:
    rules: dict[str, list[tuple[tuple[str, ...], float]]]
    lexicon: dict[str, list[str]]
    coord: dict[str, float]
    start: str = "S"
    seed: int = 0
    symmetry: str = "noisy"
    symmetry_prob: float = 0.8
    max_depth: int = 8
    discourse_prob: float = 0.0
    third_conjunct_prob: float = 0.0
    coordinators: list[tuple[str, float]] = field(default_factory=lambda: [("and", 1.0)])

    def validate(self) -> None:
        if self.symmetry not in SYMMETRY_LEVELS:
            raise GrammarSpecError(f"unknown symmetry level {self.symmetry!r}")
        if self.start not in self.rules:
            raise GrammarSpecError(f"start symbol {self.start!r} has no rules")
        for lhs, alts in self.rules.items():
            total = sum(w for _, w in alts)
            if abs(total - 1.0) > 1e-9:
                raise GrammarSpecError(f"weights for {lhs} sum to {total!r}, not 1")
            for rhs, w in alts:
                if w <= 0:
                    raise GrammarSpecError(f"non-positive weight in {lhs} -> {' '.join(rhs)}")
                for sym in rhs:
                    if sym not in self.rules and sym not in self.lexicon:
                        raise GrammarSpecError(f"symbol {sym!r} has neither rules nor lexicon")
        if not self.coord:
            raise GrammarSpecError("no coordination templates")
        reachable = self._reachable()
        if not any(c in reachable and p > 0 for c, p in self.coord.items()):
            raise GrammarSpecError("no coordination template is reachable from the start symbol")
        if not self.coordinators:
            raise GrammarSpecError("no coordinating words")

    def _reachable(self) -> set[str]:
        seen = {self.start}
        todo = [self.start]
        while todo:
            sym = todo.pop()
            for rhs, _ in self.rules.get(sym, ()):
                for s in rhs:
                    if s not in seen:
                        seen.add(s)
                        todo.append(s)
        return seen


def parse_grammar_spec(text: str) -> GrammarSpec:
    rules: dict[str, list] = {}
    lexicon: dict[str, list[str]] = {}
    coord: dict[str, float] = {}
    opts: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        head = line.split(None, 1)[0]
        try:
            if head == "rule":
                body, weight = line[len("rule"):].rsplit(":", 1)
                lhs, rhs = body.split("->")
                rules.setdefault(lhs.strip(), []).append((tuple(rhs.split()), float(weight)))
            elif head == "lex":
                pos, words = line[len("lex"):].split(":", 1)
                lexicon.setdefault(pos.strip(), []).extend(words.split())
            elif head == "coord":
                cat, prob = line[len("coord"):].split(":", 1)
                coord[cat.strip()] = float(prob)
            else:
                key, value = line.split("=", 1)
                opts[key.strip()] = value.strip()
        except ValueError as e:
            raise GrammarSpecError(f"line {lineno}: cannot parse {raw!r}") from e
    spec = GrammarSpec(rules=rules, lexicon=lexicon, coord=coord)
    for key, value in opts.items():
        if key in ("seed", "max_depth"):
            setattr(spec, key, int(value))
        elif key in ("symmetry_prob", "discourse_prob", "third_conjunct_prob"):
            setattr(spec, key, float(value))
        elif key in ("start", "symmetry"):
            setattr(spec, key, value)
        elif key == "coordinators":
            pairs = []
            for item in value.split():
                word, _, w = item.partition(":")
                pairs.append((word, float(w or 1.0)))
            spec.coordinators = pairs
        else:
            raise GrammarSpecError(f"unknown option {key!r}")
    spec.validate()
    return spec


def load_grammar_spec(path) -> GrammarSpec:
    with open(path, encoding="utf-8") as f:
        return parse_grammar_spec(f.read())


class _Sampler:
    def __init__(self, spec: GrammarSpec, rng: random.Random):
        self.spec = spec
        self.rng = rng
        self.height = self._min_heights()

    def _min_heights(self) -> dict[str, float]:
        h = {pos: 0.0 for pos in self.spec.lexicon}
        for lhs in self.spec.rules:
            h.setdefault(lhs, float("inf"))
        changed = True
        while changed:
            changed = False
            for lhs, alts in self.spec.rules.items():
                best = min(1 + max(h[s] for s in rhs) for rhs, _ in alts)
                if best < h[lhs]:
                    h[lhs] = best
                    changed = True
        return h

    def _choose(self, items, weights):
        return self.rng.choices(items, weights=weights, k=1)[0]

    def expand(self, sym: str, depth: int, allow_coord: bool = True) -> Tree:
        spec = self.spec
        if sym in spec.lexicon and sym not in spec.rules:
            return leaf(sym, self.rng.choice(spec.lexicon[sym]))
        p = spec.coord.get(sym, 0.0)
        if allow_coord and p > 0 and depth < spec.max_depth - 2 and self.rng.random() < p:
            return self.coordination(sym, depth)
        alts = spec.rules[sym]
        if depth >= spec.max_depth:
            lowest = min(1 + max(self.height[s] for s in rhs) for rhs, _ in alts)
            alts = [(rhs, w) for rhs, w in alts if 1 + max(self.height[s] for s in rhs) == lowest]
        rhs = self._choose([r for r, _ in alts], [w for _, w in alts])
        return build(sym, [self.expand(s, depth + 1) for s in rhs])

    def coordination(self, sym: str, depth: int) -> Tree:
        spec = self.spec
        first = self.expand(sym, depth + 1, allow_coord=False)
        n_conj = 3 if self.rng.random() < spec.third_conjunct_prob else 2
        conjuncts = [first]
        for _ in range(n_conj - 1):
            copy = spec.symmetry == "identical-POS" or (
                spec.symmetry == "noisy" and self.rng.random() < spec.symmetry_prob)
            conjuncts.append(self.reword(first) if copy else self.expand(sym, depth + 1, allow_coord=False))
        word = self._choose([w for w, _ in spec.coordinators], [w for _, w in spec.coordinators])
        children = []
        for idx, conj in enumerate(conjuncts):
            if idx == len(conjuncts) - 1:
                children.append(leaf("CC", word))
            elif idx > 0:
                children.append(leaf(",", ","))
            children.append(build(conj.label, conj.children, (COORD,)) if not conj.is_preterminal
                            else leaf(f"{conj.label}-{COORD}", conj.word))
        return build(sym, children, (CCP,))

    def reword(self, tree: Tree) -> Tree:
        """Same skeleton and POS sequence, fresh words."""
        if tree.is_preterminal:
            words = self.spec.lexicon.get(tree.label)
            word = self.rng.choice(words) if words else tree.word
            return Tree(tree.label, tree.ftags, (), word, 0, 1)
        return build(tree.label, [self.reword(c) for c in tree.children], tree.ftags)


def _has_coordination(tree: Tree) -> bool:
    return any(t.has_ftag(CCP) for t in tree.subtrees())


def generate_synthetic(spec: GrammarSpec, n: int, max_attempts: int = 1000) -> list[Tree]:
    """Sample ``n`` annotated trees, each with at least one coordination."""
    if n < 1:
        raise ValueError("n must be >= 1")
    spec.validate()
    rng = random.Random(spec.seed)
    sampler = _Sampler(spec, rng)
    trees = []
    for _ in range(n):
        for _attempt in range(max_attempts):
            tree = sampler.expand(spec.start, 0)
            if _has_coordination(tree):
                break
        else:
            raise GrammarSpecError(f"no coordination produced after {max_attempts} samples")
        if spec.discourse_prob > 0 and rng.random() < spec.discourse_prob:
            tree = build(tree.label, [leaf("CC", "And"), *tree.children], tree.ftags)
        trees.append(tree)
    return trees
