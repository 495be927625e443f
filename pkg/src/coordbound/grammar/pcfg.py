"""PCFG induction from annotated trees, binarization and the rule-file format."""

from __future__ import annotations

import hashlib
import math
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from ..corpus.coordination import CCP, COORD
from ..corpus.trees import Tree, build, leaf

START = "TOP"
FOLD = "^"
INTERMEDIATE = "@"
KEEP_FTAGS = (COORD, CCP)
FORMAT_HEADER = "coordbound-grammar 1"


class GrammarError(ValueError):
    pass


def fold(label: str, ftags=()) -> str:
    return label + "".join(FOLD + f for f in ftags)


def unfold(symbol: str) -> tuple[str, tuple[str, ...]]:
    base, *tags = symbol.split(FOLD)
    return base, tuple(tags)


def is_intermediate(symbol: str) -> bool:
    return symbol.startswith(INTERMEDIATE)


def is_coord_symbol(symbol: str) -> bool:
    return not is_intermediate(symbol) and COORD in unfold(symbol)[1]


def binarize(tree: Tree) -> Tree:
    """Left-factor n-ary nodes; function tags are folded into the labels.

    ``(X a b c)`` becomes ``(X (@X|a_b a b) c)``. Unary nodes are kept.
    """
    if tree.is_preterminal:
        return Tree(fold(tree.label, tree.ftags), (), (), tree.word, tree.start, tree.end)
    label = fold(tree.label, tree.ftags)
    kids = [binarize(c) for c in tree.children]
    names = [k.label for k in kids]
    cur = kids[0]
    for idx in range(1, len(kids) - 1):
        name = f"{INTERMEDIATE}{label}|" + "_".join(names[:idx + 1])
        cur = Tree(name, (), (cur, kids[idx]), None, cur.start, kids[idx].end)
    rest = (kids[-1],) if len(kids) > 1 else ()
    return Tree(label, (), (cur, *rest), None, tree.start, tree.end)


def debinarize(tree: Tree) -> Tree:
    """Inverse of :func:`binarize`: splice out intermediates, unfold tags."""
    if tree.is_preterminal:
        base, tags = unfold(tree.label)
        return Tree(base, tags, (), tree.word, tree.start, tree.end)
    kids = []
    for child in tree.children:
        if not child.is_preterminal and is_intermediate(child.label):
            kids.extend(debinarize(child).children)
        else:
            kids.append(debinarize(child))
    base, tags = unfold(tree.label) if not is_intermediate(tree.label) else (tree.label, ())
    return Tree(base, tags, tuple(kids), None, tree.start, tree.end)


def strip_ftags(tree: Tree, keep=KEEP_FTAGS) -> Tree:
    tags = tuple(t for t in tree.ftags if t in keep)
    if tree.is_preterminal:
        return Tree(tree.label, tags, (), tree.word, tree.start, tree.end)
    return Tree(tree.label, tags, tuple(strip_ftags(c, keep) for c in tree.children), None,
                tree.start, tree.end)


def with_root(tree: Tree) -> Tree:
    if tree.label in ("", START, "ROOT") and not tree.is_preterminal:
        return Tree(START, (), tree.children, None, tree.start, tree.end)
    return build(START, [tree])


@dataclass
class Pcfg:
    """Binary, unary and lexical rules with probabilities.

    Symbols are indexed in sorted order; that order is the tie-breaking order
    used throughout the chart code.
    """

    binary: dict[tuple[str, str, str], float]
    unary: dict[tuple[str, str], float]
    lexical: dict[tuple[str, str], float]
    start: str = START
    terminal: str = "pos"  # which token field the lexical rules read: "pos" or "word"
    symbols: list[str] = field(init=False)
    index: dict[str, int] = field(init=False)

    def __post_init__(self):
        syms = {self.start}
        for a, b, c in self.binary:
            syms.update((a, b, c))
        for a, b in self.unary:
            syms.update((a, b))
        for a, _ in self.lexical:
            syms.add(a)
        self.symbols = sorted(syms)
        self.index = {s: i for i, s in enumerate(self.symbols)}
        self._compile()

    def _compile(self):
        idx = self.index
        items = sorted(self.binary.items())
        self.bin_a = np.array([idx[a] for (a, _, _), _ in items], dtype=np.int64)
        self.bin_b = np.array([idx[b] for (_, b, _), _ in items], dtype=np.int64)
        self.bin_c = np.array([idx[c] for (_, _, c), _ in items], dtype=np.int64)
        with np.errstate(divide="ignore"):
            self.bin_logp = np.log(np.array([p for _, p in items], dtype=float))
        n = len(self.symbols)
        self.unary_prob = np.zeros((n, n))
        for (a, b), p in self.unary.items():
            self.unary_prob[idx[a], idx[b]] = p
        with np.errstate(divide="ignore"):
            self.unary_logp = np.log(self.unary_prob)
        self.lex_by_terminal: dict[str, list[tuple[int, float]]] = {}
        for (a, t), p in sorted(self.lexical.items()):
            self.lex_by_terminal.setdefault(t, []).append((idx[a], math.log(p)))
        pre = Counter()
        for (a, _), p in self.lexical.items():
            pre[idx[a]] += 1
        total = sum(pre.values())
        # back-off distribution for terminals with no lexical rule
        self.unknown_lex = [(a, math.log(c / total)) for a, c in sorted(pre.items())] if total else []
        self.real = np.array([not is_intermediate(s) for s in self.symbols])
        self.coord_mask = np.array([is_coord_symbol(s) for s in self.symbols])

    @property
    def n_symbols(self) -> int:
        return len(self.symbols)

    def check(self, tol: float = 1e-9) -> None:
        totals = Counter()
        for (a, _, _), p in self.binary.items():
            totals[a] += p
        for (a, _), p in self.unary.items():
            totals[a] += p
        for (a, _), p in self.lexical.items():
            totals[a] += p
        for a, t in totals.items():
            if abs(t - 1.0) > tol:
                raise GrammarError(f"rules for {a} sum to {t!r}")
        for table in (self.binary, self.unary, self.lexical):
            for rule, p in table.items():
                if not 0.0 < p <= 1.0:
                    raise GrammarError(f"probability {p!r} out of range for {rule}")

    def terminal_of(self, token) -> str:
        if isinstance(token, str):
            return token
        return token.pos if self.terminal == "pos" else token.word

    def dumps(self) -> str:
        lines = [FORMAT_HEADER, f"start {self.start}", f"terminal {self.terminal}"]
        for (a, b, c), p in sorted(self.binary.items()):
            lines.append(f"rule {a} -> {b} {c} {p!r}")
        for (a, b), p in sorted(self.unary.items()):
            lines.append(f"rule {a} -> {b} {p!r}")
        for (a, t), p in sorted(self.lexical.items()):
            lines.append(f"lex {a} -> {t} {p!r}")
        return "\n".join(lines) + "\n"

    def fingerprint(self) -> str:
        return hashlib.sha256(self.dumps().encode("utf-8")).hexdigest()

    def dump(self, path) -> None:
        with open(path, "w", encoding="utf-8") as f:
            f.write(self.dumps())


def loads_pcfg(text: str) -> Pcfg:
    lines = [ln.strip() for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
    if not lines or lines[0] != FORMAT_HEADER:
        raise GrammarError(f"missing or unsupported header (expected {FORMAT_HEADER!r})")
    start, terminal = START, "pos"
    binary, unary, lexical = {}, {}, {}
    for ln in lines[1:]:
        parts = ln.split()
        kind = parts[0]
        if kind == "start":
            start = parts[1]
        elif kind == "terminal":
            terminal = parts[1]
        elif kind in ("rule", "lex") and len(parts) >= 5 and parts[2] == "->":
            lhs, rhs, p = parts[1], parts[3:-1], float(parts[-1])
            if kind == "lex":
                lexical[(lhs, rhs[0])] = p
            elif len(rhs) == 2:
                binary[(lhs, rhs[0], rhs[1])] = p
            elif len(rhs) == 1:
                unary[(lhs, rhs[0])] = p
            else:
                raise GrammarError(f"rule must be unary or binary: {ln!r}")
        else:
            raise GrammarError(f"cannot parse grammar line {ln!r}")
    return Pcfg(binary, unary, lexical, start, terminal)


def load_pcfg(path) -> Pcfg:
    with open(path, encoding="utf-8") as f:
        return loads_pcfg(f.read())


def _count(tree: Tree, counts: Counter, terminal: str) -> None:
    if tree.is_preterminal:
        return
    for child in tree.children:
        _count(child, counts, terminal)
    kids = tree.children
    if len(kids) == 1:
        counts[("U", tree.label, kids[0].label)] += 1
    else:
        counts[("B", tree.label, kids[0].label, kids[1].label)] += 1
    for child in kids:
        if child.is_preterminal:
            counts[("L", child.label, child.word)] += 1


def induce_pcfg(trees, terminal: str = "pos") -> Pcfg:
    """Relative-frequency PCFG over the binarized trees.

    COORD and CCP function tags survive as part of the symbol (``NP^COORD``);
    other function tags are dropped. With ``terminal="pos"`` lexical rules
    rewrite a preterminal to its POS tag rather than the word.
    """
    trees = list(trees)
    if not trees:
        raise GrammarError("cannot induce a grammar from an empty treebank")
    counts: Counter = Counter()
    for t in trees:
        t = strip_ftags(with_root(t))
        if terminal == "pos":
            t = _pos_as_word(t)
        _count(binarize(t), counts, terminal)
    lhs_total: Counter = Counter()
    for key, c in counts.items():
        lhs_total[key[1]] += c
    binary, unary, lexical = {}, {}, {}
    for key, c in counts.items():
        p = c / lhs_total[key[1]]
        if key[0] == "B":
            binary[key[1:]] = p
        elif key[0] == "U":
            unary[key[1:]] = p
        else:
            lexical[key[1:]] = p
    return Pcfg(binary, unary, lexical, START, terminal)


def _pos_as_word(tree: Tree) -> Tree:
    if tree.is_preterminal:
        return Tree(tree.label, tree.ftags, (), tree.label, tree.start, tree.end)
    return Tree(tree.label, tree.ftags, tuple(_pos_as_word(c) for c in tree.children), None,
                tree.start, tree.end)


def flat_tree(tokens, label: str = "FRAG", start: int = 0) -> Tree:
    return build(label, [leaf(t.pos, t.word) for t in tokens], (), start)
