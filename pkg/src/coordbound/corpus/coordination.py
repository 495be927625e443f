"""Gold coordination instances read off COORD/CCP-annotated trees.

Annotation convention: conjunct nodes carry the ``COORD`` function tag, the
phrase dominating a coordination carries ``CCP``, and the coordinating word
is a ``CC`` preterminal.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Iterable

from .trees import Token, Tree, is_punct

COORD = "COORD"
CCP = "CCP"
COORD_WORDS = frozenset({"and", "or", "but", "nor"})

Span = tuple[int, int]  # inclusive token indices
SpanPair = tuple[Span, Span]

# Reasons an instance ended up with gold=None; bumped by extract_coordinations.
diagnostics: Counter = Counter()


def is_coord_word(word: str) -> bool:
    return word.lower() in COORD_WORDS


@dataclass(frozen=True)
class CoordinationInstance:
    sentence: tuple[Token, ...]
    coord_index: int
    gold: SpanPair | None
    coord_type: str | None = None
    # Inclusive span from the first to the last conjunct of the phrase.
    phrase: Span | None = None
    # Every conjunct of the phrase in order (inclusive spans); None when gold is None.
    conjuncts: tuple[Span, ...] | None = None

    def __post_init__(self):
        k = self.coord_index
        if not is_coord_word(self.sentence[k].word):
            raise ValueError(f"token {k} ({self.sentence[k].word!r}) is not a coordination word")
        if self.gold is not None:
            (i, j), (l, m) = self.gold
            if not (0 <= i <= j < k < l <= m < len(self.sentence)):
                raise ValueError(f"gold spans {self.gold} inconsistent with coordinator at {k}")

    @property
    def words(self) -> list[str]:
        return [t.word for t in self.sentence]

    @property
    def pos(self) -> list[str]:
        return [t.pos for t in self.sentence]

    def display(self) -> str:
        """Human-readable answer with 1-based positions, e.g. ``(9-10) New York ; (12-13) North Dakota``."""
        word = self.sentence[self.coord_index].word
        return f"{word}: {format_pair(self.words, self.gold)}"


def format_pair(words: list[str], pair: SpanPair | None) -> str:
    if pair is None:
        return "NONE"
    parts = []
    for i, j in pair:
        parts.append(f"({i + 1}-{j + 1}) {' '.join(words[i:j + 1])}")
    return " ; ".join(parts)


def _conjunct_children(parent: Tree, cc_pos: int):
    left = right = None
    for idx in range(cc_pos - 1, -1, -1):
        if parent.children[idx].has_ftag(COORD):
            left = parent.children[idx]
            break
    for idx in range(cc_pos + 1, len(parent.children)):
        if parent.children[idx].has_ftag(COORD):
            right = parent.children[idx]
            break
    return left, right


def extract_coordinations(tree: Tree) -> list[CoordinationInstance]:
    """One instance per coordinating word (CC-tagged and/or/but/nor).

    Gold conjuncts are the COORD-tagged siblings closest to the coordinator on
    each side; a coordinator lacking either side gets ``gold=None``.
    """
    tokens = tuple(tree.tokens())
    out = []
    stack: list[Tree] = [tree]
    found = []
    while stack:
        node = stack.pop()
        for pos, child in enumerate(node.children):
            if child.is_preterminal and child.label == "CC" and is_coord_word(child.word):
                found.append((child.start, node, pos))
        stack.extend(reversed(node.children))
    for k, parent, pos in sorted(found, key=lambda x: x[0]):
        left, right = _conjunct_children(parent, pos)
        coord_kids = [c for c in parent.children if c.has_ftag(COORD)]
        if left is None or right is None:
            diagnostics["no_conjuncts" if not coord_kids else "one_sided"] += 1
            out.append(CoordinationInstance(tokens, k, None, None, None))
            continue
        gold = ((left.start, left.end - 1), (right.start, right.end - 1))
        phrase = (coord_kids[0].start, coord_kids[-1].end - 1)
        if not _punct_gap(tokens, gold[0][1] + 1, k) or not _punct_gap(tokens, k + 1, gold[1][0]):
            diagnostics["non_adjacent"] += 1
        conjuncts = tuple((c.start, c.end - 1) for c in coord_kids)
        out.append(CoordinationInstance(tokens, k, gold, parent.label, phrase, conjuncts))
    return out


def _punct_gap(tokens, start, end) -> bool:
    return all(is_punct(tokens[t].pos) for t in range(start, end))


def extract_all(trees: Iterable[Tree]) -> list[CoordinationInstance]:
    out = []
    for t in trees:
        out.extend(extract_coordinations(t))
    return out
