"""Constituency trees and a reader/writer for Penn-style bracketed text."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Sequence

__all__ = [
    "ParseError",
    "Token",
    "Tree",
    "build",
    "leaf",
    "parse_bracketed",
    "read_treebank",
    "write_bracketed",
    "pos_sequence",
    "split_label",
    "join_label",
    "PUNCT_TAGS",
    "is_punct",
]

# POS tags treated as punctuation for sibling skipping and adjacency checks.
PUNCT_TAGS = frozenset({",", ".", ":", "``", "''", "-LRB-", "-RRB-", "HYPH", "NFP", "P", "--"})


def is_punct(pos: str) -> bool:
    return pos in PUNCT_TAGS


class ParseError(ValueError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{message} (line {line}, column {column})")
        self.line = line
        self.column = column


@dataclass(frozen=True)
class Token:
    index: int
    word: str
    pos: str

    def __post_init__(self):
        if not self.word or not self.pos:
            raise ValueError(f"empty word or POS at position {self.index}")


def split_label(label: str) -> tuple[str, tuple[str, ...]]:
    """Split ``NP-SBJ-COORD`` into ``("NP", ("SBJ", "COORD"))``.

    Labels wrapped in dashes (``-LRB-``, ``-NONE-``) are kept whole.
    """
    if len(label) > 1 and label.startswith("-") and label.endswith("-"):
        return label, ()
    parts = label.split("-")
    if parts[0] == "":
        return label, ()
    return parts[0], tuple(parts[1:])


def join_label(base: str, ftags: Sequence[str]) -> str:
    return "-".join([base, *ftags])


@dataclass(frozen=True)
class Tree:
    """A constituency node covering the half-open token interval [start, end).

    Preterminals carry ``word`` and no children.
    """

    label: str
    ftags: tuple[str, ...] = ()
    children: tuple["Tree", ...] = ()
    word: str | None = None
    start: int = 0
    end: int = field(default=0)

    @property
    def span(self) -> tuple[int, int]:
        return (self.start, self.end)

    @property
    def full_label(self) -> str:
        return join_label(self.label, self.ftags)

    @property
    def is_preterminal(self) -> bool:
        return self.word is not None

    def has_ftag(self, tag: str) -> bool:
        return tag in self.ftags

    def __len__(self) -> int:
        return self.end - self.start

    def subtrees(self) -> Iterator["Tree"]:
        """Pre-order traversal."""
        stack = [self]
        while stack:
            node = stack.pop()
            yield node
            stack.extend(reversed(node.children))

    def preterminals(self) -> list["Tree"]:
        return [t for t in self.subtrees() if t.is_preterminal]

    def tokens(self) -> list[Token]:
        return [Token(t.start, t.word, t.label) for t in self.preterminals()]

    def words(self) -> list[str]:
        return [t.word for t in self.preterminals()]

    def pos_tags(self) -> list[str]:
        return [t.label for t in self.preterminals()]

    def constituent_spans(self) -> set[tuple[int, int]]:
        """Half-open spans of all phrasal (non-preterminal) nodes."""
        return {t.span for t in self.subtrees() if not t.is_preterminal}

    def to_bracketed(self) -> str:
        if self.is_preterminal:
            return f"({self.full_label} {self.word})"
        inner = " ".join(c.to_bracketed() for c in self.children)
        return f"({self.full_label} {inner})"

    def __str__(self) -> str:
        return self.to_bracketed()

    def structure(self):
        """Span-free nested tuple, handy for structural comparisons."""
        if self.is_preterminal:
            return (self.label, self.ftags, self.word)
        return (self.label, self.ftags, tuple(c.structure() for c in self.children))


def leaf(pos: str, word: str, start: int = 0) -> Tree:
    base, ftags = split_label(pos)
    return Tree(base, ftags, (), word, start, start + 1)


def build(label: str, children: Sequence[Tree], ftags: Sequence[str] = (), start: int = 0) -> Tree:
    """Build a phrasal node, re-assigning spans of all children from ``start``."""
    if not children:
        raise ValueError(f"phrasal node {label!r} needs at least one child")
    out = []
    pos = start
    for child in children:
        child = respan(child, pos)
        out.append(child)
        pos = child.end
    return Tree(label, tuple(ftags), tuple(out), None, start, pos)


def respan(tree: Tree, start: int) -> Tree:
    if tree.is_preterminal:
        if tree.start == start:
            return tree
        return Tree(tree.label, tree.ftags, (), tree.word, start, start + 1)
    if tree.start == start:
        return tree
    return build(tree.label, tree.children, tree.ftags, start)


def _tokenize(text: str):
    line, col = 1, 1
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch in "()":
            yield ch, line, col
            i += 1
            col += 1
        elif ch.isspace():
            if ch == "\n":
                line += 1
                col = 1
            else:
                col += 1
            i += 1
        else:
            j = i
            while j < n and not text[j].isspace() and text[j] not in "()":
                j += 1
            yield text[i:j], line, col
            col += j - i
            i = j


def parse_bracketed(text: str) -> list[Tree]:
    """Read every tree in ``text``.

    >>> t = parse_bracketed("(S (NP (DT the) (NN dog)) (VP (VBD ran)))")[0]
    >>> t.span, t.children[0].span
    ((0, 3), (0, 2))
    """
    tokens = list(_tokenize(text))
    trees = []
    pos = 0
    end_line, end_col = _end_position(text)

    def expect_more(at):
        if at >= len(tokens):
            raise ParseError("unexpected end of input", end_line, end_col)

    def parse_node(at, start):
        tok, line, col = tokens[at]
        if tok != "(":
            raise ParseError(f"expected '(' but found {tok!r}", line, col)
        at += 1
        expect_more(at)
        label = ""
        tok, l2, c2 = tokens[at]
        if tok not in "()":
            label = tok
            at += 1
            expect_more(at)
        tok, l3, c3 = tokens[at]
        if tok == ")":
            raise ParseError("empty constituent", line, col)
        if tok != "(":
            # preterminal: (POS word)
            word = tok
            at += 1
            expect_more(at)
            close, l4, c4 = tokens[at]
            if close != ")":
                raise ParseError(f"expected ')' after word {word!r}", l4, c4)
            if not label:
                raise ParseError("preterminal without a label", line, col)
            return leaf(label, word, start), at + 1
        children = []
        cur = start
        while True:
            expect_more(at)
            tok, l5, c5 = tokens[at]
            if tok == ")":
                break
            child, at = parse_node(at, cur)
            children.append(child)
            cur = child.end
        base, ftags = split_label(label) if label else ("", ())
        node = Tree(base, ftags, tuple(children), None, start, cur)
        return node, at + 1

    while pos < len(tokens):
        tok, line, col = tokens[pos]
        if tok == ")":
            raise ParseError("unbalanced ')'", line, col)
        tree, pos = parse_node(pos, 0)
        trees.append(tree)
    return trees


def _end_position(text: str) -> tuple[int, int]:
    lines = text.split("\n")
    return len(lines), len(lines[-1]) + 1


def read_treebank(path) -> list[Tree]:
    with open(path, encoding="utf-8") as f:
        return parse_bracketed(f.read())


def write_bracketed(trees: Sequence[Tree]) -> str:
    """One tree per line."""
    return "".join(t.to_bracketed() + "\n" for t in trees)


def pos_sequence(tree: Tree, span: tuple[int, int]) -> list[str]:
    start, end = span
    if not (0 <= start < end <= tree.end):
        raise IndexError(f"span [{start},{end}) outside [0,{tree.end})")
    return tree.pos_tags()[start:end]
