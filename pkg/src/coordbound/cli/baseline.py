"""Reading a conjunct prediction off a parse tree."""

from __future__ import annotations

from dataclasses import dataclass

from ..corpus.trees import Tree, is_punct


@dataclass(frozen=True)
class BaselinePrediction:
    pair: tuple | None
    coord_type: str | None  # label of the phrase immediately dominating the coordinator


def _punct_only(node: Tree) -> bool:
    return all(is_punct(p.label) for p in node.preterminals())


def _find_parent(tree: Tree, k: int):
    for node in tree.subtrees():
        for pos, child in enumerate(node.children):
            if child.is_preterminal and child.start == k:
                return node, pos
    return None, None


def baseline_prediction(tree: Tree, coord_index: int) -> BaselinePrediction:
    """Nearest non-punctuation sibling phrases on each side of the coordinator.

    A coordinator that is the first or last non-punctuation child of its
    phrase yields no pair.
    """
    parent, pos = _find_parent(tree, coord_index)
    if parent is None:
        raise IndexError(f"no preterminal at position {coord_index}")
    left = next((c for c in reversed(parent.children[:pos]) if not _punct_only(c)), None)
    right = next((c for c in parent.children[pos + 1:] if not _punct_only(c)), None)
    if left is None or right is None:
        return BaselinePrediction(None, parent.label)
    return BaselinePrediction(((left.start, left.end - 1), (right.start, right.end - 1)), parent.label)


def baseline_from_tree(tree: Tree, coord_index: int):
    """Conjunct pair (inclusive spans) predicted by a parse tree, or None."""
    return baseline_prediction(tree, coord_index).pair
