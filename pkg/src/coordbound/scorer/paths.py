"""Per-word label paths through a conjunct subtree, with neighbour markers.

Each word contributes the labels from its POS node up to the conjunct root.
``R`` goes right after the lowest common ancestor shared with the next word
and ``L`` right after the one shared with the previous word. When both land
above the same node, ``L`` comes first.
"""

from __future__ import annotations

from ..corpus.trees import Tree

MARK_LEFT = "L"
MARK_RIGHT = "R"


def _ancestor_chains(tree: Tree) -> list[list[Tree]]:
    """For every preterminal, the nodes from it up to the root (inclusive)."""
    chains: list[list[Tree]] = []

    def walk(node: Tree, above: list[Tree]):
        if node.is_preterminal:
            chains.append([node, *reversed(above)])
            return
        for child in node.children:
            walk(child, above + [node])

    walk(tree, [])
    return chains


def _lca_depth(a: list[Tree], b: list[Tree]) -> int:
    """Index in chain ``a`` of the lowest node shared with chain ``b``."""
    shared = {id(n) for n in b}
    for pos, node in enumerate(a):
        if id(node) in shared:
            return pos
    raise ValueError("preterminals do not share a root")


def decompose_paths(tree: Tree) -> list[list[str]]:
    """One label path per word of ``tree``.

    >>> from coordbound.corpus import parse_bracketed
    >>> t = parse_bracketed("(VP (VB cut) (NP (PRP$ their) (NNS risks)))")[0]
    >>> decompose_paths(t)
    [['VB', 'VP', 'R'], ['PRP$', 'NP', 'R', 'VP', 'L'], ['NNS', 'NP', 'L', 'VP']]
    """
    chains = _ancestor_chains(tree)
    paths = []
    for t, chain in enumerate(chains):
        marks: dict[int, list[str]] = {}
        if t > 0:
            marks.setdefault(_lca_depth(chain, chains[t - 1]), []).append(MARK_LEFT)
        if t + 1 < len(chains):
            marks.setdefault(_lca_depth(chain, chains[t + 1]), []).append(MARK_RIGHT)
        path = []
        for pos, node in enumerate(chain):
            path.append(node.label)
            path.extend(marks.get(pos, ()))
        paths.append(path)
    return paths
