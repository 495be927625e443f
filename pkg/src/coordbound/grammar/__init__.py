"""PCFG induction and exact chart computations."""

from .chart import (
    MAX_UNARY_CHAIN,
    Chart,
    SubtreeResult,
    best_subtree,
    compute_chart,
    inside,
    outside,
    viterbi,
)
from .pcfg import (
    START,
    GrammarError,
    Pcfg,
    binarize,
    debinarize,
    fold,
    induce_pcfg,
    is_coord_symbol,
    is_intermediate,
    load_pcfg,
    loads_pcfg,
    unfold,
)

__all__ = [
    "MAX_UNARY_CHAIN",
    "Chart",
    "SubtreeResult",
    "best_subtree",
    "compute_chart",
    "inside",
    "outside",
    "viterbi",
    "START",
    "GrammarError",
    "Pcfg",
    "binarize",
    "debinarize",
    "fold",
    "induce_pcfg",
    "is_coord_symbol",
    "is_intermediate",
    "load_pcfg",
    "loads_pcfg",
    "unfold",
]

