"""Treebank reading, gold coordination extraction and synthetic corpora."""

from importlib import resources

from .coordination import (
    CCP,
    COORD,
    COORD_WORDS,
    CoordinationInstance,
    diagnostics,
    extract_all,
    extract_coordinations,
    format_pair,
    is_coord_word,
)
from .synthetic import GrammarSpec, GrammarSpecError, generate_synthetic, load_grammar_spec, parse_grammar_spec
from .trees import (
    PUNCT_TAGS,
    ParseError,
    Token,
    Tree,
    build,
    is_punct,
    leaf,
    parse_bracketed,
    pos_sequence,
    read_treebank,
    write_bracketed,
)

__all__ = [
    "CCP",
    "COORD",
    "COORD_WORDS",
    "CoordinationInstance",
    "diagnostics",
    "extract_all",
    "extract_coordinations",
    "format_pair",
    "is_coord_word",
    "GrammarSpec",
    "GrammarSpecError",
    "generate_synthetic",
    "load_grammar_spec",
    "parse_grammar_spec",
    "PUNCT_TAGS",
    "ParseError",
    "Token",
    "Tree",
    "build",
    "is_punct",
    "leaf",
    "parse_bracketed",
    "pos_sequence",
    "read_treebank",
    "write_bracketed",
    "data_path",
    "load_minicorpus",
    "load_bundled_spec",
]



def data_path(name: str):
    return resources.files(__package__).joinpath("data", name)


def load_minicorpus() -> list[Tree]:
    """The bundled hand-annotated mini-corpus."""
    return parse_bracketed(data_path("minicorpus.mrg").read_text(encoding="utf-8"))


def load_bundled_spec(name: str = "desk.grammar") -> GrammarSpec:
    return parse_grammar_spec(data_path(name).read_text(encoding="utf-8"))
