"""Coordination boundary prediction: conjunct candidates from a PCFG chart,
ranked by a neural symmetry/replacement scorer."""

__version__ = "0.1.0"
