"""Grid search and component ablation over prepared instances."""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field, replace

from ..scorer.model import COMPONENTS, ScorerConfig, ScorerModel
from ..scorer.train import build_model, predict_prepared, train
from .evaluation import EvalReport, evaluate_exact

log = logging.getLogger(__name__)

ABLATION_ROWS = {
    "Sym": ("sym",),
    "Rep_p": ("repl_p",),
    "Rep_w": ("repl_w",),
    "Feats": ("feats",),
    "Joint": COMPONENTS,
}


def evaluate_model(model: ScorerModel, prepared) -> EvalReport:
    preds = [predict_prepared(model, p) for p in prepared]
    return evaluate_exact([p.instance for p in prepared], preds)


@dataclass
class GridRow:
    seed: int
    mlp_hidden: int
    emb_dim: int
    dev_f1: float
    best_epoch: int


@dataclass
class GridResult:
    best: ScorerModel
    best_row: GridRow
    rows: list[GridRow] = field(default_factory=list)

    def leaderboard(self) -> str:
        lines = ["seed\tmlp_hidden\temb_dim\tdev_f1\tbest_epoch"]
        for r in sorted(self.rows, key=lambda r: (-r.dev_f1, r.seed, r.mlp_hidden, r.emb_dim)):
            lines.append(f"{r.seed}\t{r.mlp_hidden}\t{r.emb_dim}\t{r.dev_f1:.4f}\t{r.best_epoch}")
        return "\n".join(lines) + "\n"


def run_grid(base: ScorerConfig, train_prepared, dev_prepared, seeds=(0, 1, 2, 3, 4),
             hidden=(100, 200, 400), emb=(100, 300)) -> GridResult:
    """Train one model per (seed, MLP hidden size, embedding size) and keep the best on dev.

    Ties go to the earlier cell in iteration order, so the winner is
    deterministic for fixed seeds and data.
    """
    cells = list(itertools.product(seeds, hidden, emb))
    if not cells:
        raise ValueError("empty grid")
    if not dev_prepared:
        raise ValueError("grid search needs a dev set")
    rows, best, best_row = [], None, None
    for seed, h, e in cells:
        cfg = replace(base, seed=seed, mlp_hidden=h, emb_dim=e)
        model = build_model(cfg, train_prepared)
        res = train(model, train_prepared, cfg, dev_prepared)
        f1 = evaluate_model(model, dev_prepared).f1
        row = GridRow(seed, h, e, f1, res.best_epoch)
        rows.append(row)
        log.info("grid seed=%d hidden=%d emb=%d dev-f1=%.4f", seed, h, e, f1)
        if best_row is None or f1 > best_row.dev_f1:
            best, best_row = model, row
    return GridResult(best, best_row, rows)


def train_ablation_models(base: ScorerConfig, train_prepared, dev_prepared=None) -> dict[str, ScorerModel]:
    """One model per row, each trained with only its component feeding the MLP."""
    out = {}
    for name, comps in ABLATION_ROWS.items():
        cfg = replace(base, components=comps)
        model = build_model(cfg, train_prepared)
        train(model, train_prepared, cfg, dev_prepared)
        out[name] = model
    return out


def run_ablation(models: dict[str, ScorerModel], dev_prepared) -> dict[str, EvalReport]:
    """Dev exact-match report for every ablation row."""
    missing = [name for name in ABLATION_ROWS if name not in models]
    if missing:
        raise ValueError(f"missing component models: {', '.join(missing)}")
    return {name: evaluate_model(models[name], dev_prepared) for name in ABLATION_ROWS}


def ablation_table(reports: dict[str, EvalReport]) -> str:
    lines = ["model\tP\tR\tF1"]
    for name, rep in reports.items():
        lines.append(f"{name}\t{100 * rep.precision:.2f}\t{100 * rep.recall:.2f}\t{100 * rep.f1:.2f}")
    return "\n".join(lines) + "\n"
