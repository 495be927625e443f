"""``coordbound`` command line.

Exit codes: 0 success, 1 usage error, 2 data error, 3 internal check failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import fields
from pathlib import Path

import yaml

from ..corpus import (
    ParseError,
    Token,
    extract_all,
    generate_synthetic,
    load_bundled_spec,
    load_grammar_spec,
    read_treebank,
    write_bracketed,
)
from ..corpus.coordination import is_coord_word
from ..corpus.synthetic import GrammarSpecError
from ..gatekeepers import GateConfig, coordination_examples, np_examples, train_gate
from ..grammar import GrammarError, induce_pcfg, viterbi
from ..scorer import Preparer, ScorerConfig, build_model, predict, train
from .baseline import baseline_prediction
from .bundle import BundleError, ModelBundle, load_bundle, save_bundle
from .evaluation import evaluate_exact, evaluate_phrase_recall
from .experiments import ablation_table, run_ablation, run_grid, train_ablation_models

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_INTERNAL = 0, 1, 2, 3
log = logging.getLogger("coordbound")


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# configuration

SCORER_KEYS = {f.name for f in fields(ScorerConfig)}


def load_config(path) -> dict:
    if path is None:
        return {}
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as e:
        raise DataError(f"cannot read config {p}: {e}") from e
    try:
        data = json.loads(text) if p.suffix == ".json" else yaml.safe_load(text)
    except (json.JSONDecodeError, yaml.YAMLError) as e:
        raise DataError(f"cannot parse config {p}: {e}") from e
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise DataError(f"config {p} must be a mapping")
    return {k.replace("-", "_"): v for k, v in data.items()}


def merged_options(args) -> dict:
    """Config file values, overridden by options given on the command line."""
    opts = load_config(getattr(args, "config", None))
    for k, v in vars(args).items():
        if v is not None and k not in ("func", "config"):
            opts[k] = v
    return opts


def scorer_config(opts: dict) -> ScorerConfig:
    kw = {k: opts[k] for k in SCORER_KEYS if k in opts}
    try:
        return ScorerConfig(**kw)
    except (TypeError, ValueError) as e:
        raise UsageError(str(e)) from e


def gate_config(opts: dict) -> GateConfig:
    return GateConfig(emb_dim=opts.get("gate_emb_dim", 50), lstm_dim=opts.get("gate_lstm_dim", 50),
                      epochs=opts.get("gate_epochs", 10), lr=opts.get("gate_lr", 0.1), seed=opts.get("seed", 0))


# data helpers

def read_trees(path):
    if path is None:
        raise UsageError("a treebank path is required")
    try:
        return read_treebank(path)
    except OSError as e:
        raise DataError(f"cannot read {path}: {e}") from e


def read_tagged(path) -> list[list[Token]]:
    """Sentences as whitespace-separated ``word/POS`` tokens, one per line."""
    out = []
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as e:
        raise DataError(f"cannot read {path}: {e}") from e
    for lineno, line in enumerate(lines, 1):
        if not line.strip():
            continue
        toks = []
        for i, item in enumerate(line.split()):
            word, sep, pos = item.rpartition("/")
            if not sep or not word or not pos:
                raise DataError(f"{path}:{lineno}: token {item!r} is not word/POS")
            toks.append(Token(i, word, pos))
        out.append(toks)
    return out


def read_queries(path, sentences) -> list[tuple[int, int]]:
    if path is None:
        return [(s, k) for s, sent in enumerate(sentences) for k, t in enumerate(sent) if is_coord_word(t.word)]
    out = []
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as e:
        raise DataError(f"cannot read {path}: {e}") from e
    for lineno, line in enumerate(lines, 1):
        if not line.strip():
            continue
        try:
            s, k = (int(x) for x in line.split())
        except ValueError as e:
            raise DataError(f"{path}:{lineno}: expected 'sentIdx coordIdx', got {line!r}") from e
        if not (0 <= s < len(sentences) and 0 <= k < len(sentences[s])):
            raise DataError(f"{path}:{lineno}: query {s} {k} out of range")
        out.append((s, k))
    return out


def format_pair(pair) -> str:
    if pair is None:
        return "NONE"
    (i, j), (l, m) = pair
    return f"{i} {j} {l} {m}"


def write_out(path, text: str) -> None:
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


# commands

def _prepare_train_dev(opts):
    train_trees = read_trees(opts.get("train"))
    pcfg = induce_pcfg(train_trees)
    mode = opts.get("mode", "path")
    multi = bool(opts.get("multi_span", False))
    prep = Preparer(pcfg, mode, multi)
    train_inst = extract_all(train_trees)
    dev_inst = extract_all(read_trees(opts["dev"])) if opts.get("dev") else []
    ptrain = prep.prepare(train_inst)
    pdev = Preparer(pcfg, mode, multi).prepare(dev_inst) if dev_inst else []
    return pcfg, train_inst, dev_inst, ptrain, pdev, prep.stats


def _train_gates(opts, train_inst, dev_inst) -> dict:
    gates = {}
    gcfg = gate_config(opts)
    for name, make in (("coord", coordination_examples), ("np", np_examples)):
        ex = make(train_inst)
        if len({e.label for e in ex}) < 2:
            log.warning("skipping the %s gate: training data has a single class", name)
            continue
        gates[name] = train_gate(ex, gcfg, make(dev_inst) or None).gate
    return gates


def cmd_train(args) -> int:
    opts = merged_options(args)
    cfg = scorer_config(opts)
    pcfg, train_inst, dev_inst, ptrain, pdev, stats = _prepare_train_dev(opts)
    model = build_model(cfg, ptrain)
    res = train(model, ptrain, cfg, pdev or None)
    gates = {} if opts.get("no_gates") else _train_gates(opts, train_inst, dev_inst)
    bundle = ModelBundle(model, pcfg, gates, {k: v for k, v in sorted(opts.items()) if _plain(v)})
    save_bundle(bundle, opts["out"])
    print(f"{len(ptrain)} training instances: {res.no_gold} without conjuncts, "
          f"{res.skipped} with the gold pair missing from the candidates")
    for h in res.history:
        dev = "-" if h.dev_f1 is None else f"{100 * h.dev_f1:.2f}"
        print(f"epoch {h.epoch}\tloss {h.loss:.4f}\ttrain-acc {100 * h.train_accuracy:.2f}\tdev-F1 {dev}")
    print(f"kept epoch {res.best_epoch}; bundle written to {opts['out']}")
    return EXIT_OK


def _plain(v) -> bool:
    return isinstance(v, (str, int, float, bool, list, tuple)) or v is None


def _load(path) -> ModelBundle:
    try:
        return load_bundle(path)
    except OSError as e:
        raise DataError(f"cannot read bundle {path}: {e}") from e


def cmd_predict(args) -> int:
    opts = merged_options(args)
    bundle = _load(opts["bundle"])
    sentences = read_tagged(opts["input"])
    queries = read_queries(opts.get("queries"), sentences)
    prep = Preparer(bundle.pcfg, bundle.scorer.config.mode)
    gates = {} if opts.get("no_gates") else bundle.gates
    lines = []
    for s, k in queries:
        p = predict(bundle.scorer, gates, sentences[s], k, prep, np_mode=bool(opts.get("np")))
        lines.append(format_pair(p.pair))
    write_out(opts.get("output"), "".join(line + "\n" for line in lines))
    return EXIT_OK


def cmd_eval(args) -> int:
    opts = merged_options(args)
    bundle = _load(opts["bundle"])
    trees = read_trees(opts.get("test"))
    instances = extract_all(trees)
    multi = bool(opts.get("phrase_recall"))
    prep = Preparer(bundle.pcfg, bundle.scorer.config.mode, multi)
    gates = {} if opts.get("no_gates") else bundle.gates
    typed = bool(opts.get("typed"))
    preds = [predict(bundle.scorer, gates, inst.sentence, inst.coord_index, prep, np_mode=typed).pair
             for inst in instances]
    if multi:
        rows = [(inst, p) for inst, p in zip(instances, preds) if inst.phrase is not None]
        rep = evaluate_phrase_recall([(inst.coord_type, inst.phrase) for inst, _ in rows], [p for _, p in rows])
        print(rep.row("phrase-recall"))
        for label, d in rep.per_type.items():
            print(f"{label}\t{d['gold']}\t{100 * d['recall']:.2f}")
        return EXIT_OK
    rep = evaluate_exact(instances, preds, typed=typed)
    print(rep.row("typed-NP" if typed else "all"))
    return EXIT_OK


def cmd_baseline(args) -> int:
    opts = merged_options(args)
    gold_trees = read_trees(opts.get("test"))
    if opts.get("trees"):
        parsed = read_trees(opts["trees"])
        if len(parsed) != len(gold_trees):
            raise DataError(f"{len(parsed)} parsed trees for {len(gold_trees)} gold trees")
    else:
        pcfg = induce_pcfg(read_trees(opts.get("train")))
        parsed = [viterbi(pcfg, t.tokens()) for t in gold_trees]
    instances, preds, types = [], [], []
    for gold, tree in zip(gold_trees, parsed):
        for inst in extract_all([gold]):
            instances.append(inst)
            if tree is None:
                preds.append(None)
                types.append(None)
                continue
            bp = baseline_prediction(tree, inst.coord_index)
            preds.append(bp.pair)
            types.append(bp.coord_type)
    typed = bool(opts.get("typed"))
    rep = evaluate_exact(instances, preds, typed=typed, pred_types=types if typed else None)
    print(rep.row("baseline-typed-NP" if typed else "baseline"))
    return EXIT_OK


def cmd_gen_corpus(args) -> int:
    opts = merged_options(args)
    try:
        spec = load_grammar_spec(opts["spec"]) if opts.get("spec") else load_bundled_spec()
    except OSError as e:
        raise DataError(f"cannot read grammar spec: {e}") from e
    if "seed" in opts:
        spec.seed = int(opts["seed"])
    trees = generate_synthetic(spec, int(opts.get("n", 100)))
    write_out(opts.get("out"), write_bracketed(trees))
    return EXIT_OK


def cmd_grid(args) -> int:
    opts = merged_options(args)
    cfg = scorer_config(opts)
    pcfg, train_inst, dev_inst, ptrain, pdev, _ = _prepare_train_dev(opts)
    if not pdev:
        raise UsageError("grid search needs --dev")
    n_seeds = int(opts.get("seeds", 5))
    base_seed = int(opts.get("seed", 0))
    res = run_grid(cfg, ptrain, pdev, seeds=tuple(range(base_seed, base_seed + n_seeds)),
                   hidden=tuple(opts.get("hidden", (100, 200, 400))), emb=tuple(opts.get("emb", (100, 300))))
    out_dir = Path(opts.get("out_dir", "grid-out"))
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "leaderboard.tsv").write_text(res.leaderboard(), encoding="utf-8")
    gates = {} if opts.get("no_gates") else _train_gates(opts, train_inst, dev_inst)
    save_bundle(ModelBundle(res.best, pcfg, gates, {"grid_winner": vars(res.best_row)}), out_dir / "best.cbnd")
    sys.stdout.write(res.leaderboard())
    return EXIT_OK


def cmd_ablation(args) -> int:
    opts = merged_options(args)
    cfg = scorer_config(opts)
    _, _, _, ptrain, pdev, _ = _prepare_train_dev(opts)
    if not pdev:
        raise UsageError("ablation needs --dev")
    models = train_ablation_models(cfg, ptrain, pdev)
    table = ablation_table(run_ablation(models, pdev))
    write_out(opts.get("output"), table)
    return EXIT_OK


def _scorer_options(p):
    p.add_argument("--mode", choices=("path", "pos"), help="symmetry inputs (default path)")
    p.add_argument("--epochs", type=int)
    p.add_argument("--lstm-dim", dest="lstm_dim", type=int)
    p.add_argument("--emb-dim", dest="emb_dim", type=int)
    p.add_argument("--mlp-hidden", dest="mlp_hidden", type=int)
    p.add_argument("--lr", type=float)
    p.add_argument("--gate-epochs", dest="gate_epochs", type=int)
    p.add_argument("--multi-span", dest="multi_span", action="store_true", default=None,
                   help="train on first/last conjunct pairs from up-to-7-span candidates")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="coordbound", description="Coordination boundary prediction.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    def command(name, func, help_text):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="YAML or JSON file of option defaults")
        p.add_argument("--seed", type=int)
        p.set_defaults(func=func)
        return p

    p = command("train", cmd_train, "train a scorer and gates, write a bundle")
    p.add_argument("--train", required=True)
    p.add_argument("--dev")
    p.add_argument("--out", required=True)
    p.add_argument("--no-gates", dest="no_gates", action="store_true", default=None)
    _scorer_options(p)

    p = command("predict", cmd_predict, "predict conjuncts for word/POS sentences")
    p.add_argument("--bundle", required=True)
    p.add_argument("--input", required=True, help="one sentence per line, word/POS tokens")
    p.add_argument("--queries", help="'sentIdx coordIdx' per line (default: every coordinator)")
    p.add_argument("--output")
    p.add_argument("--np", action="store_true", default=None, help="NP-only predictions")
    p.add_argument("--no-gates", dest="no_gates", action="store_true", default=None)

    p = command("eval", cmd_eval, "evaluate a bundle on a gold treebank")
    p.add_argument("--bundle", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--typed", action="store_true", default=None, help="NP-typed evaluation")
    p.add_argument("--phrase-recall", dest="phrase_recall", action="store_true", default=None)
    p.add_argument("--no-gates", dest="no_gates", action="store_true", default=None)

    p = command("baseline", cmd_baseline, "evaluate conjuncts read off parse trees")
    p.add_argument("--test", required=True, help="gold treebank")
    p.add_argument("--trees", help="parsed trees aligned with --test")
    p.add_argument("--train", help="treebank for the grammar used when --trees is absent")
    p.add_argument("--typed", action="store_true", default=None)

    p = command("gen-corpus", cmd_gen_corpus, "sample a synthetic annotated treebank")
    p.add_argument("--spec", help="grammar spec file (default: bundled desk grammar)")
    p.add_argument("--n", type=int)
    p.add_argument("--out")

    p = command("grid", cmd_grid, "grid search over seeds, MLP hidden and embedding sizes")
    p.add_argument("--train", required=True)
    p.add_argument("--dev", required=True)
    p.add_argument("--seeds", type=int, help="number of seeds (default 5)")
    p.add_argument("--hidden", type=int, nargs="+")
    p.add_argument("--emb", type=int, nargs="+")
    p.add_argument("--out-dir", dest="out_dir")
    p.add_argument("--no-gates", dest="no_gates", action="store_true", default=None)
    _scorer_options(p)

    p = command("ablation", cmd_ablation, "train and compare single-component models")
    p.add_argument("--train", required=True)
    p.add_argument("--dev", required=True)
    p.add_argument("--output")
    _scorer_options(p)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    if not getattr(args, "func", None):
        parser.print_help(sys.stderr)
        return EXIT_USAGE
    del args.verbose, args.command
    try:
        return args.func(args)
    except UsageError as e:
        print(f"coordbound: usage error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, ParseError, GrammarSpecError, BundleError, GrammarError, OSError, ValueError) as e:
        print(f"coordbound: data error: {e}", file=sys.stderr)
        return EXIT_DATA
    except Exception as e:  # anything else is a bug or a failed internal check
        log.debug("internal failure", exc_info=True)
        print(f"coordbound: internal check failed: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
