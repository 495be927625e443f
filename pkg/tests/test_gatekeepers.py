import numpy as np
import pytest

from coordbound.corpus import extract_all, generate_synthetic, load_bundled_spec, load_minicorpus
from coordbound.gatekeepers import (
    GateConfig,
    GateExample,
    GateModel,
    classify_coordination,
    classify_np,
    coordination_examples,
    gate_accuracy,
    gate_f1,
    np_examples,
    train_gate,
)

SMALL = GateConfig(emb_dim=8, lstm_dim=8, epochs=10, lr=0.1, seed=0)


def test_probability_stays_inside_unit_interval():
    gate = GateModel(GateConfig(emb_dim=2, lstm_dim=2), ["a", "and", "b"])
    for bias in (-1e4, 0.0, 1e4):
        gate.b.data[...] = bias
        p = gate.probability(["a", "and", "b"], 1)
        assert 0.0 < p < 1.0
    gate.b.data[...] = 0.0
    gate.v.data[...] = 0.0
    assert gate.probability(["a", "and", "b"], 1) == pytest.approx(0.5)


def test_balanced_pair_is_separated():
    examples = [GateExample(["cats", "and", "dogs"], 1, 1), GateExample(["And", "then", "rain"], 0, 0)]
    res = train_gate(examples, GateConfig(emb_dim=4, lstm_dim=4, epochs=150, lr=0.5))
    assert gate_accuracy(res.gate, examples) == 1.0
    assert res.losses[-1] < res.losses[0]


def test_zero_epochs_returns_initial_model():
    examples = [GateExample(["a", "and", "b"], 1, 1), GateExample(["And", "b"], 0, 0)]
    res = train_gate(examples, GateConfig(emb_dim=3, lstm_dim=3, epochs=0))
    fresh = GateModel(GateConfig(emb_dim=3, lstm_dim=3, epochs=0), sorted({"a", "and", "b", "And"}),
                      res.gate.singletons)
    for k, arr in res.gate.store.snapshot().items():
        np.testing.assert_array_equal(arr, fresh.store[k].data)
    assert res.losses == [] and res.best_epoch == 0


def test_single_class_training_is_rejected():
    with pytest.raises(ValueError):
        train_gate([GateExample(["a", "and", "b"], 1, 1)] * 3, SMALL)


def test_threshold_is_monotone():
    examples = [GateExample(["a", "and", "b"], 1, 1), GateExample(["And", "b"], 0, 0)]
    gate = train_gate(examples, GateConfig(emb_dim=3, lstm_dim=3, epochs=2)).gate
    p = gate.probability(["a", "and", "b"], 1)
    assert classify_coordination(gate, ["a", "and", "b"], 1, threshold=p).accept
    assert not classify_coordination(gate, ["a", "and", "b"], 1, threshold=min(1.0, p + 1e-9)).accept
    accepts = [classify_coordination(gate, ["a", "and", "b"], 1, threshold=t).accept for t in np.linspace(0, 1, 11)]
    assert accepts == sorted(accepts, reverse=True)


def test_classify_np_ignores_tokens_outside_window():
    trees = load_minicorpus()
    insts = extract_all(trees)
    gate = train_gate(np_examples(insts), GateConfig(emb_dim=6, lstm_dim=6, epochs=2)).gate
    inst = next(i for i in insts if i.gold is not None and i.gold[0][0] > 0 and i.gold[1][1] < len(i.sentence) - 1)
    words = inst.words
    (i, _), (_, m) = inst.gold
    base = classify_np(gate, inst.sentence, inst.gold, inst.coord_index).probability
    mutated = ["zzz"] * i + words[i:m + 1] + ["qqq"] * (len(words) - m - 1)
    assert classify_np(gate, mutated, inst.gold, inst.coord_index).probability == base
    inside = list(words)
    inside[inst.coord_index - 1 if inst.coord_index - 1 >= i else inst.coord_index + 1] = "zzz"
    assert classify_np(gate, inside, inst.gold, inst.coord_index).probability != base
    with pytest.raises(IndexError):
        classify_np(gate, words, ((0, 0), (1, 1)), 5)


def test_example_builders():
    insts = extract_all(load_minicorpus())
    coord = coordination_examples(insts)
    assert len(coord) == len(insts)
    assert {e.label for e in coord} == {0, 1}
    nps = np_examples(insts)
    assert all(e.span is not None for e in nps)
    assert {e.label for e in nps} == {0, 1}


def test_gate_rejects_discourse_and():
    trees = generate_synthetic(load_bundled_spec(), 400)
    train_ex = coordination_examples(extract_all(trees[:300]))
    test_ex = coordination_examples(extract_all(trees[300:]))
    res = train_gate(train_ex, GateConfig(emb_dim=8, lstm_dim=8, epochs=3, lr=0.1), dev=train_ex)
    negatives = [e for e in test_ex if e.label == 0]
    assert negatives
    assert gate_accuracy(res.gate, negatives) >= 0.9
    assert gate_accuracy(res.gate, test_ex) >= 0.95
    assert gate_f1(res.gate, train_ex) == pytest.approx(max(res.dev_f1))


def test_state_round_trip():
    examples = [GateExample(["a", "and", "b"], 1, 1), GateExample(["And", "b"], 0, 0)]
    gate = train_gate(examples, GateConfig(emb_dim=3, lstm_dim=3, epochs=1)).gate
    again = GateModel.from_state(gate.state())
    assert again.probability(["a", "and", "b"], 1) == gate.probability(["a", "and", "b"], 1)
    with pytest.raises(IndexError):
        gate.logit(["a"], 3)
