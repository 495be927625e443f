import math

import numpy as np
import pytest

from coordbound.candgen import CandidatePair
from coordbound.corpus import extract_all, extract_coordinations, load_minicorpus, parse_bracketed
from coordbound.diffcore import grad_check
from coordbound.gatekeepers import GateConfig, GateModel
from coordbound.grammar import induce_pcfg
from coordbound.scorer import (
    PreparedInstance,
    Preparer,
    ScorerConfig,
    ScorerModel,
    Vocab,
    build_model,
    connection_point,
    decompose_paths,
    predict,
    predict_prepared,
    ranking_loss,
    repl_vector,
    score_candidate,
    sym_score,
    train,
    training_accuracy,
)
from oracles import lca_paths, lstm_final, mlp

WORDS = ["cats", "and", "big", "dogs", "bark"]
POS = ["NNS", "CC", "JJ", "NNS", "VBP"]
LABELS = ["NP", "L", "R", "ADJP"]


def nested(tree):
    if tree.is_preterminal:
        return (tree.label, [tree.word])
    return (tree.label, [nested(c) for c in tree.children])


def tiny_model(mode="path", seed=0, components=None):
    cfg = ScorerConfig(mode=mode, lstm_dim=3, emb_dim=2, mlp_hidden=4, seed=seed,
                       **({"components": components} if components else {}))
    model = ScorerModel(cfg, Vocab(sorted(set(WORDS)), sorted(set(POS)), LABELS))
    rng = np.random.default_rng(seed + 100)
    for p in model.parameters():
        p.data[...] = rng.normal(0.0, 0.7, size=p.data.shape)
    return model


def emb(table, sym):
    return table.weights.data[table.index.get(sym, 0)]


def lstm_of(params, xs):
    return lstm_final(xs, params.w.data, params.u.data, params.b.data)


def oracle_encode(model, conj):
    if model.config.mode == "pos":
        return lstm_of(model.span_lstm, [emb(model.pos_emb, t) for t in conj])
    states = []
    for path in conj:
        xs = [emb(model.pos_emb, path[0])] + [emb(model.label_emb, lab) for lab in path[1:]]
        states.append(lstm_of(model.path_lstm, xs))
    return lstm_of(model.span_lstm, states)


def oracle_repl(model, seq, pair, level):
    table, f, b = {"word": (model.word_emb, model.word_f, model.word_b),
                   "pos": (model.pos_emb, model.pos_f, model.pos_b)}[level]
    xs = [emb(table, s) for s in seq]
    (i, j), (l, m) = pair
    return np.concatenate([lstm_of(f, xs[:i]), lstm_of(b, xs[l:][::-1]),
                           lstm_of(f, xs[:j + 1]), lstm_of(b, xs[m + 1:][::-1])])


def oracle_score(model, words, pos, cand, paths):
    a, b = cand.spans
    if model.config.mode == "path":
        ea, eb = oracle_encode(model, paths[a]), oracle_encode(model, paths[b])
    else:
        ea, eb = oracle_encode(model, pos[a[0]:a[1] + 1]), oracle_encode(model, pos[b[0]:b[1] + 1])
    x = np.concatenate([[math.sqrt(np.sum((ea - eb) ** 2) + 1e-12)],
                        oracle_repl(model, words, cand.spans, "word"),
                        oracle_repl(model, pos, cand.spans, "pos"),
                        cand.feats()])
    m = model.mlp
    return mlp(x, m.w.data, m.b.data, m.v.data)[0]


def tiny_prepared():
    tree = parse_bracketed("(S (NP-CCP (NNS-COORD cats) (CC and) (NP-COORD (JJ big) (NNS dogs))) (VBP bark))")[0]
    (inst,) = extract_coordinations(tree)
    cands = [CandidatePair((0, 0), (2, 3), -1.0, 1, 1.0, True),
             CandidatePair((0, 0), (2, 2), -2.0, 2, math.exp(-1.0), False)]
    paths = {(0, 0): [["NNS"]], (2, 3): [["JJ", "NP", "R"], ["NNS", "NP", "L"]], (2, 2): [["JJ"]]}
    return PreparedInstance(WORDS, POS, cands, 0, paths, inst, 1)


# path decomposition

def test_paths_cut_their_risks():
    t = parse_bracketed("(VP (VB cut) (NP (PRP$ their) (NNS risks)))")[0]
    assert decompose_paths(t) == [["VB", "VP", "R"], ["PRP$", "NP", "R", "VP", "L"], ["NNS", "NP", "L", "VP"]]


def test_paths_single_word_and_flat_tree():
    assert decompose_paths(parse_bracketed("(NN dog)")[0]) == [["NN"]]
    t = parse_bracketed("(X (A a) (B b))")[0]
    assert decompose_paths(t) == [["A", "X", "R"], ["B", "X", "L"]] == lca_paths(nested(t))


def test_paths_match_lca_oracle_on_minicorpus():
    for tree in load_minicorpus()[:30]:
        for node in tree.subtrees():
            if not node.is_preterminal:
                assert decompose_paths(node) == lca_paths(nested(node))


# symmetry

@pytest.mark.parametrize("mode", ["path", "pos"])
def test_sym_score_properties(mode):
    model = tiny_model(mode)
    a = [["JJ", "NP", "R"], ["NNS", "NP", "L"]] if mode == "path" else ["JJ", "NNS"]
    b = [["NNS"]] if mode == "path" else ["NNS"]
    d_ab = sym_score(model, a, b).data.item()
    assert d_ab >= 0
    assert d_ab == pytest.approx(sym_score(model, b, a).data.item(), abs=1e-15)
    assert sym_score(model, a, a).data.item() == pytest.approx(0.0, abs=1e-5)
    ref = np.linalg.norm(oracle_encode(model, a) - oracle_encode(model, b))
    assert d_ab == pytest.approx(ref, rel=1e-9)


# replacement

def test_connection_point_whole_sentence_boundary():
    model = tiny_model()
    cp = connection_point(model, WORDS, 0, 1)
    np.testing.assert_array_equal(cp.data[:3], np.zeros(3))
    xs = [emb(model.word_emb, w) for w in WORDS]
    np.testing.assert_allclose(cp.data[3:], lstm_of(model.word_b, xs[::-1]), rtol=1e-10)


def test_connection_point_oracle_three_tokens():
    model = tiny_model("pos")
    seq = ["JJ", "NNS", "VBP"]
    xs = [emb(model.pos_emb, t) for t in seq]
    cp = connection_point(model, seq, 1, 3, level="pos")
    ref = np.concatenate([lstm_of(model.pos_f, xs[:1]), lstm_of(model.pos_b, xs[2:][::-1])])
    np.testing.assert_allclose(cp.data, ref, rtol=1e-10)
    with pytest.raises(IndexError):
        connection_point(model, seq, 3, 3)


def test_repl_vector_connection_points_agnew_sentence():
    tree = load_minicorpus()[8]
    words = tree.words()
    assert words[:6] == ["Rudolph", "Agnew", ",", "55", "years", "old"]
    k = words.index("and")
    (inst,) = [x for x in extract_coordinations(tree) if x.coord_index == k]
    (i, j), (l, m) = inst.gold
    assert words[l] == "former" and words[m + 1] == ","
    model = tiny_model()
    rv = repl_vector(model, words, i, j, l, m)
    xs = [emb(model.word_emb, w) for w in words]
    h = 3
    # left point: everything before the first conjunct, then the text from the second conjunct on
    np.testing.assert_allclose(rv.data[:h], lstm_of(model.word_f, xs[:i]), rtol=1e-10)
    np.testing.assert_allclose(rv.data[h:2 * h], lstm_of(model.word_b, xs[l:][::-1]), rtol=1e-10)
    # right point: LSTM_F(Rudolph ... old) joined with LSTM_B(director ... was ,)
    np.testing.assert_allclose(rv.data[2 * h:3 * h], lstm_of(model.word_f, xs[:j + 1]), rtol=1e-10)
    np.testing.assert_allclose(rv.data[3 * h:], lstm_of(model.word_b, xs[m + 1:][::-1]), rtol=1e-10)


def test_repl_vector_conjunct_at_sentence_end():
    model = tiny_model()
    rv = repl_vector(model, WORDS, 0, 0, 2, 4)
    np.testing.assert_array_equal(rv.data[9:], np.zeros(3))
    np.testing.assert_allclose(rv.data, oracle_repl(model, WORDS, ((0, 0), (2, 4)), "word"), rtol=1e-10)
    with pytest.raises(IndexError):
        repl_vector(model, WORDS, 0, 2, 2, 4)


# full score

@pytest.mark.parametrize("mode", ["path", "pos"])
def test_forward_matches_scripted_oracle(mode):
    model = tiny_model(mode)
    prep = tiny_prepared()
    scores = model.forward(prep).data
    for c, s in zip(prep.candidates, scores):
        assert s == pytest.approx(oracle_score(model, WORDS, POS, c, prep.span_paths), rel=1e-9, abs=1e-12)
    single = score_candidate(model, WORDS, POS, prep.candidates[1], prep.span_paths)
    assert single == pytest.approx(scores[1], rel=1e-12)
    assert single == score_candidate(model, WORDS, POS, prep.candidates[1], prep.span_paths)


def test_ablation_zeroes_blocks():
    model = tiny_model(components=("feats",))
    prep = tiny_prepared()
    m = model.mlp
    for c, s in zip(prep.candidates, model.forward(prep).data):
        x = np.concatenate([np.zeros(1 + 24), c.feats()])
        assert s == pytest.approx(mlp(x, m.w.data, m.b.data, m.v.data)[0], rel=1e-12)


def test_full_score_gradients():
    model = tiny_model()
    prep = tiny_prepared()
    err = grad_check(lambda: ranking_loss(model.forward(prep), 1, margin=50.0), model.parameters(), max_entries=8)
    assert err < 1e-4


def test_config_validation_and_round_trip():
    with pytest.raises(ValueError):
        ScorerConfig(mode="tree")
    with pytest.raises(ValueError):
        ScorerConfig(components=("sym", "colour"))
    cfg = ScorerConfig(lstm_dim=4, components=("sym", "feats"))
    assert ScorerConfig.from_dict(cfg.to_dict()) == cfg


def test_state_round_trip():
    model = tiny_model()
    again = ScorerModel.from_state(model.state())
    prep = tiny_prepared()
    np.testing.assert_array_equal(again.scores(prep), model.scores(prep))


# loss

def test_ranking_loss_examples():
    assert ranking_loss([2.0, 0.5], 0).data.item() == 0.0
    assert ranking_loss([1.0, 0.7, -3.0], 0).data.item() == pytest.approx(0.7)
    assert ranking_loss([0.4, 0.4], 1).data.item() == pytest.approx(1.0)
    assert ranking_loss([5.0], 0).data.item() == 0.0


def test_loss_shift_invariance():
    rng = np.random.default_rng(0)
    for _ in range(50):
        s = rng.normal(size=6)
        g = int(rng.integers(6))
        assert ranking_loss(s + 10.0, g).data.item() == pytest.approx(ranking_loss(s, g).data.item())
        assert np.argmax(s + 10.0) == np.argmax(s)


# training and prediction

@pytest.fixture(scope="module")
def mini_prepared():
    trees = load_minicorpus()
    pcfg = induce_pcfg(trees)
    preparer = Preparer(pcfg)
    return pcfg, preparer.prepare(extract_all(trees))


def test_zero_epochs_leave_model_unchanged(mini_prepared):
    _, prepared = mini_prepared
    model = build_model(ScorerConfig(lstm_dim=4, emb_dim=4, mlp_hidden=4), prepared[:5])
    before = model.store.snapshot()
    res = train(model, prepared[:5], epochs=0)
    assert res.history == []
    for k, arr in model.store.snapshot().items():
        np.testing.assert_array_equal(arr, before[k])
    with pytest.raises(ValueError):
        train(model, [])


def test_overfit_recovers_royalty_or_rock_stars(mini_prepared):
    _, prepared = mini_prepared
    usable = [p for p in prepared if p.gold_index is not None]
    target = next(p for p in usable if p.coord_index == 11 and p.words[0] == "And")
    subset = [target] + [p for p in usable if p is not target][:19]
    cfg = ScorerConfig(lstm_dim=16, emb_dim=16, mlp_hidden=32, epochs=20, seed=1)
    model = build_model(cfg, subset)
    train(model, subset, cfg)
    assert training_accuracy(model, subset) >= 0.95
    assert predict_prepared(model, target) == ((10, 10), (12, 13))


def test_single_candidate_is_returned():
    model = tiny_model()
    prep = tiny_prepared()
    prep.candidates = prep.candidates[1:]
    assert predict_prepared(model, prep) == ((0, 0), (2, 2))
    prep.candidates = []
    assert predict_prepared(model, prep) is None


def test_predict_pipeline_reasons(mini_prepared):
    pcfg, prepared = mini_prepared
    model = build_model(ScorerConfig(lstm_dim=4, emb_dim=4, mlp_hidden=4), prepared)
    tree = load_minicorpus()[0]
    sent = [(t.word, t.pos) for t in tree.tokens()]
    prep = Preparer(pcfg)
    assert predict(model, None, sent, 1, prep).reason == "not_coordinator"
    assert predict(model, None, sent, 0, prep).reason == "no_candidates"
    out = predict(model, None, sent, 11, prep)
    assert out.reason == "scored" and out.pair is not None
    assert out.phrase == (out.pair[0][0], out.pair[1][1])
    closed = GateModel(GateConfig(emb_dim=2, lstm_dim=2), ["x"])
    closed.b.data[...] = -100.0
    assert predict(model, {"coord": closed}, sent, 11, prep).reason == "gate"
    assert predict(model, {"np": closed}, sent, 11, prep, np_mode=True).reason == "np_gate"
    with pytest.raises(IndexError):
        predict(model, None, sent, len(sent), prep)


def test_multi_span_target_is_first_and_last(mini_prepared):
    pcfg, _ = mini_prepared
    tree = load_minicorpus()[1]
    (inst,) = extract_coordinations(tree)
    (prep,) = Preparer(pcfg, multi_span=True).prepare([inst])
    assert prep.gold == ((6, 6), (11, 12))
    assert prep.gold_index is not None


def test_vocab_from_prepared(mini_prepared):
    _, prepared = mini_prepared
    vocab = Vocab.from_prepared(prepared)
    assert "and" in vocab.words and "CC" in vocab.pos
    assert "L" in vocab.labels and "R" in vocab.labels
    assert set(vocab.word_singletons) <= set(vocab.words)


def test_unk_replacement_only_touches_singletons():
    model = tiny_model()
    model._word_single = {int(model.word_emb.ids(["bark"])[0])}
    rng = np.random.default_rng(0)
    seen = set()
    for _ in range(40):
        ids = model._ids(model.word_emb, WORDS, model._word_single, rng)
        seen |= {w for w, a, b in zip(WORDS, ids, model.word_emb.ids(WORDS)) if a != b}
    assert seen == {"bark"}
