import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from coordbound.diffcore import (
    Adam,
    AdamState,
    LstmParams,
    MlpParams,
    ParamStore,
    ShapeError,
    Sgd,
    adam_step,
    backward,
    bilstm_at,
    grad_check,
    lstm_encode,
    mlp_apply,
    ops as V,
    sgd_step,
)
from oracles import lstm_final, mlp, sigmoid


def seq(rng, n, d):
    return [V.const(rng.normal(size=d)) for _ in range(n)]


def test_zero_lstm_gives_zero_state():
    store = ParamStore(0)
    p = LstmParams.create(store, "l", 3, 4)
    for x in (p.w, p.u, p.b):
        x.data[:] = 0.0
    out = lstm_encode(p, seq(np.random.default_rng(1), 5, 3))
    np.testing.assert_array_equal(out.data, np.zeros(4))


def test_empty_sequence_gives_zero_vector():
    p = LstmParams.create(ParamStore(0), "l", 3, 6)
    np.testing.assert_array_equal(lstm_encode(p, []).data, np.zeros(6))


def test_lstm_two_dim_one_step_hand_value():
    p = LstmParams.create(ParamStore(0), "l", 1, 2)
    p.w.data[:] = np.arange(8).reshape(8, 1) * 0.1
    p.u.data[:] = 0.0
    p.b.data[:] = 0.05
    x = 0.5
    z = [0.1 * r * x + 0.05 for r in range(8)]
    c = [sigmoid(z[r]) * np.tanh(z[4 + r]) for r in range(2)]
    h = [sigmoid(z[6 + r]) * np.tanh(c[r]) for r in range(2)]
    out = lstm_encode(p, [V.const(np.array([x]))])
    np.testing.assert_allclose(out.data, h, rtol=1e-12)


def test_lstm_matches_scalar_oracle():
    rng = np.random.default_rng(3)
    p = LstmParams.create(ParamStore(4), "l", 3, 5)
    xs = seq(rng, 4, 3)
    ref = lstm_final([x.data for x in xs], p.w.data, p.u.data, p.b.data)
    np.testing.assert_allclose(lstm_encode(p, xs).data, ref, rtol=1e-10, atol=1e-13)


def test_bilstm_boundaries_and_oracle():
    rng = np.random.default_rng(5)
    store = ParamStore(6)
    f, b = LstmParams.create(store, "f", 2, 3), LstmParams.create(store, "b", 2, 3)
    one = seq(rng, 1, 2)
    out = bilstm_at(f, b, one, 1)
    np.testing.assert_allclose(out.data[:3], lstm_encode(f, one).data)
    np.testing.assert_allclose(out.data[3:], lstm_encode(b, one).data)
    xs = seq(rng, 3, 2)
    last = bilstm_at(f, b, xs, 3)
    np.testing.assert_allclose(last.data[3:], lstm_encode(b, xs[2:]).data)
    mid = bilstm_at(f, b, xs, 2)
    arr = [x.data for x in xs]
    ref = np.concatenate([lstm_final(arr[:2], f.w.data, f.u.data, f.b.data),
                          lstm_final(arr[1:][::-1], b.w.data, b.u.data, b.b.data)])
    np.testing.assert_allclose(mid.data, ref, rtol=1e-10, atol=1e-13)
    with pytest.raises(IndexError):
        bilstm_at(f, b, xs, 0)


def test_mlp_cases():
    store = ParamStore(0)
    m = MlpParams.create(store, "m", 3, 4)
    m.w.data[:] = 0.0
    m.b.data[:] = 0.0
    assert mlp_apply(m, V.const(np.ones(3))).data.tolist() == [0.0]
    one = MlpParams.create(store, "one", 1, 1)
    one.w.data[:] = 2.0
    one.b.data[:] = -0.5
    one.v.data[:] = 3.0
    assert mlp_apply(one, V.const(np.array([1.5]))).data[0] == pytest.approx(3.0 * 2.5)
    sg = MlpParams.create(store, "sg", 2, 2, activation="sigmoid")
    sg.b.data[:] = 0.0
    sg.v.data[:] = [[0.4, -1.0]]
    assert mlp_apply(sg, V.const(np.zeros(2))).data[0] == pytest.approx(0.5 * 0.4 - 0.5 * 1.0)
    with pytest.raises(ValueError):
        MlpParams.create(store, "bad", 2, 2, activation="tanh")


def test_mlp_matches_scalar_oracle():
    rng = np.random.default_rng(8)
    m = MlpParams.create(ParamStore(9), "m", 5, 7, output_dim=2)
    x = rng.normal(size=5)
    np.testing.assert_allclose(mlp_apply(m, V.const(x)).data, mlp(x, m.w.data, m.b.data, m.v.data), rtol=1e-12)


def test_sum_loss_gives_ones():
    p = V.parameter(np.array([1.0, -2.0, 3.0]))
    backward(V.total(p))
    np.testing.assert_array_equal(p.grad, np.ones(3))


def test_distance_of_identical_encodings_has_zero_gradient():
    a = V.parameter(np.array([0.3, -0.2]))
    d = V.euclidean(a, a)
    assert d.data.item() == pytest.approx(0.0, abs=1e-5)
    backward(V.total(d))
    np.testing.assert_array_equal(a.grad, np.zeros(2))


def test_backward_requires_scalar():
    p = V.parameter(np.ones(3))
    with pytest.raises(ShapeError):
        backward(V.mul(p, 2.0))


def test_constant_loss_has_zero_gradients():
    p = V.parameter(np.ones(3))
    q = V.parameter(np.ones(2))
    err = grad_check(lambda: V.const(4.0), [p, q])
    assert err == 0.0


def test_grad_check_lstm_three_steps():
    rng = np.random.default_rng(11)
    store = ParamStore(12)
    p = LstmParams.create(store, "l", 3, 4)
    xs = [V.parameter(rng.normal(size=3)) for _ in range(3)]
    target = rng.normal(size=4)
    err = grad_check(lambda: V.euclidean(lstm_encode(p, xs), V.const(target)), [p.w, p.u, p.b, *xs])
    assert err < 1e-4


def test_grad_check_mlp():
    rng = np.random.default_rng(13)
    m = MlpParams.create(ParamStore(14), "m", 4, 6)
    x = V.parameter(rng.normal(size=4))
    err = grad_check(lambda: V.total(mlp_apply(m, x)), [m.w, m.b, m.v, x], max_entries=None)
    assert err < 1e-5


def test_grad_check_random_graph():
    rng = np.random.default_rng(15)
    a = V.parameter(rng.normal(size=(3, 4)))
    b = V.parameter(rng.normal(size=4))
    c = V.parameter(rng.normal(size=(2, 3)))

    def loss():
        h = V.tanh(V.linear(c, V.const(np.eye(3)), None))
        z = V.matmul(h, a)
        y = V.concat([V.sigmoid(z), V.relu(V.sub(z, b))], axis=-1)
        s = V.hinge_rank(V.reshape(V.getitem(y, (slice(None), 0)), (2,)), 0, margin=5.0)
        return V.add(V.total(V.mul(y, y)), s)

    assert grad_check(loss, [a, b, c], max_entries=None) < 1e-4


def test_sgd_lr_one():
    p = V.parameter(np.array([1.0, 2.0]))
    sgd_step([p], [np.array([0.5, -1.0])], 1.0)
    np.testing.assert_array_equal(p.data, [0.5, 3.0])
    with pytest.raises(ShapeError):
        sgd_step([p], [np.ones(3)], 1.0)


def test_adam_zero_gradient_no_change():
    p = V.parameter(np.array([1.0, -1.0]))
    state = AdamState()
    adam_step([p], [np.zeros(2)], state)
    np.testing.assert_array_equal(p.data, [1.0, -1.0])
    assert state.t == 1


def test_adam_first_step_moves_by_lr():
    p = V.parameter(np.array([1.0, -1.0]))
    adam_step([p], [np.array([3.0, -0.2])], AdamState(), lr=0.01)
    np.testing.assert_allclose(p.data, [0.99, -0.99], rtol=1e-6)


def test_optimisers_converge_on_quadratic():
    for make in (lambda ps: Sgd(ps, lr=0.1), lambda ps: Adam(ps, lr=0.05)):
        p = V.parameter(np.array([2.0, -3.0]))
        opt = make([p])
        for _ in range(500):
            p.grad = None
            d = V.sub(p, np.array([0.5, 0.25]))
            backward(V.total(V.mul(d, d)))
            opt.step()
        np.testing.assert_allclose(p.data, [0.5, 0.25], atol=1e-3)


def test_training_steps_are_deterministic():
    def run():
        store = ParamStore(21)
        p = LstmParams.create(store, "l", 2, 3)
        rng = np.random.default_rng(22)
        xs = seq(rng, 4, 2)
        opt = Adam(list(store), lr=0.01)
        for _ in range(5):
            store.zero_grad()
            backward(V.total(lstm_encode(p, xs)))
            opt.step()
        return store.snapshot()

    a, b = run(), run()
    for k in a:
        assert a[k].tobytes() == b[k].tobytes()


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-5, 5), min_size=2, max_size=8), st.data())
def test_hinge_rank_properties(scores, data):
    gold = data.draw(st.integers(0, len(scores) - 1))
    s = np.array(scores)
    loss = float(V.hinge_rank(V.const(s), gold).data)
    wrong = np.delete(s, gold).max()
    assert loss >= 0.0
    assert loss == pytest.approx(max(0.0, 1.0 - (s[gold] - wrong)))
    assert float(V.hinge_rank(V.const(s + 3.7), gold).data) == pytest.approx(loss)


def test_logistic_loss_gradient():
    z = V.parameter(np.array(0.3))
    for label in (0.0, 1.0):
        err = grad_check(lambda: V.logistic_loss(z, label)[0], [z])
        assert err < 1e-6
