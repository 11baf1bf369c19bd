import numpy as np
import pytest

from tdsent.errors import StateError
from tdsent.mathcore import Tape
from tdsent.mathcore.rng import derive
from tdsent.mathcore.tensor import softmax_column


def numeric_grad(f, arrays, index, eps=1e-6):
    """Central differences of f(arrays) w.r.t. arrays[index], in place."""
    flat = arrays[index].ravel()
    grad = np.zeros_like(arrays[index])
    gflat = grad.ravel()
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + eps
        plus = f(arrays)
        flat[i] = orig - eps
        minus = f(arrays)
        flat[i] = orig
        gflat[i] = (plus - minus) / (2.0 * eps)
    return grad


def assert_close(analytic, numeric):
    np.testing.assert_allclose(analytic, numeric, rtol=1e-6, atol=1e-8)


def rand(rng, *shape):
    return rng.uniform(-1.0, 1.0, shape)


# -- value semantics ------------------------------------------------------


def test_affine_values():
    tape = Tape()
    w = np.array([[1.0, 2.0], [3.0, 4.0]])
    b = np.array([[10.0], [20.0]])
    x = tape.leaf(np.array([[1.0], [1.0]]))
    out = tape.affine("w", w, x, "b", b)
    np.testing.assert_array_equal(out.value, [[13.0], [27.0]])
    out2 = tape.affine("w", w, x)
    np.testing.assert_array_equal(out2.value, [[3.0], [7.0]])


def test_concat_add_scale_tanh_mean_values():
    tape = Tape()
    a = tape.leaf(np.array([[1.0], [2.0]]))
    b = tape.leaf(np.array([[3.0], [4.0]]))
    np.testing.assert_array_equal(tape.concat(a, b).value,
                                  [[1.0], [2.0], [3.0], [4.0]])
    np.testing.assert_array_equal(tape.add(a, b).value, [[4.0], [6.0]])
    np.testing.assert_array_equal(tape.scale(a, 0.5).value, [[0.5], [1.0]])
    np.testing.assert_array_equal(tape.tanh(a).value, np.tanh(a.value))
    np.testing.assert_array_equal(tape.mean([a, b]).value, [[2.0], [3.0]])
    assert tape.sum_entries(a).value[0, 0] == 3.0


def test_attend_weights_come_from_score_softmax():
    tape = Tape()
    scores = [tape.leaf(np.array([[s]])) for s in (0.3, -1.2, 2.0)]
    states = [tape.leaf(np.full((2, 1), float(i))) for i in range(3)]
    out = tape.attend(scores, states)
    weights = softmax_column(np.array([[0.3], [-1.2], [2.0]]))[:, 0]
    expected = sum(w * s.value for w, s in zip(weights, states))
    np.testing.assert_allclose(out.value, expected, rtol=0, atol=1e-15)


def test_softmax_cross_entropy_matches_direct_formula():
    tape = Tape()
    logits = tape.leaf(np.array([[2.0], [1.0], [0.0]]))
    loss, probs = tape.softmax_cross_entropy(logits, 0)
    direct = softmax_column(logits.value)
    np.testing.assert_allclose(probs, direct, rtol=0, atol=1e-15)
    assert abs(loss.value[0, 0] - (-np.log(direct[0, 0]))) < 1e-12


def test_record_false_computes_values_without_nodes():
    tape = Tape(record=False)
    a = tape.leaf(np.array([[1.0], [2.0]]))
    out = tape.sum_entries(tape.tanh(a))
    assert abs(out.value[0, 0] - np.tanh([1.0, 2.0]).sum()) < 1e-15
    with pytest.raises(StateError):
        tape.backward(out)


# -- backward: state handling ---------------------------------------------


def test_backward_before_forward_raises():
    with pytest.raises(StateError):
        Tape().backward(None)


def test_backward_twice_raises():
    tape = Tape()
    out = tape.sum_entries(tape.tanh(tape.leaf(np.ones((2, 1)))))
    tape.backward(out)
    with pytest.raises(StateError):
        tape.backward(out)


def test_declared_but_unused_parameter_gets_zeros():
    tape = Tape()
    tape.declare_parameter("unused", np.ones((2, 3)))
    x = tape.leaf(np.ones((2, 1)))
    out = tape.affine("w", np.ones((1, 2)), x)
    grads = tape.backward(tape.sum_entries(out))
    assert "unused" in grads.names()
    np.testing.assert_array_equal(grads.array("unused"), np.zeros((2, 3)))


def test_gradients_container_api():
    tape = Tape()
    x = tape.leaf(np.ones((2, 1)))
    out = tape.affine("w", np.full((1, 2), 2.0), x)
    grads = tape.backward(tape.sum_entries(out))
    assert grads.names() == frozenset({"w"})
    assert "w" in grads and "nope" not in grads
    np.testing.assert_array_equal(grads["w"].data, grads.array("w"))


# -- backward: adjoint correctness per node --------------------------------


def test_diamond_reuse_accumulates():
    tape = Tape()
    x = tape.leaf(np.array([[3.0]]))
    out = tape.add(x, x)
    tape.backward(tape.sum_entries(out))
    np.testing.assert_array_equal(x.grad, [[2.0]])


def test_affine_adjoints():
    rng = derive(0, "autodiff-affine")
    w, b, x_val, probe = rand(rng, 3, 2), rand(rng, 3, 1), rand(rng, 2, 1), rand(rng, 3, 1)

    def f(arrays):
        w_, b_, x_ = arrays
        tape = Tape(record=False)
        out = tape.affine("w", w_, tape.leaf(x_), "b", b_)
        return (probe[:, 0] @ out.value[:, 0]).item()

    tape = Tape()
    x = tape.leaf(x_val)
    out = tape.affine("w", w, x, "b", b)
    # probe picks a fixed linear functional so every output entry matters
    weighted = tape.affine("probe", probe.T, out)
    grads = tape.backward(weighted)
    arrays = [w, b, x_val]
    assert_close(grads.array("w"), numeric_grad(f, arrays, 0))
    assert_close(grads.array("b"), numeric_grad(f, arrays, 1))
    assert_close(x.grad, numeric_grad(f, arrays, 2))


def test_lstm_cell_adjoints():
    rng = derive(1, "autodiff-lstm")
    d, k = 3, 2
    gates = [rand(rng, d, d + k) if i % 2 == 0 else rand(rng, d, 1)
             for i in range(8)]
    h0, c0, x0 = rand(rng, d, 1), rand(rng, d, 1), rand(rng, k, 1)
    probe_h, probe_c = rand(rng, d, 1), rand(rng, d, 1)

    def f(arrays):
        *gate_arrays, h_, c_, x_ = arrays
        tape = Tape(record=False)
        h, c = tape.lstm_cell("cell", *gate_arrays,
                              tape.leaf(h_), tape.leaf(c_), tape.leaf(x_))
        # both outputs feed the scalar so dc_in and dh are both exercised
        return (probe_h[:, 0] @ h.value[:, 0] + probe_c[:, 0] @ c.value[:, 0]).item()

    tape = Tape()
    h_prev, c_prev, x = tape.leaf(h0), tape.leaf(c0), tape.leaf(x0)
    h, c = tape.lstm_cell("cell", *gates, h_prev, c_prev, x)
    total = tape.add(tape.affine("ph", probe_h.T, h),
                     tape.affine("pc", probe_c.T, c))
    grads = tape.backward(total)

    arrays = gates + [h0, c0, x0]
    names = ["cell.w_i", "cell.b_i", "cell.w_f", "cell.b_f",
             "cell.w_o", "cell.b_o", "cell.w_c", "cell.b_c"]
    for i, name in enumerate(names):
        assert_close(grads.array(name), numeric_grad(f, arrays, i))
    assert_close(h_prev.grad, numeric_grad(f, arrays, 8))
    assert_close(c_prev.grad, numeric_grad(f, arrays, 9))
    assert_close(x.grad, numeric_grad(f, arrays, 10))


def test_concat_mean_scale_tanh_adjoints():
    rng = derive(2, "autodiff-misc")
    a0, b0, c0 = rand(rng, 2, 1), rand(rng, 2, 1), rand(rng, 2, 1)
    probe = rand(rng, 4, 1)

    def f(arrays):
        a_, b_, c_ = arrays
        tape = Tape(record=False)
        m = tape.mean([tape.leaf(a_), tape.leaf(b_), tape.leaf(c_)])
        joined = tape.concat(tape.tanh(m), tape.scale(tape.leaf(a_), -1.5))
        return (probe[:, 0] @ joined.value[:, 0]).item()

    tape = Tape()
    a, b, c = tape.leaf(a0), tape.leaf(b0), tape.leaf(c0)
    joined = tape.concat(tape.tanh(tape.mean([a, b, c])), tape.scale(a, -1.5))
    grads_out = tape.affine("probe", probe.T, joined)
    tape.backward(grads_out)

    arrays = [a0, b0, c0]
    assert_close(a.grad, numeric_grad(f, arrays, 0))
    assert_close(b.grad, numeric_grad(f, arrays, 1))
    assert_close(c.grad, numeric_grad(f, arrays, 2))


def test_attend_adjoints():
    rng = derive(3, "autodiff-attend")
    n, d = 4, 3
    score_vals = [rand(rng, 1, 1) for _ in range(n)]
    state_vals = [rand(rng, d, 1) for _ in range(n)]
    probe = rand(rng, d, 1)

    def f(arrays):
        scores_, states_ = arrays[:n], arrays[n:]
        tape = Tape(record=False)
        out = tape.attend([tape.leaf(s) for s in scores_],
                          [tape.leaf(s) for s in states_])
        return (probe[:, 0] @ out.value[:, 0]).item()

    tape = Tape()
    scores = [tape.leaf(v) for v in score_vals]
    states = [tape.leaf(v) for v in state_vals]
    out = tape.attend(scores, states)
    tape.backward(tape.affine("probe", probe.T, out))

    arrays = score_vals + state_vals
    for i in range(n):
        assert_close(scores[i].grad, numeric_grad(f, arrays, i))
        assert_close(states[i].grad, numeric_grad(f, arrays, n + i))


def test_softmax_cross_entropy_adjoint_is_probs_minus_onehot():
    tape = Tape()
    logits = tape.leaf(np.array([[0.5], [-1.0], [2.0]]))
    loss, probs = tape.softmax_cross_entropy(logits, 2)
    tape.backward(loss)
    expected = probs.copy()
    expected[2, 0] -= 1.0
    np.testing.assert_allclose(logits.grad, expected, rtol=0, atol=1e-15)


def test_backward_seed_scales_gradients():
    def run(seed):
        tape = Tape()
        x = tape.leaf(np.array([[0.3], [0.7]]))
        out = tape.sum_entries(tape.tanh(x))
        tape.backward(out, seed=seed)
        return x.grad

    np.testing.assert_allclose(run(2.0), 2.0 * run(1.0), rtol=0, atol=1e-15)


# -- embedding rows ---------------------------------------------------------


def test_embedding_rows_accumulate_sparsely():
    tape = Tape()
    tape.declare_embeddings((5, 2), np.float64)
    v3 = np.array([0.1, 0.2])
    v1 = np.array([-0.3, 0.4])
    a = tape.embedding_row(3, v3)
    b = tape.embedding_row(1, v1)
    c = tape.embedding_row(3, v3)  # same row twice
    out = tape.sum_entries(tape.mean([a, b, c]))
    grads = tape.backward(out)

    rows = grads.embedding_rows
    assert set(rows) == {1, 3}
    np.testing.assert_allclose(rows[3], [2 / 3, 2 / 3], rtol=0, atol=1e-15)
    np.testing.assert_allclose(rows[1], [1 / 3, 1 / 3], rtol=0, atol=1e-15)

    dense = grads["embeddings"].data
    assert dense.shape == (5, 2)
    np.testing.assert_array_equal(dense[0], [0.0, 0.0])
    np.testing.assert_allclose(dense[3], rows[3], rtol=0, atol=1e-15)


def test_embedding_rows_absent_without_declaration():
    tape = Tape()
    a = tape.embedding_row(0, np.array([1.0, 2.0]))
    grads = tape.backward(tape.sum_entries(a))
    assert grads.embedding_rows is None
    assert "embeddings" not in grads.names()
