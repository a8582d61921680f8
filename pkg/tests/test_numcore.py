import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import infludyn.numcore as nc
from infludyn.errors import ConfigError, DomainError, NumericError, ShapeError
from infludyn.numcore import Adam, AdamState, Tensor, adam_step, grad_check


def param(rng, *shape):
    return Tensor(rng.standard_normal(shape), requires_grad=True)


# matmul

def test_matmul_identity():
    a = Tensor([[1.0, 2.0], [3.0, 4.0]])
    np.testing.assert_array_equal((Tensor(np.eye(2)) @ a).values, a.values)


def test_matmul_hand_evaluated():
    out = nc.matmul(Tensor([[1.0, 2.0], [3.0, 4.0]]), Tensor([[0.0], [1.0]]))
    np.testing.assert_array_equal(out.values, [[2.0], [4.0]])


def test_matmul_zero_annihilates():
    b = Tensor(np.random.default_rng(0).standard_normal((3, 3)))
    np.testing.assert_array_equal((nc.zeros(3, 3) @ b).values, np.zeros((3, 3)))


def test_matmul_shape_error_names_both_shapes():
    with pytest.raises(ShapeError, match=r"\(2, 3\).*\(2, 2\)"):
        nc.matmul(nc.zeros(2, 3), nc.zeros(2, 2))


def test_matmul_gradients_match_formula():
    rng = np.random.default_rng(1)
    a, b = param(rng, 3, 4), param(rng, 4, 2)
    g = rng.standard_normal((3, 2))
    (a @ b).backward(g)
    np.testing.assert_allclose(a.grad, g @ b.values.T)
    np.testing.assert_allclose(b.grad, a.values.T @ g)


# softmax

def test_softmax_uniform():
    np.testing.assert_allclose(nc.softmax(Tensor([2.5, 2.5, 2.5])).values, [1 / 3] * 3, atol=1e-15)


def test_softmax_single_element():
    assert nc.softmax(Tensor([-7.0])).values.tolist() == [1.0]


def test_softmax_ln2():
    np.testing.assert_allclose(nc.softmax(Tensor([np.log(2.0), 0.0])).values, [2 / 3, 1 / 3], atol=1e-15)


def test_softmax_empty_axis():
    with pytest.raises(DomainError):
        nc.softmax(Tensor(np.zeros((2, 0))), axis=1)


def test_softmax_stable_for_large_logits():
    out = nc.softmax(Tensor([1000.0, 1000.0, -1000.0]))
    np.testing.assert_allclose(out.values, [0.5, 0.5, 0.0])


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-50, 50), min_size=1, max_size=12), st.randoms(use_true_random=False))
def test_softmax_sums_to_one_and_is_equivariant(xs, rnd):
    v = np.array(xs)
    perm = list(range(len(v)))
    rnd.shuffle(perm)
    out = nc.softmax(Tensor(v)).values
    assert abs(out.sum() - 1.0) < 1e-12
    assert np.all(out > 0)
    np.testing.assert_allclose(nc.softmax(Tensor(v[perm])).values, out[perm], atol=1e-15)


# activations

def test_activation_values():
    assert nc.sigmoid(Tensor(0.0)).item() == 0.5
    assert nc.tanh(Tensor(0.0)).item() == 0.0
    assert nc.leaky_relu(Tensor(-1.0), 0.2).item() == pytest.approx(-0.2)
    assert nc.relu(Tensor(-3.0)).item() == 0.0
    assert nc.elu(Tensor(-1.0)).item() == pytest.approx(np.expm1(-1.0))
    assert nc.activate(Tensor(1.5), "identity").item() == 1.5


def test_activation_unknown_kind():
    with pytest.raises(ConfigError):
        nc.activate(Tensor(1.0), "swish")


@pytest.mark.parametrize("kind", ["relu", "leaky_relu"])
def test_subgradient_at_zero_is_zero(kind):
    x = Tensor([0.0], requires_grad=True)
    nc.sum(nc.activate(x, kind)).backward()
    assert x.grad.tolist() == [0.0]


def test_sigmoid_saturates_without_overflow():
    out = nc.sigmoid(Tensor([-800.0, 800.0])).values
    np.testing.assert_array_equal(out, [0.0, 1.0])


# dropout

def test_dropout_identity_cases():
    x = Tensor(np.arange(6.0))
    rng = np.random.default_rng(0)
    assert nc.dropout(x, 0.5, training=False, rng=rng) is x
    assert nc.dropout(x, 0.0, training=True, rng=rng) is x


def test_dropout_expectation():
    out = nc.dropout(nc.ones(100_000), 0.5, training=True, rng=np.random.default_rng(3))
    assert abs(out.values.mean() - 1.0) < 0.02
    assert set(np.unique(out.values)) <= {0.0, 2.0}


def test_dropout_rate_must_be_below_one():
    with pytest.raises(ConfigError):
        nc.dropout(nc.ones(3), 1.0, training=True, rng=np.random.default_rng(0))


# tensor invariants

def test_non_finite_values_rejected():
    with pytest.raises(NumericError):
        Tensor([1.0, np.nan])
    with pytest.raises(DomainError):
        nc.log(Tensor([0.0]))
    with pytest.raises(NumericError):
        nc.exp(Tensor([1000.0]))


def test_broadcast_gradient_folds_back():
    rng = np.random.default_rng(2)
    x, b = param(rng, 4, 3), param(rng, 3)
    nc.sum(x + b).backward()
    np.testing.assert_array_equal(b.grad, np.full(3, 4.0))
    assert x.grad.shape == x.shape


def test_no_grad_records_nothing():
    x = Tensor([1.0, 2.0], requires_grad=True)
    with nc.no_grad():
        y = x * x
    assert y._parents == ()


def test_reused_node_accumulates():
    x = Tensor([3.0], requires_grad=True)
    nc.sum(x * x + x).backward()
    assert x.grad.tolist() == [7.0]


# grad_check

def test_grad_check_quadratic():
    w = Tensor(3.0, requires_grad=True)
    assert grad_check(lambda: w * w, [w]) < 1e-8


def test_grad_check_matmul_sum():
    rng = np.random.default_rng(4)
    X, W = param(rng, 3, 3), param(rng, 3, 3)
    assert grad_check(lambda: nc.sum(X @ W), [X, W]) < 1e-6


def test_grad_check_constant():
    w = Tensor([1.0, 2.0], requires_grad=True)
    assert grad_check(lambda: Tensor(5.0), [w]) == 0.0


def test_grad_check_non_finite():
    w = Tensor([1e-9], requires_grad=True)
    with pytest.raises(NumericError):
        grad_check(lambda: nc.sum(nc.log(w)), [w], eps=1e-5)


def _unary_cases(rng, shape):
    x = param(rng, *shape)
    pos = Tensor(np.abs(rng.standard_normal(shape)) + 0.5, requires_grad=True)
    return {
        "exp": (lambda: nc.sum(nc.exp(x) * x), [x]),
        "log": (lambda: nc.sum(nc.log(pos) * pos), [pos]),
        "div": (lambda: nc.sum(x / pos), [x, pos]),
        "sub_neg": (lambda: nc.sum((-x - pos) * x), [x, pos]),
        "transpose": (lambda: nc.sum(x.T @ x), [x]),
        "reshape": (lambda: nc.sum(nc.reshape(x, (-1,)) * nc.reshape(x, (-1,))), [x]),
        "mean_axis": (lambda: nc.sum(nc.mean(x * x, axis=0)), [x]),
        "sum_keepdims": (lambda: nc.sum(nc.sum(x, axis=1, keepdims=True) * x), [x]),
        "softmax": (lambda: nc.sum(nc.softmax(x, axis=-1) * pos), [x, pos]),
        "sigmoid": (lambda: nc.sum(nc.sigmoid(x) * pos), [x, pos]),
        "tanh": (lambda: nc.sum(nc.tanh(x) * pos), [x, pos]),
        "elu": (lambda: nc.sum(nc.elu(x) * pos), [x, pos]),
        "concat": (lambda: nc.sum(nc.concat([x, pos], axis=0) * nc.concat([pos, x], axis=0)), [x, pos]),
    }


@pytest.mark.parametrize("seed", range(20))
def test_every_op_passes_grad_check(seed):
    rng = np.random.default_rng(seed)
    shape = tuple(int(s) for s in rng.integers(1, 9, size=2))
    for name, (f, params) in _unary_cases(rng, shape).items():
        assert grad_check(f, params) < 1e-4, name


@pytest.mark.parametrize("seed", range(5))
def test_graph_ops_pass_grad_check(seed):
    rng = np.random.default_rng(seed)
    x = param(rng, 5, 3)
    seg = np.array([0, 0, 1, 2, 2, 2, 3])
    idx = np.array([1, 0, 4, 2, 3, 1, 4])
    logits = param(rng, 7)
    targets = (rng.random(7) < 0.4).astype(float)
    assert grad_check(lambda: nc.sum(nc.gather_rows(x, idx) * nc.gather_rows(x, idx[::-1])), [x]) < 1e-4
    summed = lambda: nc.segment_sum(nc.gather_rows(x, idx), seg, 4)  # noqa: E731
    assert grad_check(lambda: nc.sum(summed() * summed()), [x]) < 1e-4
    assert grad_check(lambda: nc.sum(nc.scatter_rows(x, np.array([2, 0, 5, 1, 3]), 6) * 2.0), [x]) < 1e-4
    w = Tensor(rng.standard_normal(7))
    assert grad_check(lambda: nc.sum(nc.segment_softmax(logits, seg, 4) * w), [logits]) < 1e-4
    assert grad_check(lambda: nc.bce_with_logits(logits, targets), [logits]) < 1e-4


def test_segment_softmax_sums_to_one_per_segment():
    seg = np.array([0, 0, 1, 2, 2, 2])
    out = nc.segment_softmax(Tensor([1.0, 2.0, -3.0, 500.0, 0.0, 1.0]), seg, 3).values
    np.testing.assert_allclose(np.bincount(seg, weights=out), 1.0, atol=1e-12)


def test_bce_matches_direct_formula():
    z = np.array([-2.0, 0.0, 3.0])
    y = np.array([0.0, 1.0, 1.0])
    p = 1 / (1 + np.exp(-z))
    expected = -np.mean(y * np.log(p) + (1 - y) * np.log(1 - p))
    assert nc.bce_with_logits(Tensor(z), y).item() == pytest.approx(expected, abs=1e-14)


def test_spmm_matches_dense():
    from scipy import sparse
    rng = np.random.default_rng(0)
    A = sparse.random(6, 6, density=0.4, random_state=1, format="csr")
    x = param(rng, 6, 2)
    np.testing.assert_allclose(nc.spmm(A, x).values, A.toarray() @ x.values)
    assert grad_check(lambda: nc.sum(nc.spmm(A, x) * nc.spmm(A, x)), [x]) < 1e-4


# adam

def test_adam_zero_gradient_leaves_params():
    p = [np.array([1.0, -2.0]), np.ones((2, 2))]
    new, state = adam_step(p, [np.zeros(2), np.zeros((2, 2))], AdamState.fresh(p))
    for a, b in zip(p, new):
        np.testing.assert_array_equal(a, b)
    assert state.t == 1


def test_adam_single_step_hand_value():
    p = [np.array([0.0])]
    new, state = adam_step(p, [np.array([1.0])], AdamState.fresh(p, lr=0.1, beta1=0.9, beta2=0.999, eps=1e-8))
    assert abs(new[0][0] + 0.1) < 1e-7
    assert state.t == 1


def test_adam_shape_mismatch():
    p = [np.zeros(2)]
    with pytest.raises(ShapeError):
        adam_step(p, [np.zeros(3)], AdamState.fresh(p))
    with pytest.raises(ShapeError):
        adam_step(p, [], AdamState.fresh(p))


def _run_adam(seed):
    rng = np.random.default_rng(seed)
    w = param(rng, 4, 2)
    X = Tensor(rng.standard_normal((10, 4)))
    opt = Adam([w], lr=0.05)
    for _ in range(20):
        opt.zero_grad()
        nc.mean((X @ w) * (X @ w)).backward()
        opt.step()
    return w.values


def test_adam_runs_are_bit_identical():
    assert _run_adam(7).tobytes() == _run_adam(7).tobytes()


def test_adam_state_counter_increments():
    w = Tensor([1.0], requires_grad=True)
    opt = Adam([w], lr=0.1)
    for k in range(1, 4):
        w.grad = np.array([0.5])
        opt.step()
        assert opt.state.t == k
