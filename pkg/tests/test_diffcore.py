import numpy as np
import pytest

from spacetoken.diffcore import ops
from spacetoken.diffcore.gradcheck import grad_check
from spacetoken.diffcore.params import CheckpointError, ParameterStore
from spacetoken.diffcore.tensor import (
    GraphError,
    ShapeError,
    Tensor,
    backward,
    constant,
    default_dtype,
    float64,
    no_grad,
)


def _store(seed: int = 0, **shapes: tuple[int, ...]) -> ParameterStore:
    rng = np.random.default_rng(seed)
    store = ParameterStore()
    for name, shape in shapes.items():
        store.add(name, rng.normal(size=shape))
    return store


def test_add_and_mul_gradients():
    with float64():
        a = Tensor(np.array([1.0, 2.0]), requires_grad=True)
        b = Tensor(np.array([3.0, -1.0]), requires_grad=True)
        loss = ops.sum_all(ops.mul(ops.add(a, b), a))
        backward(loss)
    # d/da (a+b)a = 2a + b, d/db = a
    np.testing.assert_allclose(a.grad, [5.0, 3.0])
    np.testing.assert_allclose(b.grad, [1.0, 2.0])


def test_broadcast_bias_gradient_sums_leading_axes():
    with float64():
        x = Tensor(np.ones((4, 3)), requires_grad=True)
        bias = Tensor(np.zeros(3), requires_grad=True)
        backward(ops.sum_all(ops.add(x, bias)))
    np.testing.assert_allclose(bias.grad, [4.0, 4.0, 4.0])


def test_broadcast_over_trailing_axes_is_rejected():
    with pytest.raises(ShapeError):
        ops.add(Tensor(np.ones((4, 3))), Tensor(np.ones((4, 1))))


def test_matmul_shape_mismatch():
    with pytest.raises(ShapeError):
        ops.matmul(Tensor(np.ones((2, 3))), Tensor(np.ones((2, 3))))


def test_backward_needs_scalar():
    with pytest.raises(GraphError):
        backward(Tensor(np.ones(3), requires_grad=True))


def test_constants_stay_off_the_tape():
    c = constant(np.ones(3))
    y = ops.mul(c, 2.0)
    assert not y.requires_grad
    assert y.parents == ()


def test_no_grad_records_nothing():
    x = Tensor(np.ones(3), requires_grad=True)
    with no_grad():
        y = ops.mul(x, 3.0)
    assert not y.requires_grad


def test_shared_subexpression_accumulates():
    with float64():
        x = Tensor(np.array(2.0), requires_grad=True)
        y = ops.mul(x, x)
        backward(ops.add(y, y))
    assert x.grad == pytest.approx(8.0)


def test_cross_entropy_ignores_masked_positions():
    with float64():
        logits = Tensor(np.zeros((3, 4)), requires_grad=True)
        loss = ops.cross_entropy(logits, np.array([1, ops.IGNORE_INDEX, 2]))
        backward(loss)
    assert loss.item() == pytest.approx(np.log(4.0))
    np.testing.assert_allclose(logits.grad[1], 0.0)


def test_cross_entropy_all_ignored_is_zero():
    loss = ops.cross_entropy(Tensor(np.zeros((2, 3))), np.full(2, ops.IGNORE_INDEX))
    assert loss.item() == 0.0


def test_softmax_rows_sum_to_one():
    y = ops.softmax(Tensor(np.random.default_rng(1).normal(size=(5, 7))))
    np.testing.assert_allclose(y.numpy().sum(axis=-1), 1.0, rtol=1e-6)


def test_precision_switch():
    assert default_dtype() in (np.float32, np.float64)
    with float64():
        assert Tensor(1.0).data.dtype == np.float64


@pytest.mark.parametrize(
    "fn",
    [
        lambda s: ops.sum_all(ops.gelu(ops.matmul(s["x"], s["w"]))),
        lambda s: ops.sum_all(ops.mul(ops.softmax(ops.mul(s["x"], 3.0)), s["g"])),
        lambda s: ops.sum_all(ops.layer_norm(s["x"], s["g"], s["b"])),
        lambda s: ops.sum_all(ops.mul(ops.rotate_half(s["x"]), s["g"])),
        lambda s: ops.sum_all(ops.transpose(ops.reshape(s["x"], (4, 3)), (1, 0))),
        lambda s: ops.cross_entropy(s["x"], np.array([0, 3, ops.IGNORE_INDEX])),
        lambda s: ops.sum_all(ops.concat([s["x"], ops.index(s["x"], slice(0, 1))])),
    ],
)
def test_op_gradients_match_finite_differences(fn):
    store = _store(x=(3, 4), w=(4, 5), g=(4,), b=(4,))
    report = grad_check(fn, store, tolerance=1e-5, step=1e-5, floor=1e-4)
    assert report.passed, report


def test_embedding_gradient_scatters_repeated_ids():
    with float64():
        table = Tensor(np.zeros((4, 2)), requires_grad=True)
        backward(ops.sum_all(ops.embedding(table, np.array([1, 1, 3]))))
    np.testing.assert_allclose(table.grad, [[0, 0], [2, 2], [0, 0], [1, 1]])


def test_grad_check_empty_store_is_empty_report():
    report = grad_check(lambda s: constant(0.0), ParameterStore())
    assert report.entries == []
    assert report.passed


def test_grad_check_restores_dtype_and_values():
    store = _store(x=(2, 2))
    before = store["x"].data.copy()
    grad_check(lambda s: ops.sum_all(ops.mul(s["x"], s["x"])), store)
    assert store["x"].data.dtype == before.dtype
    np.testing.assert_array_equal(store["x"].data, before)


def test_parameter_store_round_trip(tmp_path):
    store = _store(a=(2, 3), b=(4,))
    store.save(tmp_path)
    other = _store(seed=1, a=(2, 3), b=(4,))
    other.load(tmp_path)
    for name, tensor in store.items():
        np.testing.assert_array_equal(other[name].data, tensor.data.astype(np.float32))


def test_parameter_store_rejects_layout_change(tmp_path):
    _store(a=(2, 3)).save(tmp_path)
    with pytest.raises(CheckpointError):
        _store(a=(3, 2)).load(tmp_path)
    with pytest.raises(CheckpointError):
        _store(c=(2, 3)).load(tmp_path)


def test_duplicate_parameter_name():
    store = ParameterStore()
    store.add("w", np.zeros(2))
    with pytest.raises(CheckpointError):
        store.add("w", np.zeros(2))
