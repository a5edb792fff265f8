import threading

import numpy as np
import pytest

from oracle_kd.autodiff import ops
from oracle_kd.autodiff.tensor import Tape, Tensor, backward, current_tape
from oracle_kd.errors import UsageError


def test_sum_gradient_is_all_ones():
    x = Tensor(np.arange(4.0).reshape(2, 2), requires_grad=True, name='x')
    with Tape() as tape:
        loss = ops.sum_(x)
    np.testing.assert_array_equal(tape.backward(loss)['x'], np.ones((2, 2)))


def test_quadratic_gradient():
    x = Tensor([1.0, 2.0], requires_grad=True, name='x')
    with Tape() as tape:
        loss = ops.sum_(ops.mul(x, x))
    np.testing.assert_array_equal(backward(tape, loss)['x'], [2.0, 4.0])


def test_operator_sugar_matches_ops():
    x = Tensor([1.0, -2.0], requires_grad=True, name='x')
    with Tape() as tape:
        loss = ((x * x + 1.0) / 2.0 - x).sum()
    np.testing.assert_allclose(tape.backward(loss)['x'], [0.0, -3.0])


def test_non_scalar_loss_is_rejected():
    x = Tensor([1.0, 2.0], requires_grad=True, name='x')
    with Tape() as tape:
        out = ops.exp(x)
    with pytest.raises(UsageError):
        tape.backward(out)


def test_unreached_leaves_get_zero_gradients():
    used = Tensor([1.0, 2.0], requires_grad=True, name='used')
    unused = Tensor(np.ones((2, 3)), requires_grad=True, name='unused')
    with Tape() as tape:
        loss = ops.sum_(used)
    grads = tape.backward(loss, {'used': used, 'unused': unused})
    np.testing.assert_array_equal(grads['unused'], np.zeros((2, 3)))


def test_constants_are_not_recorded():
    with Tape() as tape:
        ops.exp(Tensor([1.0]))
    assert len(tape) == 0


def test_shared_subexpression_accumulates():
    x = Tensor([3.0], requires_grad=True, name='x')
    with Tape() as tape:
        y = ops.mul(x, 2.0)
        loss = ops.sum_(ops.add(y, y))
    np.testing.assert_array_equal(tape.backward(loss)['x'], [4.0])


def test_tape_is_bound_to_its_thread():
    seen = []
    with Tape():
        worker = threading.Thread(target=lambda: seen.append(current_tape()))
        worker.start()
        worker.join()
    assert seen == [None]


def test_forward_is_deterministic():
    rng = np.random.default_rng(0)
    x, w = rng.normal(size=(4, 3)), rng.normal(size=(3, 2))
    first = ops.log_softmax(ops.matmul(x, w)).data
    second = ops.log_softmax(ops.matmul(x, w)).data
    assert first.tobytes() == second.tobytes()
