import numpy as np
import pytest

from oracle_kd.autodiff import ops
from oracle_kd.autodiff.tensor import Tape, Tensor
from oracle_kd.distillation import Projection, fitnets_loss, frame_kl_loss, softmax_l2_loss
from oracle_kd.errors import ConfigurationError, DimensionError, UsageError
from tests.gradcheck import check_gradients, check_parameter_gradients


def log_rows(rng, frames, classes):
    return ops.log_softmax(Tensor(rng.normal(size=(frames, classes)))).data


@pytest.fixture
def zero_projection(rng):
    g = Projection(3, 2, rng)
    g.weight.data = np.zeros((3, 2))
    return g


def test_fitnets_with_zero_projection(zero_projection, rng):
    w_tea = np.array([[1.0, 0.0], [0.6, 0.8]])
    assert fitnets_loss(rng.normal(size=(2, 3)), w_tea, zero_projection).item() == pytest.approx(1.0)
    assert fitnets_loss(rng.normal(size=(2, 3)), w_tea, zero_projection, 'sum').item() == pytest.approx(2.0)


def test_fitnets_vanishes_on_the_projection(rng):
    g = Projection(3, 2, rng)
    w_stu = rng.normal(size=(4, 3))
    w_tea = g(Tensor(w_stu)).data
    assert fitnets_loss(w_stu, w_tea, g).item() == pytest.approx(0.0, abs=1e-20)


@pytest.mark.parametrize('seed', range(10))
def test_fitnets_gradients(seed):
    rng = np.random.default_rng(seed)
    g = Projection(3, 2, rng, scale=1.0)
    w_stu, w_tea = rng.normal(size=(4, 3)), rng.normal(size=(4, 2))
    check_parameter_gradients(g.params, lambda: fitnets_loss(Tensor(w_stu), w_tea, g))
    check_gradients(lambda leaves: fitnets_loss(leaves[0], w_tea, g), [w_stu])


def test_fitnets_never_reaches_the_teacher(rng):
    g = Projection(3, 2, rng)
    w_tea = Tensor(rng.normal(size=(4, 2)), requires_grad=True, name='w_tea')
    with Tape() as tape:
        loss = fitnets_loss(Tensor(rng.normal(size=(4, 3))), w_tea, g)
    grads = tape.backward(loss, [w_tea])
    np.testing.assert_array_equal(grads['w_tea'], 0.0)


def test_fitnets_frame_mismatch(zero_projection, rng):
    with pytest.raises(ConfigurationError):
        fitnets_loss(rng.normal(size=(4, 3)), rng.normal(size=(2, 2)), zero_projection)


def test_fitnets_width_mismatch(zero_projection, rng):
    with pytest.raises(DimensionError):
        fitnets_loss(rng.normal(size=(4, 3)), rng.normal(size=(4, 5)), zero_projection)


def test_fitnets_unknown_reduction(zero_projection, rng):
    with pytest.raises(UsageError):
        fitnets_loss(rng.normal(size=(2, 3)), rng.normal(size=(2, 2)), zero_projection, 'max')


def test_kl_of_identical_grids(rng):
    grid = log_rows(rng, 5, 4)
    assert frame_kl_loss(grid, grid).item() == pytest.approx(0.0, abs=1e-12)


def test_kl_matches_its_definition(rng):
    student, teacher = log_rows(rng, 3, 3), log_rows(rng, 3, 3)
    p = np.exp(teacher)
    expected = (p * (teacher - student)).sum(axis=1).mean()
    assert frame_kl_loss(student, teacher).item() == pytest.approx(expected)
    assert frame_kl_loss(student, teacher).item() > 0


def test_kl_against_a_sharp_teacher_is_cross_entropy(rng):
    student = log_rows(rng, 2, 3)
    teacher = np.log(np.array([[1 - 2e-12, 1e-12, 1e-12], [1e-12, 1e-12, 1 - 2e-12]]))
    cross_entropy = -(student[0, 0] + student[1, 2]) / 2
    assert frame_kl_loss(student, teacher).item() == pytest.approx(cross_entropy, rel=1e-9)


@pytest.mark.parametrize('seed', range(10))
def test_kl_gradients(seed):
    rng = np.random.default_rng(seed)
    teacher, logits = log_rows(rng, 4, 3), rng.normal(size=(4, 3))
    check_gradients(lambda leaves: frame_kl_loss(ops.log_softmax(leaves[0]), teacher), [logits])


def test_l2_example():
    student, teacher = np.log([[0.75, 0.25]]), np.log([[0.25, 0.75]])
    assert softmax_l2_loss(student, teacher).item() == pytest.approx(0.5)
    assert softmax_l2_loss(teacher, student).item() == pytest.approx(0.5)


@pytest.mark.parametrize('seed', range(10))
def test_l2_gradients(seed):
    rng = np.random.default_rng(seed)
    teacher, logits = log_rows(rng, 4, 3), rng.normal(size=(4, 3))
    check_gradients(lambda leaves: softmax_l2_loss(ops.log_softmax(leaves[0]), teacher), [logits])


@pytest.mark.parametrize('loss', [frame_kl_loss, softmax_l2_loss])
def test_grid_shapes_must_agree(loss, rng):
    with pytest.raises(DimensionError):
        loss(log_rows(rng, 4, 3), log_rows(rng, 5, 3))
