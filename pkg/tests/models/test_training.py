import numpy as np
import pytest

from oracle_kd.autodiff import ops
from oracle_kd.autodiff.optim import SGD, Adam
from oracle_kd.autodiff.tensor import Tensor
from oracle_kd.data import TaskSpec, generate_dataset
from oracle_kd.errors import TrainingDivergedError, UsageError
from oracle_kd.models import build_model
from oracle_kd.models.training import ctc_objective, oracle_train_step, train_step
from tests.conftest import tiny_config


def test_zero_learning_rate_keeps_parameters(tiny_cfg, tiny_samples):
    model = build_model('student', tiny_cfg, seed=0)
    before = model.params.snapshot()
    loss = train_step(model.params, tiny_samples[:4], ctc_objective(model), SGD(lr=0.0))
    assert np.isfinite(loss) and loss > 0
    for name, value in before.items():
        np.testing.assert_array_equal(model.params[name].data, value)


def test_oracle_step_touches_every_parameter(tiny_cfg, tiny_samples):
    teacher = build_model('oracle', tiny_cfg, seed=0)
    before = teacher.params.snapshot()
    oracle_train_step(tiny_samples[:4], teacher, Adam(lr=1e-2))
    unchanged = [n for n, v in before.items() if np.array_equal(teacher.params[n].data, v)]
    assert unchanged == []


def test_oracle_loss_goes_down(tiny_cfg, tiny_samples):
    teacher = build_model('oracle', tiny_cfg, seed=0)
    optimizer = Adam(lr=1e-2)
    losses = [oracle_train_step(tiny_samples[:4], teacher, optimizer) for _ in range(20)]
    assert losses[-1] < losses[0]


@pytest.mark.slow
def test_oracle_loss_goes_down_on_a_sixteen_sample_batch():
    cfg = tiny_config(**{'data.train_size': 12})
    batch = generate_dataset(TaskSpec.from_config(cfg))
    assert len(batch) == 16

    teacher = build_model('oracle', cfg, seed=0)
    optimizer = Adam(lr=1e-2)
    losses = [oracle_train_step(batch, teacher, optimizer) for _ in range(50)]
    assert losses[-1] < losses[0]


@pytest.mark.slow
def test_oracle_teacher_overfits_a_single_sample():
    cfg = tiny_config(**{'model.hidden': 16, 'model.ff_dim': 32})
    sample = generate_dataset(TaskSpec.from_config(cfg))[:1]
    teacher = build_model('oracle', cfg, seed=0)
    optimizer = Adam(lr=1e-2)

    for _ in range(500):
        loss = oracle_train_step(sample, teacher, optimizer)
        if loss < 0.1:
            break
    assert loss < 0.1


def test_mean_over_the_batch(tiny_cfg, tiny_samples):
    model = build_model('student', tiny_cfg, seed=0)
    objective = ctc_objective(model)
    singles = [train_step(model.params, [s], objective, SGD(lr=0.0)) for s in tiny_samples[:4]]
    batched = train_step(model.params, tiny_samples[:4], objective, SGD(lr=0.0))
    assert batched == pytest.approx(np.mean(singles))


def test_empty_batch(tiny_cfg):
    model = build_model('student', tiny_cfg, seed=0)
    with pytest.raises(UsageError):
        train_step(model.params, [], ctc_objective(model), SGD(lr=0.1))


def test_non_finite_loss_names_the_sample(tiny_cfg, tiny_samples):
    model = build_model('student', tiny_cfg, seed=0)

    def objective(sample):
        return ops.log(Tensor(np.zeros(1)))

    with np.errstate(divide='ignore'), pytest.raises(TrainingDivergedError) as info:
        train_step(model.params, tiny_samples[2:4], objective, SGD(lr=0.1))
    assert info.value.sample == tiny_samples[2].id
