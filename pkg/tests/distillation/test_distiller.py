import numpy as np
import pytest

from oracle_kd.autodiff import ops
from oracle_kd.autodiff.optim import SGD
from oracle_kd.autodiff.tensor import Tensor
from oracle_kd.ctc.vocab import Vocab
from oracle_kd.distillation import (
    DistillPlan, FitNets, Trainer, TrainingLog, distill, make_ablation_teacher, make_strategy, train_baseline,
    train_teacher
)
from oracle_kd.errors import ConfigurationError, TrainingDivergedError, UsageError
from oracle_kd.models import build_model
from tests.conftest import tiny_config


def test_zero_kd_epochs_is_the_baseline(tiny_cfg, tiny_datamodule):
    teacher = build_model('oracle', tiny_cfg, seed=0)
    plan = DistillPlan(teacher_kind='oracle', phase1_epochs=0, phase2_epochs=2)

    distilled, baseline = build_model('student', tiny_cfg, seed=0), build_model('student', tiny_cfg, seed=0)
    distill_log = distill(plan, teacher, distilled, tiny_datamodule, tiny_cfg.optim)
    baseline_log = train_baseline(baseline, tiny_datamodule, plan, tiny_cfg.optim)

    for name in distilled.params:
        np.testing.assert_array_equal(distilled.params[name].data, baseline.params[name].data)
    assert distill_log.lines() == baseline_log.lines()


@pytest.mark.parametrize('kd', ['fitnets', 'kl', 'l2'])
def test_teacher_stays_frozen(kd, tiny_cfg, tiny_datamodule):
    teacher = build_model('oracle', tiny_cfg, seed=0)
    before = teacher.params.snapshot()
    log = distill(DistillPlan(kd=kd, phase1_epochs=1, phase2_epochs=1), teacher,
                  build_model('student', tiny_cfg, seed=0), tiny_datamodule, tiny_cfg.optim)

    for name, value in before.items():
        np.testing.assert_array_equal(teacher.params[name].data, value)
    assert [r.phase for r in log.records] == ['kd', 'ctc']
    assert [r.epoch for r in log.records] == [1, 2]


def test_distillation_is_deterministic(tiny_cfg, tiny_datamodule):
    teacher = build_model('oracle', tiny_cfg, seed=0)
    plan = DistillPlan(phase1_epochs=1, phase2_epochs=1, seed=5)
    first, second = build_model('student', tiny_cfg, seed=5), build_model('student', tiny_cfg, seed=5)
    first_log = distill(plan, teacher, first, tiny_datamodule, tiny_cfg.optim)
    second_log = distill(plan, teacher, second, tiny_datamodule, tiny_cfg.optim)

    for name in first.params:
        np.testing.assert_array_equal(first.params[name].data, second.params[name].data)
    assert first_log.lines() == second_log.lines()


def test_kd_phase_changes_the_student(tiny_cfg, tiny_datamodule):
    teacher = build_model('oracle', tiny_cfg, seed=0)
    student = build_model('student', tiny_cfg, seed=0)
    before = student.params.snapshot()
    distill(DistillPlan(phase1_epochs=1, phase2_epochs=0), teacher, student, tiny_datamodule, tiny_cfg.optim)
    assert any(not np.array_equal(student.params[n].data, v) for n, v in before.items())


def test_conventional_teacher_gets_a_wider_projection(tiny_cfg, rng):
    strategy = make_strategy('fitnets_l2')
    assert isinstance(strategy, FitNets)
    params = strategy.setup(build_model('conventional', tiny_cfg, seed=0), build_model('student', tiny_cfg, seed=0),
                            rng)
    assert params.manifest() == {'projection.weight': (6, 12), 'projection.bias': (12,)}


def test_downsampling_must_match(tiny_cfg, tiny_datamodule):
    teacher = build_model('oracle', tiny_cfg, seed=0)
    student = build_model('student', tiny_config(**{'model.strides': '[1,2,1,1]'}), seed=0)
    with pytest.raises(ConfigurationError):
        distill(DistillPlan(), teacher, student, tiny_datamodule, tiny_cfg.optim)


def test_vocabularies_must_match(tiny_cfg, tiny_datamodule):
    teacher = build_model('oracle', tiny_cfg, seed=0)
    student = build_model('student', tiny_cfg, seed=0, vocab=Vocab.of_size(5))
    with pytest.raises(ConfigurationError):
        distill(DistillPlan(), teacher, student, tiny_datamodule, tiny_cfg.optim)


def test_teacher_kind_must_match_the_plan(tiny_cfg, tiny_datamodule):
    teacher = build_model('conventional', tiny_cfg, seed=0)
    with pytest.raises(ConfigurationError):
        distill(DistillPlan(teacher_kind='oracle'), teacher, build_model('student', tiny_cfg, seed=0),
                tiny_datamodule, tiny_cfg.optim)


def test_plan_validation():
    with pytest.raises(UsageError):
        DistillPlan(teacher_kind='student')
    with pytest.raises(UsageError):
        DistillPlan(phase1_epochs=-1)


def test_plan_from_config(tiny_cfg):
    plan = DistillPlan.from_config(tiny_config(**{'distill.kd': 'kl'}), 'oracle_wo_source', seed=9)
    assert (plan.kd, plan.teacher_kind, plan.seed, plan.phase1_epochs) == ('kl', 'oracle_wo_source', 9, 1)


def test_unknown_strategy():
    with pytest.raises(ConfigurationError):
        make_strategy('attention_transfer')


def test_teacher_training_log(tiny_cfg, tiny_datamodule):
    teacher, log = train_teacher('oracle', tiny_config(**{'train.teacher_epochs': 2}), tiny_datamodule, seed=0)
    assert teacher.kind == 'oracle'
    assert len(log) == 2 and {r.phase for r in log.records} == {'teacher'}
    assert all(0.0 <= r.eval_cer for r in log.records)


def test_ablation_teachers(tiny_cfg, tiny_datamodule):
    teacher, _ = make_ablation_teacher('wo_target', tiny_cfg, tiny_datamodule, seed=0)
    assert teacher.kind == 'oracle_wo_target'
    with pytest.raises(UsageError):
        make_ablation_teacher('wo_both', tiny_cfg, tiny_datamodule, seed=0)


def test_divergence_reports_phase_and_epoch(tiny_cfg, tiny_datamodule):
    model = build_model('student', tiny_cfg, seed=0)
    log = TrainingLog()
    trainer = Trainer(model, model.params, SGD(lr=0.1), 'kd', seed=0)

    with np.errstate(divide='ignore'), pytest.raises(TrainingDivergedError) as info:
        trainer.fit(lambda sample: ops.log(Tensor(np.zeros(1))), tiny_datamodule, 1, log)
    assert (info.value.phase, info.value.epoch) == ('kd', 1)
    assert info.value.sample is not None
    assert info.value.log is log


def test_log_file_layout(tiny_cfg, tiny_datamodule, tmp_path):
    model = build_model('student', tiny_cfg, seed=0)
    log = train_baseline(model, tiny_datamodule, DistillPlan(phase2_epochs=2), tiny_cfg.optim)
    path = tmp_path / 'run.log.tsv'
    log.write(str(path))

    lines = path.read_text().splitlines()
    assert len(lines) == 2
    epoch, phase, loss, cer = lines[1].split('\t')
    assert (epoch, phase) == ('2', 'ctc')
    assert float(loss) > 0 and float(cer) >= 0
