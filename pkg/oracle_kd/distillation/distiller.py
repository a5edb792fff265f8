import logging
from dataclasses import dataclass
from typing import Dict, Optional, Type

import numpy as np
from omegaconf import DictConfig

from oracle_kd.data.data_module import DataModule
from oracle_kd.data.task import Sample
from oracle_kd.distillation.fitnets import FitNets
from oracle_kd.distillation.frame_kl import FrameKL
from oracle_kd.distillation.softmax_l2 import SoftmaxL2
from oracle_kd.distillation.strategy import KDStrategy
from oracle_kd.distillation.trainer import Trainer, TrainingLog, build_optimizer, train_ctc
from oracle_kd.errors import ConfigurationError, UsageError
from oracle_kd.models.base import CTCModel, ModelOutput
from oracle_kd.utils import make_rng

logger = logging.getLogger(__name__)

STRATEGIES: Dict[str, Type[KDStrategy]] = {
    'fitnets': FitNets,
    'kl': FrameKL,
    'l2': SoftmaxL2,
}

KD_ALIASES = {
    'fitnets_l2': 'fitnets',
    'frame_kl': 'kl',
    'softmax_l2': 'l2',
}

DISTILL_TEACHERS = ('oracle', 'oracle_wo_target', 'oracle_wo_source', 'conventional')

KD_PHASE = 'kd'
CTC_PHASE = 'ctc'


def make_strategy(name: str, reduction: str = 'mean') -> KDStrategy:
    name = KD_ALIASES.get(name, name)
    if name not in STRATEGIES:
        raise ConfigurationError(f'unknown KD loss: {name}', key='distill.kd')
    return STRATEGIES[name](reduction)


@dataclass(frozen=True)
class DistillPlan:
    teacher_kind: str = 'oracle'
    kd: str = 'fitnets'
    phase1_epochs: int = 2
    phase2_epochs: int = 20
    seed: int = 0
    reduction: str = 'mean'

    def __post_init__(self):
        if self.teacher_kind not in DISTILL_TEACHERS:
            raise UsageError(f'cannot distill from a {self.teacher_kind} model')
        if self.phase1_epochs < 0 or self.phase2_epochs < 0:
            raise UsageError('phase lengths must be non-negative')

    @classmethod
    def from_config(cls, cfg: DictConfig, teacher_kind: str, seed: Optional[int] = None) -> 'DistillPlan':
        return cls(teacher_kind=teacher_kind, kd=KD_ALIASES.get(cfg.distill.kd, cfg.distill.kd),
                   phase1_epochs=cfg.distill.phase1_epochs, phase2_epochs=cfg.distill.phase2_epochs,
                   seed=cfg.seed if seed is None else seed, reduction=cfg.distill.reduction)


def check_pairing(teacher: CTCModel, student: CTCModel) -> None:
    if teacher.vocab != student.vocab:
        raise ConfigurationError(f'teacher vocabulary {teacher.vocab} differs from student {student.vocab}')
    if teacher.downsample != student.downsample or teacher.strides != student.strides:
        raise ConfigurationError(
            f'teacher strides {teacher.strides} (x{teacher.downsample}) differ from student strides '
            f'{student.strides} (x{student.downsample}); frame-level KD needs identical downsampling'
        )
    if teacher.feature_dim != student.feature_dim:
        raise ConfigurationError(f'teacher reads {teacher.feature_dim} features, student {student.feature_dim}')


class TeacherOutputs:
    """Frozen teacher posteriors, computed once per sample without recording."""

    def __init__(self, teacher: CTCModel):
        self.teacher = teacher.eval()
        self._cache: Dict[int, ModelOutput] = {}

    def __call__(self, sample: Sample) -> ModelOutput:
        if sample.id not in self._cache:
            y = sample.y if self.teacher.needs_target else None
            self._cache[sample.id] = self.teacher.predict(sample.x, y)
        return self._cache[sample.id]


def distill(plan: DistillPlan, teacher: CTCModel, student: CTCModel, datamodule: DataModule, optim: DictConfig,
            log: Optional[TrainingLog] = None) -> TrainingLog:
    """Two-phase recipe: fit the KD objective, then plain CTC.

    Phase 1 trains the student together with the strategy's own parameters
    (the FitNets projection) while the teacher only runs forward. Phase 2
    is exactly the no-KD baseline run on the initialised student.
    """
    if teacher.kind != plan.teacher_kind:
        raise ConfigurationError(f'plan expects a {plan.teacher_kind} teacher, got {teacher.kind}')
    check_pairing(teacher, student)
    log = log if log is not None else TrainingLog()
    frozen = teacher.params.snapshot()

    if plan.phase1_epochs:
        strategy = make_strategy(plan.kd, plan.reduction)
        extra = strategy.setup(teacher, student, make_rng(plan.seed, 'projection'))
        params = {**student.params, **extra}
        teacher_outputs = TeacherOutputs(teacher)

        def objective(sample: Sample):
            return strategy.loss(student.forward(sample.x), teacher_outputs(sample))

        logger.info(f'KD phase: {plan.kd} from {teacher.kind} teacher for {plan.phase1_epochs} epochs')
        trainer = Trainer(student, params, build_optimizer(optim, student.hidden_size), KD_PHASE, plan.seed,
                          optim.max_grad_norm)
        trainer.fit(objective, datamodule, plan.phase1_epochs, log)

    logger.info(f'CTC phase for {plan.phase2_epochs} epochs')
    train_ctc(student, datamodule, plan.phase2_epochs, optim, plan.seed, CTC_PHASE, log)

    changed = [n for n, v in frozen.items() if not np.array_equal(v, teacher.params[n].data)]
    if changed:
        raise UsageError(f'teacher parameters changed during distillation: {changed[:3]}')
    return log


def train_baseline(student: CTCModel, datamodule: DataModule, plan: DistillPlan, optim: DictConfig,
                   log: Optional[TrainingLog] = None) -> TrainingLog:
    """No-KD reference: the CTC phase alone, with the same seed streams."""
    return train_ctc(student, datamodule, plan.phase2_epochs, optim, plan.seed, CTC_PHASE, log)
