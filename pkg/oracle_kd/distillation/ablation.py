import logging
from typing import Tuple

from omegaconf import DictConfig

from oracle_kd.data.data_module import DataModule
from oracle_kd.distillation.trainer import TrainingLog, train_ctc
from oracle_kd.errors import UsageError
from oracle_kd.models.factory import build_model
from oracle_kd.models.base import CTCModel

logger = logging.getLogger(__name__)

ABLATIONS = {
    'wo_target': 'oracle_wo_target',
    'wo_source': 'oracle_wo_source',
}

TEACHER_PHASE = 'teacher'


def train_teacher(kind: str, cfg: DictConfig, datamodule: DataModule, seed: int) -> Tuple[CTCModel, TrainingLog]:
    """Fresh teacher of `kind` trained on the CTC objective for `train.teacher_epochs`."""
    teacher = build_model(kind, cfg, seed)
    log = train_ctc(teacher, datamodule, cfg.train.teacher_epochs, cfg.optim, seed, TEACHER_PHASE)
    return teacher, log


def make_ablation_teacher(kind: str, cfg: DictConfig, datamodule: DataModule, seed: int
                          ) -> Tuple[CTCModel, TrainingLog]:
    """Oracle Teacher with one input replaced by zeros, in training and at inference."""
    kind = ABLATIONS.get(kind, kind)
    if kind not in ABLATIONS.values():
        raise UsageError(f'unknown ablation: {kind}')
    logger.info(f'Training ablation teacher {kind}')
    return train_teacher(kind, cfg, datamodule, seed)
