import logging
from typing import Union

import numpy as np

from oracle_kd.autodiff import ops
from oracle_kd.autodiff.tensor import Tensor, as_tensor
from oracle_kd.distillation.strategy import KDStrategy, check_same_shape, constant
from oracle_kd.errors import ConfigurationError, UsageError
from oracle_kd.models.base import CTCModel, ModelOutput
from oracle_kd.models.blocks import Linear
from oracle_kd.models.parameter_store import ParameterStore

logger = logging.getLogger(__name__)

PROJECTION_SCALE = 0.1
REDUCTIONS = ('mean', 'sum')


class Projection(Linear):
    """Per-frame linear bridge g from the student width to the teacher width."""

    def __init__(self, d_student: int, d_teacher: int, rng: np.random.Generator, scale: float = PROJECTION_SCALE):
        super().__init__(ParameterStore(), 'projection', d_student, d_teacher, rng, scale=scale)

    @property
    def params(self) -> ParameterStore:
        return self.store


def fitnets_loss(w_stu: Tensor, w_tea: Union[Tensor, np.ndarray], g: Projection, reduction: str = 'mean') -> Tensor:
    """Squared l2 distance between g(w_stu) and the teacher representation.

    Summed over frames and channels; `mean` divides by the frame count.
    Gradients reach g and the student, never the teacher.
    """
    if reduction not in REDUCTIONS:
        raise UsageError(f'unknown reduction: {reduction}')
    w_stu, w_tea = as_tensor(w_stu), constant(w_tea)
    if w_stu.shape[0] != w_tea.shape[0]:
        raise ConfigurationError(
            f'student has {w_stu.shape[0]} frames, teacher has {w_tea.shape[0]}; downsampling must match'
        )

    projected = g(w_stu)
    check_same_shape('fitnets_loss', projected, w_tea)
    diff = ops.sub(projected, w_tea)
    total = ops.sum_(ops.mul(diff, diff))
    frames = w_stu.shape[0]
    if reduction == 'sum' or frames == 0:
        return total
    return ops.div_scalar(total, frames)


class FitNets(KDStrategy):
    name = 'fitnets'

    def __init__(self, reduction: str = 'mean'):
        super().__init__(reduction)
        self.projection = None

    def setup(self, teacher: CTCModel, student: CTCModel, rng: np.random.Generator) -> ParameterStore:
        self.projection = Projection(student.hidden_size, teacher.hidden_size, rng)
        self.params = self.projection.params
        logger.info(f'Projection {student.hidden_size} -> {teacher.hidden_size}')
        return self.params

    def loss(self, student: ModelOutput, teacher: ModelOutput) -> Tensor:
        if self.projection is None:
            raise UsageError('FitNets.setup must run before computing the loss')
        return fitnets_loss(student.hidden, teacher.hidden, self.projection, self.reduction)
