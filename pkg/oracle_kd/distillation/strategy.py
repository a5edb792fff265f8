from typing import Union

import numpy as np

from oracle_kd.autodiff.tensor import Tensor
from oracle_kd.errors import DimensionError
from oracle_kd.models.base import CTCModel, ModelOutput
from oracle_kd.models.parameter_store import ParameterStore


class KDStrategy:
    """A knowledge-distillation objective between a frozen teacher and a student.

    `setup` builds whatever extra trainable parameters the objective needs;
    they are trained together with the student during the KD phase only.
    """

    name: str = ''

    def __init__(self, reduction: str = 'mean'):
        self.reduction = reduction
        self.params = ParameterStore()

    def setup(self, teacher: CTCModel, student: CTCModel, rng: np.random.Generator) -> ParameterStore:
        return self.params

    def loss(self, student: ModelOutput, teacher: ModelOutput) -> Tensor:
        raise NotImplementedError


def constant(value: Union[Tensor, np.ndarray]) -> Tensor:
    """Teacher-side value cut off from the tape."""
    data = value.data if isinstance(value, Tensor) else value
    return Tensor(np.asarray(data, dtype=np.float64))


def check_same_shape(op: str, student: Tensor, teacher: Tensor) -> None:
    if student.shape != teacher.shape:
        raise DimensionError(op, student.shape, teacher.shape)
