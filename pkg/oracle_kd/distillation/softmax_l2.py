from typing import Union

import numpy as np

from oracle_kd.autodiff import ops
from oracle_kd.autodiff.tensor import Tensor, as_tensor
from oracle_kd.distillation.strategy import KDStrategy, check_same_shape, constant
from oracle_kd.models.base import ModelOutput


def softmax_l2_loss(student_grid: Union[Tensor, np.ndarray], teacher_grid: Union[Tensor, np.ndarray]) -> Tensor:
    """Mean over frames of the squared l2 distance between posterior rows."""
    student_grid, teacher_grid = as_tensor(student_grid), constant(teacher_grid)
    check_same_shape('softmax_l2_loss', student_grid, teacher_grid)

    diff = ops.sub(ops.exp(student_grid), np.exp(teacher_grid.data))
    total = ops.sum_(ops.mul(diff, diff))
    frames = student_grid.shape[0]
    return ops.div_scalar(total, frames) if frames else total


class SoftmaxL2(KDStrategy):
    name = 'l2'

    def loss(self, student: ModelOutput, teacher: ModelOutput) -> Tensor:
        return softmax_l2_loss(student.grid, teacher.grid)
