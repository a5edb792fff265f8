from typing import Union

import numpy as np

from oracle_kd.autodiff import ops
from oracle_kd.autodiff.tensor import Tensor, as_tensor
from oracle_kd.distillation.strategy import KDStrategy, check_same_shape, constant
from oracle_kd.models.base import ModelOutput


def frame_kl_loss(student_grid: Union[Tensor, np.ndarray], teacher_grid: Union[Tensor, np.ndarray]) -> Tensor:
    """Mean over frames of KL(P_tea || P_stu), both given as log-posterior grids."""
    student_grid, teacher_grid = as_tensor(student_grid), constant(teacher_grid)
    check_same_shape('frame_kl_loss', student_grid, teacher_grid)

    p_tea = np.exp(teacher_grid.data)
    entropy_term = float((p_tea * teacher_grid.data).sum())
    cross = ops.sum_(ops.mul(student_grid, p_tea))
    total = ops.sub(entropy_term, cross)
    frames = student_grid.shape[0]
    return ops.div_scalar(total, frames) if frames else total


class FrameKL(KDStrategy):
    name = 'kl'

    def loss(self, student: ModelOutput, teacher: ModelOutput) -> Tensor:
        return frame_kl_loss(student.grid, teacher.grid)
