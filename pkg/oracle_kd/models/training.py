"""CTC training steps shared by teacher training, distillation and the baseline."""
import logging
from typing import Callable, Mapping, Sequence

import numpy as np

from oracle_kd.autodiff import ops
from oracle_kd.autodiff.optim import Optimizer, clip_grad_norm
from oracle_kd.autodiff.tensor import Tape, Tensor
from oracle_kd.ctc.loss import ctc_loss_op
from oracle_kd.data.task import Sample
from oracle_kd.errors import NumericError, TrainingDivergedError, UsageError
from oracle_kd.models.base import CTCModel
from oracle_kd.models.oracle_teacher import OracleTeacher

logger = logging.getLogger(__name__)

Objective = Callable[[Sample], Tensor]


def ctc_objective(model: CTCModel) -> Objective:
    """Per-sample CTC loss of `model`; targets are fed in when the model reads them."""

    def objective(sample: Sample) -> Tensor:
        out = model.forward(sample.x, sample.y if model.needs_target else None)
        return ctc_loss_op(out.grid, sample.y, model.vocab)

    return objective


def train_step(params: Mapping[str, Tensor], batch: Sequence[Sample], objective: Objective,
               optimizer: Optimizer, max_grad_norm: float = 0.0) -> float:
    """Mean objective over `batch`, one backward sweep, one optimizer update."""
    if not batch:
        raise UsageError('train_step needs a non-empty batch')

    with Tape() as tape:
        total = None
        for sample in batch:
            try:
                loss = objective(sample)
            except NumericError:
                raise TrainingDivergedError(float('nan'), sample=sample.id) from None
            if not np.isfinite(loss.item()):
                raise TrainingDivergedError(loss.item(), sample=sample.id)
            total = loss if total is None else ops.add(total, loss)
        mean_loss = ops.div_scalar(total, len(batch))

    grads = tape.backward(mean_loss, params)
    grads, norm = clip_grad_norm(grads, max_grad_norm)
    logger.debug(f'step loss={mean_loss.item():.6f} grad_norm={norm:.4f}')
    optimizer.step(params, grads)
    return mean_loss.item()


def oracle_train_step(batch: Sequence[Sample], teacher: OracleTeacher, optimizer: Optimizer,
                      max_grad_norm: float = 0.0) -> float:
    """One update of every teacher parameter (SourceNet, encoder, decoder) on the CTC objective."""
    return train_step(teacher.params, batch, ctc_objective(teacher), optimizer, max_grad_norm)
