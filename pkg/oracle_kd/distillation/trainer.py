import logging
import time
from dataclasses import dataclass, field
from typing import List, Mapping, Optional

from omegaconf import DictConfig
from tqdm import tqdm

from oracle_kd.autodiff.optim import NoamSchedule, Optimizer, make_optimizer
from oracle_kd.autodiff.tensor import Tensor
from oracle_kd.data.data_module import DataModule
from oracle_kd.errors import TrainingDivergedError
from oracle_kd.evaluator import evaluate
from oracle_kd.models.base import CTCModel
from oracle_kd.models.training import Objective, ctc_objective, train_step
from oracle_kd.utils import make_rng, progress_enabled

logger = logging.getLogger(__name__)


@dataclass
class EpochRecord:
    epoch: int
    phase: str
    loss: float
    eval_cer: float

    def as_line(self) -> str:
        return f'{self.epoch}\t{self.phase}\t{self.loss:.6f}\t{self.eval_cer:.6f}'


@dataclass
class TrainingLog:
    records: List[EpochRecord] = field(default_factory=list)

    def append(self, record: EpochRecord) -> None:
        self.records.append(record)
        logger.info(record.as_line())

    def __len__(self) -> int:
        return len(self.records)

    @property
    def last(self) -> Optional[EpochRecord]:
        return self.records[-1] if self.records else None

    def phase(self, name: str) -> List[EpochRecord]:
        return [r for r in self.records if r.phase == name]

    def lines(self) -> List[str]:
        return [r.as_line() for r in self.records]

    def write(self, path: str) -> None:
        with open(path, 'w', encoding='utf-8', newline='\n') as f:
            for line in self.lines():
                f.write(line + '\n')


def build_optimizer(optim: DictConfig, d_model: int) -> Optimizer:
    schedule = NoamSchedule(d_model, optim.warmup) if optim.schedule == 'noam' else None
    return make_optimizer(optim.name, optim.lr, momentum=optim.momentum, weight_decay=optim.weight_decay,
                          schedule=schedule)


class Trainer:
    """Epoch loop over one phase: shuffled batches, clipped updates, per-epoch eval CER.

    Shuffling and dropout draw from streams labelled by (phase, epoch), so
    a phase's trajectory does not depend on what ran before it.
    """

    def __init__(self, model: CTCModel, params: Mapping[str, Tensor], optimizer: Optimizer, phase: str,
                 seed: int, max_grad_norm: float = 0.0):
        self.model = model
        self.params = params
        self.optimizer = optimizer
        self.phase = phase
        self.seed = seed
        self.max_grad_norm = max_grad_norm

    def fit(self, objective: Objective, datamodule: DataModule, epochs: int, log: TrainingLog) -> TrainingLog:
        for epoch in range(epochs):
            start = time.time()
            self.model.train(make_rng(self.seed, f'dropout/{self.phase}/{epoch}'))

            losses = []
            batches = datamodule.train_batches(self.seed, f'{self.phase}/{epoch}')
            for batch in tqdm(batches, desc=f'{self.phase} {epoch + 1}/{epochs}', leave=False,
                              disable=not progress_enabled()):
                try:
                    losses.append(train_step(self.params, batch, objective, self.optimizer, self.max_grad_norm))
                except TrainingDivergedError as e:
                    logger.error(f'Training diverged in {self.phase} epoch {len(log) + 1}, sample {e.sample}')
                    raise TrainingDivergedError(e.loss, self.phase, len(log) + 1, e.sample, log) from None

            self.model.eval()
            cer = evaluate(self.model, datamodule.eval_dataset()).cer
            loss = sum(losses) / len(losses) if losses else 0.0
            log.append(EpochRecord(len(log) + 1, self.phase, loss, cer))
            logger.info(f'{self.phase} epoch {len(log)} took {time.time() - start:.3f}s')
        return log


def train_ctc(model: CTCModel, datamodule: DataModule, epochs: int, optim: DictConfig, seed: int, phase: str,
              log: Optional[TrainingLog] = None) -> TrainingLog:
    """Plain CTC training of every parameter of `model`."""
    log = log if log is not None else TrainingLog()
    trainer = Trainer(model, model.params, build_optimizer(optim, model.hidden_size), phase, seed,
                      optim.max_grad_norm)
    return trainer.fit(ctc_objective(model), datamodule, epochs, log)
