import logging
from typing import Iterator, List, Optional

from omegaconf import DictConfig

from oracle_kd.data.file_handler import read_dataset
from oracle_kd.data.task import Sample, TaskSpec, generate_dataset
from oracle_kd.errors import ConfigurationError
from oracle_kd.utils import make_rng

logger = logging.getLogger(__name__)


class DataModule:
    """Train/eval split of one dataset plus seeded mini-batching."""

    def __init__(self, cfg: DictConfig, samples: Optional[List[Sample]] = None, path: Optional[str] = None):
        self.cfg = cfg
        self.path = path
        self.samples: Optional[List[Sample]] = samples
        self.train_set: List[Sample] = []
        self.eval_set: List[Sample] = []

    def prepare_data(self) -> None:
        if self.samples is not None:
            return
        if self.path is not None:
            self.samples = read_dataset(self.path)
        else:
            self.samples = generate_dataset(TaskSpec.from_config(self.cfg))

    def setup(self) -> None:
        self.prepare_data()
        train_size, eval_size = self.cfg.data.train_size, self.cfg.data.eval_size
        if len(self.samples) < train_size + eval_size:
            raise ConfigurationError(
                f'dataset holds {len(self.samples)} samples, config asks for {train_size} + {eval_size}',
                key='data.train_size'
            )
        dims = {s.x.shape[1] for s in self.samples if s.x.ndim == 2}
        if dims and dims != {self.cfg.task.feature_dim}:
            raise ConfigurationError(f'dataset feature dims {sorted(dims)} differ from task.feature_dim',
                                     key='task.feature_dim')
        if any(t >= self.cfg.task.vocab_size for s in self.samples for t in s.y):
            raise ConfigurationError('dataset tokens exceed task.vocab_size', key='task.vocab_size')

        self.train_set = self.samples[:train_size]
        self.eval_set = self.samples[train_size:train_size + eval_size]
        logger.info(f'Train split: {len(self.train_set)} samples, eval split: {len(self.eval_set)} samples')

    def train_batches(self, seed: int, label: str) -> Iterator[List[Sample]]:
        """One epoch of shuffled batches from the `shuffle/<label>` stream."""
        order = make_rng(seed, f'shuffle/{label}').permutation(len(self.train_set))
        size = self.cfg.data.batch_size
        for start in range(0, len(order), size):
            yield [self.train_set[i] for i in order[start:start + size]]

    def eval_dataset(self) -> List[Sample]:
        return self.eval_set
