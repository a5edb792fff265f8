"""Synthetic sequence-transcription task.

Each label token owns a unit-norm prototype vector; a sample is a random
label sequence where every token is held for a random number of frames,
each frame being the prototype plus Gaussian noise.
"""
import logging
from dataclasses import dataclass, field
from functools import lru_cache
from typing import List, Tuple

import numpy as np
from omegaconf import DictConfig

from oracle_kd.autodiff.ops import stack_output_length
from oracle_kd.ctc.alignment import is_feasible
from oracle_kd.errors import GenerationError, UsageError
from oracle_kd.utils import make_rng

logger = logging.getLogger(__name__)

MAX_REDRAWS = 100
SEPARATION_THRESHOLD = 0.9


@dataclass(frozen=True)
class TaskSpec:
    vocab_size: int = 10
    feature_dim: int = 8
    min_duration: int = 3
    max_duration: int = 8
    noise: float = 0.3
    min_length: int = 2
    max_length: int = 10
    num_samples: int = 640
    seed: int = 0
    strides: Tuple[int, ...] = (1, 2, 1, 2)

    def __post_init__(self):
        if self.min_duration < 1 or self.max_duration < self.min_duration:
            raise UsageError('durations must satisfy 1 <= min_duration <= max_duration')
        if self.min_length < 0 or self.max_length < self.min_length:
            raise UsageError('lengths must satisfy 0 <= min_length <= max_length')

    @classmethod
    def from_config(cls, cfg: DictConfig) -> 'TaskSpec':
        t = cfg.task
        return cls(vocab_size=t.vocab_size, feature_dim=t.feature_dim, min_duration=t.min_duration,
                   max_duration=t.max_duration, noise=t.noise, min_length=t.min_length, max_length=t.max_length,
                   num_samples=cfg.data.train_size + cfg.data.eval_size, seed=t.seed,
                   strides=tuple(cfg.model.strides))


@dataclass
class Sample:
    id: int
    x: np.ndarray
    y: List[int] = field(default_factory=list)

    @property
    def frames(self) -> int:
        return int(self.x.shape[0])


@lru_cache(maxsize=32)
def _prototypes(vocab_size: int, feature_dim: int, seed: int) -> np.ndarray:
    rng = make_rng(seed, 'prototypes')
    protos = rng.standard_normal((vocab_size, feature_dim))
    protos /= np.linalg.norm(protos, axis=1, keepdims=True)

    # repulsion on the sphere spreads the classes apart
    for _ in range(200):
        diff = protos[:, None, :] - protos[None, :, :]
        dist2 = (diff ** 2).sum(axis=-1) + np.eye(vocab_size)
        push = (diff / dist2[..., None] ** 1.5).sum(axis=1)
        protos = protos + 0.05 * push
        protos /= np.linalg.norm(protos, axis=1, keepdims=True)

    protos.setflags(write=False)
    return protos


def prototypes(spec: TaskSpec) -> np.ndarray:
    protos = _prototypes(spec.vocab_size, spec.feature_dim, spec.seed)
    if spec.vocab_size > 1:
        gaps = np.linalg.norm(protos[:, None] - protos[None, :], axis=-1) + np.eye(spec.vocab_size)
        if gaps.min() <= 1e-9:
            raise GenerationError('class prototypes are not pairwise distinct')
    return protos


def _draw(spec: TaskSpec, index: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    if not 0 <= index < spec.num_samples:
        raise UsageError(f'sample index {index} outside [0, {spec.num_samples})')

    protos = prototypes(spec)
    rng = make_rng(spec.seed, f'sample/{index}')

    for _ in range(MAX_REDRAWS):
        length = int(rng.integers(spec.min_length, spec.max_length + 1))
        tokens = rng.integers(0, spec.vocab_size, size=length)
        durations = rng.integers(spec.min_duration, spec.max_duration + 1, size=length)
        frames = int(durations.sum())
        if frames > 0 and is_feasible(tokens.tolist(), stack_output_length(frames, spec.strides)):
            break
    else:
        raise GenerationError(f'sample {index}: no feasible draw within {MAX_REDRAWS} attempts')

    x = protos[np.repeat(tokens, durations)]
    if spec.noise > 0:
        x = x + spec.noise * rng.standard_normal(x.shape)
    return tokens, durations, x


def gen_sample(spec: TaskSpec, index: int) -> Sample:
    """Sample `index` of the task; a pure function of (spec, index)."""
    tokens, _, x = _draw(spec, index)
    return Sample(id=index, x=x, y=[int(t) for t in tokens])


def class_separation(spec: TaskSpec, count: int = 64) -> float:
    """Nearest-prototype accuracy over the frames of the first `count` samples."""
    protos = prototypes(spec)
    correct = total = 0
    for index in range(min(count, spec.num_samples)):
        tokens, durations, x = _draw(spec, index)
        truth = np.repeat(tokens, durations)
        dist = ((x[:, None, :] - protos[None, :, :]) ** 2).sum(axis=-1)
        correct += int((dist.argmin(axis=1) == truth).sum())
        total += truth.size
    return correct / total if total else 1.0


def generate_dataset(spec: TaskSpec) -> List[Sample]:
    samples = [gen_sample(spec, i) for i in range(spec.num_samples)]
    accuracy = class_separation(spec)
    if accuracy <= SEPARATION_THRESHOLD:
        logger.warning(f'Nearest-prototype frame accuracy {accuracy:.3f} is at or below {SEPARATION_THRESHOLD}')
    else:
        logger.info(f'Nearest-prototype frame accuracy {accuracy:.3f}')
    return samples
