import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np
from tqdm import tqdm

from oracle_kd.ctc.decoding import best_path, greedy_decode
from oracle_kd.ctc.vocab import Vocab
from oracle_kd.data.task import Sample
from oracle_kd.errors import ConfigurationError, UsageError
from oracle_kd.models.base import CTCModel
from oracle_kd.utils import progress_enabled

logger = logging.getLogger(__name__)

Decoder = Callable[[np.ndarray, Vocab], List[int]]


def edit_distance(a: Sequence[int], b: Sequence[int]) -> int:
    """Levenshtein distance with unit costs."""
    a, b = list(a), list(b)
    if not a:
        return len(b)
    if not b:
        return len(a)

    previous = np.arange(len(b) + 1)
    for i, token in enumerate(a, start=1):
        current = np.empty_like(previous)
        current[0] = i
        for j, other in enumerate(b, start=1):
            current[j] = min(previous[j] + 1, current[j - 1] + 1, previous[j - 1] + (token != other))
        previous = current
    return int(previous[-1])


@dataclass
class EvalReport:
    per_sample_cer: List[float] = field(default_factory=list)
    edits: int = 0
    reference_length: int = 0
    exact: int = 0

    @property
    def count(self) -> int:
        return len(self.per_sample_cer)

    @property
    def cer(self) -> float:
        """Corpus CER: total edits over total reference length."""
        return self.edits / max(self.reference_length, 1)

    @property
    def accuracy(self) -> float:
        return self.exact / self.count if self.count else 0.0

    def add(self, hypothesis: Sequence[int], reference: Sequence[int]) -> None:
        edits = edit_distance(hypothesis, reference)
        self.per_sample_cer.append(edits / max(len(reference), 1))
        self.edits += edits
        self.reference_length += len(reference)
        self.exact += int(list(hypothesis) == list(reference))

    def as_dict(self) -> Dict[str, float]:
        return {
            'count': self.count,
            'cer': self.cer,
            'accuracy': self.accuracy,
            'edits': self.edits,
            'reference_length': self.reference_length,
        }


def score(hypotheses: Sequence[Sequence[int]], references: Sequence[Sequence[int]]) -> EvalReport:
    if len(hypotheses) != len(references):
        raise UsageError(f'{len(hypotheses)} hypotheses for {len(references)} references')
    report = EvalReport()
    for hypothesis, reference in zip(hypotheses, references):
        report.add(hypothesis, reference)
    return report


def blank_fraction(grid: np.ndarray, vocab: Vocab) -> float:
    """Share of frames whose argmax is the blank."""
    path = best_path(grid)
    if not path:
        return 0.0
    return sum(c == vocab.blank for c in path) / len(path)


def check_compatible(model: CTCModel, samples: Sequence[Sample]) -> None:
    for sample in samples:
        if any(t < 0 or t >= len(model.vocab) for t in sample.y):
            raise ConfigurationError(
                f'sample {sample.id} holds tokens outside the model vocabulary of size {len(model.vocab)}'
            )
        if sample.x.ndim != 2 or sample.x.shape[1] != model.feature_dim:
            raise ConfigurationError(
                f'sample {sample.id} has features {sample.x.shape}, model expects dim {model.feature_dim}'
            )


class Evaluator:
    """Greedy-decodes a frozen model over a dataset and scores it."""

    def __init__(self, model: CTCModel, samples: Sequence[Sample], decode: Decoder = greedy_decode):
        check_compatible(model, samples)
        self.model = model
        self.samples = samples
        self.decode = decode

    def grid(self, sample: Sample) -> np.ndarray:
        y = sample.y if self.model.needs_target else None
        return self.model.predict(sample.x, y).grid.data

    def evaluate(self) -> EvalReport:
        self.model.eval()
        report = EvalReport()
        for sample in tqdm(self.samples, desc='eval', leave=False, disable=not progress_enabled()):
            report.add(self.decode(self.grid(sample), self.model.vocab), sample.y)
        logger.debug(f'Evaluated {report.count} samples: cer={report.cer:.4f} accuracy={report.accuracy:.4f}')
        return report

    def blank_fraction(self, count: Optional[int] = None) -> float:
        samples = self.samples[:count] if count is not None else self.samples
        if not samples:
            return 0.0
        return float(np.mean([blank_fraction(self.grid(s), self.model.vocab) for s in samples]))


def evaluate(model: CTCModel, samples: Sequence[Sample], decode: Decoder = greedy_decode) -> EvalReport:
    return Evaluator(model, samples, decode).evaluate()


def weighted_key_positions(weights: np.ndarray) -> np.ndarray:
    """Attention-weighted mean key index per query row of a (T', keys) map."""
    weights = np.asarray(weights, dtype=np.float64)
    return weights @ np.arange(weights.shape[1], dtype=np.float64)


def is_monotone(curve: np.ndarray, tolerance: float = 1e-9) -> bool:
    return bool(np.all(np.diff(curve) >= -tolerance))


def source_sensitivity(model: CTCModel, samples: Sequence[Sample]) -> float:
    """Share of samples whose best path moves when x is swapped for its neighbour's at fixed y.

    The neighbour's frames are tiled or cut to the original length.
    """
    if len(samples) < 2:
        return 0.0
    model.eval()
    changed = 0
    for i, sample in enumerate(samples):
        other = samples[(i + 1) % len(samples)]
        y = sample.y if model.needs_target else None
        original = best_path(model.predict(sample.x, y).grid.data)
        swapped = best_path(model.predict(np.resize(other.x, sample.x.shape), y).grid.data)
        changed += int(original != swapped)
    return changed / len(samples)
