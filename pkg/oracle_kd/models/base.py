from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from oracle_kd.autodiff.tensor import Tensor, no_grad
from oracle_kd.ctc.vocab import Vocab
from oracle_kd.autodiff.ops import stack_output_length
from oracle_kd.models.module import Module
from oracle_kd.models.parameter_store import ParameterStore

TEACHER_KINDS = ('oracle', 'oracle_wo_target', 'oracle_wo_source', 'conventional')
MODEL_KINDS = TEACHER_KINDS + ('student',)


@dataclass
class ModelOutput:
    grid: Tensor
    hidden: Tensor
    attention: Optional[np.ndarray] = None


class CTCModel(Module):
    """Common surface of every network that emits a CTC posterior grid."""

    kind: str = ''
    scope_name: str = 'model'
    needs_target: bool = False

    def __init__(self, vocab: Vocab, feature_dim: int, strides: Sequence[int]):
        super().__init__(ParameterStore(), self.scope_name)
        self.vocab = vocab
        self.feature_dim = feature_dim
        self.strides: List[int] = [int(s) for s in strides]

    @property
    def params(self) -> ParameterStore:
        return self.store

    @property
    def downsample(self) -> int:
        return int(np.prod(self.strides))

    @property
    def hidden_size(self) -> int:
        raise NotImplementedError

    def output_length(self, frames: int) -> int:
        return stack_output_length(frames, self.strides)

    def forward(self, x: np.ndarray, y: Optional[Sequence[int]] = None) -> ModelOutput:
        raise NotImplementedError

    def predict(self, x: np.ndarray, y: Optional[Sequence[int]] = None) -> ModelOutput:
        with no_grad():
            return self.forward(x, y)

    def meta(self) -> Dict[str, Any]:
        return {
            'kind': self.kind,
            'vocab_size': len(self.vocab),
            'blank_last': self.vocab.blank_last,
            'feature_dim': self.feature_dim,
            'strides': list(self.strides),
        }
