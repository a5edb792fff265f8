import logging
from typing import Optional, Sequence

import numpy as np

from oracle_kd.autodiff import ops
from oracle_kd.autodiff.tensor import Tensor
from oracle_kd.ctc.vocab import Vocab
from oracle_kd.errors import UsageError
from oracle_kd.models.base import CTCModel, ModelOutput
from oracle_kd.models.blocks import Linear, build_conv_blocks, conv_stack

logger = logging.getLogger(__name__)


class StudentCTC(CTCModel):
    """Plain convolutional CTC model; it only ever sees x.

    Also serves as the conventional teacher, built wider and dense.
    """

    scope_name = 'ctc'

    def __init__(self, vocab: Vocab, feature_dim: int, rng: np.random.Generator, channels: int = 24,
                 kernel: int = 5, strides: Sequence[int] = (1, 2, 1, 2), separable: bool = True,
                 dropout: float = 0.0, kind: str = 'student'):
        if kind not in ('student', 'conventional'):
            raise UsageError(f'unknown CTC model kind: {kind}')
        self.kind = kind
        super().__init__(vocab, feature_dim, strides)
        self.channels = channels
        self.kernel = kernel
        self.separable = separable
        self.dropout = dropout
        self.blocks = [self.child(b) for b in build_conv_blocks(
            self.store, self.scope('conv'), feature_dim, channels, kernel, strides, rng,
            separable=separable, dropout=dropout
        )]
        self.head = self.child(Linear(self.store, self.scope('head'), channels, vocab.num_classes, rng))

        logger.info(f'Built {kind} CTC model with {self.params.num_parameters()} parameters')

    @property
    def hidden_size(self) -> int:
        return self.channels

    def forward(self, x: np.ndarray, y: Optional[Sequence[int]] = None) -> ModelOutput:
        hidden = conv_stack(Tensor(np.asarray(x, dtype=np.float64)), self.blocks)
        grid = ops.log_softmax(self.head(hidden))
        return ModelOutput(grid=grid, hidden=hidden)

    def meta(self):
        meta = super().meta()
        meta.update({
            'channels': self.channels,
            'kernel': self.kernel,
            'separable': self.separable,
            'dropout': self.dropout,
        })
        return meta
