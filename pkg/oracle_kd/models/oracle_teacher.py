import logging
from typing import Optional, Sequence

import numpy as np

from oracle_kd.autodiff import ops
from oracle_kd.autodiff.tensor import Tensor
from oracle_kd.ctc.alignment import is_feasible, repeat_count
from oracle_kd.ctc.vocab import Vocab
from oracle_kd.errors import InfeasibleAlignmentError, UsageError
from oracle_kd.models.base import CTCModel, ModelOutput
from oracle_kd.models.blocks import DecoderLayer, Embedding, EncoderLayer, LayerNorm, Linear, sinusoidal_positions
from oracle_kd.models.source_net import SourceNet

logger = logging.getLogger(__name__)

INPUT_MODES = {
    'oracle': 'full',
    'oracle_wo_target': 'wo_target',
    'oracle_wo_source': 'wo_source',
}


class OracleTeacher(CTCModel):
    """Teacher reading both the source frames and the target labels.

    h^S = SourceNet(x), h^E = Encoder(BOS y EOS), and a non-autoregressive
    decoder whose self attention runs over h^S and whose cross attention
    reads h^E. The output grid therefore has |h^S| frames whatever |y| is.
    """

    scope_name = 'oracle'
    needs_target = True

    def __init__(self, vocab: Vocab, feature_dim: int, rng: np.random.Generator, hidden: int = 32,
                 heads: int = 2, ff_dim: int = 64, kernel: int = 5, strides: Sequence[int] = (1, 2, 1, 2),
                 encoder_layers: int = 2, decoder_layers: int = 2, dropout: float = 0.0, kind: str = 'oracle'):
        if kind not in INPUT_MODES:
            raise UsageError(f'unknown oracle teacher kind: {kind}')
        self.kind = kind
        super().__init__(vocab, feature_dim, strides)
        self.input_mode = INPUT_MODES[kind]
        self.hidden = hidden
        self.heads = heads
        self.ff_dim = ff_dim
        self.kernel = kernel
        self.dropout = dropout
        self.bos = len(vocab)
        self.eos = len(vocab) + 1

        self.source_net = self.child(SourceNet(self.store, self.scope('source_net'), feature_dim, hidden, kernel,
                                               strides, rng, dropout=dropout))
        self.embedding = self.child(Embedding(self.store, self.scope('embedding'), len(vocab) + 2, hidden, rng))
        self.encoder = [
            self.child(EncoderLayer(self.store, self.scope(f'encoder.{i}'), hidden, heads, ff_dim, rng, dropout))
            for i in range(encoder_layers)
        ]
        self.encoder_norm = self.child(LayerNorm(self.store, self.scope('encoder_norm'), hidden))
        self.decoder = [
            self.child(DecoderLayer(self.store, self.scope(f'decoder.{i}'), hidden, heads, ff_dim, rng, dropout))
            for i in range(decoder_layers)
        ]
        self.head_norm = self.child(LayerNorm(self.store, self.scope('head_norm'), hidden))
        self.head = self.child(Linear(self.store, self.scope('head'), hidden, vocab.num_classes, rng))

        logger.info(f'Built {kind} teacher with {self.params.num_parameters()} parameters')

    @property
    def hidden_size(self) -> int:
        return self.hidden

    def wrap_target(self, y: Sequence[int]) -> list:
        return [self.bos] + [int(t) for t in y] + [self.eos]

    def encode_target(self, y: Sequence[int]) -> Tensor:
        tokens = self.wrap_target(y)
        if self.input_mode == 'wo_target':
            embedded = Tensor(np.zeros((len(tokens), self.hidden)))
        else:
            embedded = self.embedding(tokens)
        h = ops.add(embedded, sinusoidal_positions(len(tokens), self.hidden))
        for layer in self.encoder:
            h = layer(h)
        return self.encoder_norm(h)

    def encode_source(self, x: np.ndarray) -> Tensor:
        x = np.asarray(x, dtype=np.float64)
        if self.input_mode == 'wo_source':
            x = np.zeros_like(x)
        h = self.source_net(Tensor(x))
        return ops.add(h, sinusoidal_positions(h.shape[0], self.hidden))

    def forward(self, x: np.ndarray, y: Optional[Sequence[int]] = None) -> ModelOutput:
        if y is None:
            raise UsageError('the oracle teacher needs the target sequence as input')
        frames = self.output_length(len(x))
        if not is_feasible(y, frames):
            raise InfeasibleAlignmentError(frames, len(y), repeat_count(y))

        memory = self.encode_target(y)
        h = self.encode_source(x)
        weights = None
        for layer in self.decoder:
            h, weights = layer(h, memory)

        logits = self.head(self.head_norm(h))
        grid = ops.log_softmax(logits)
        attention = weights.mean(axis=0) if weights is not None else None
        return ModelOutput(grid=grid, hidden=h, attention=attention)

    def meta(self):
        meta = super().meta()
        meta.update({
            'hidden': self.hidden,
            'heads': self.heads,
            'ff_dim': self.ff_dim,
            'kernel': self.kernel,
            'encoder_layers': len(self.encoder),
            'decoder_layers': len(self.decoder),
            'dropout': self.dropout,
        })
        return meta
