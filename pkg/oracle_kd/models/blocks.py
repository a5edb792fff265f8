import logging
import math
from typing import List, Optional, Sequence, Tuple

import numpy as np

from oracle_kd.autodiff import ops
from oracle_kd.autodiff.tensor import Tensor, as_tensor
from oracle_kd.errors import DimensionError, UsageError
from oracle_kd.models.module import Module, glorot
from oracle_kd.models.parameter_store import ParameterStore

logger = logging.getLogger(__name__)

MASK_VALUE = -1e9


class Linear(Module):

    def __init__(self, store: ParameterStore, prefix: str, d_in: int, d_out: int, rng: np.random.Generator,
                 bias: bool = True, scale: float = 1.0):
        super().__init__(store, prefix)
        self.d_in = d_in
        self.d_out = d_out
        self.weight = self.param('weight', scale * glorot(rng, (d_in, d_out), d_in, d_out))
        self.bias = self.param('bias', np.zeros(d_out)) if bias else None

    def __call__(self, x: Tensor) -> Tensor:
        if x.shape[-1] != self.d_in:
            raise DimensionError(self.prefix, x.shape, self.weight.shape)
        out = ops.matmul(x, self.weight)
        return out if self.bias is None else ops.add(out, self.bias)


class Embedding(Module):

    def __init__(self, store: ParameterStore, prefix: str, rows: int, width: int, rng: np.random.Generator):
        super().__init__(store, prefix)
        self.table = self.param('table', rng.normal(0.0, width ** -0.5, size=(rows, width)))

    def __call__(self, tokens: Sequence[int]) -> Tensor:
        return embed(tokens, self.table)


class LayerNorm(Module):

    def __init__(self, store: ParameterStore, prefix: str, width: int):
        super().__init__(store, prefix)
        self.gamma = self.param('gamma', np.ones(width))
        self.beta = self.param('beta', np.zeros(width))

    def __call__(self, x: Tensor) -> Tensor:
        return ops.layer_norm(x, self.gamma, self.beta)


def embed(tokens: Sequence[int], table: Tensor) -> Tensor:
    """Row gather; an empty sequence gives a 0 x H tensor."""
    return ops.embedding(table, tokens)


def sinusoidal_positions(length: int, width: int, base: float = 10000.0) -> np.ndarray:
    if width % 2:
        raise UsageError(f'sinusoidal positions need an even width, got {width}')
    positions = np.arange(length, dtype=np.float64)[:, None]
    freqs = base ** (-np.arange(0, width, 2, dtype=np.float64) / width)
    table = np.zeros((length, width))
    table[:, 0::2] = np.sin(positions * freqs)
    table[:, 1::2] = np.cos(positions * freqs)
    return table


def attention(query: Tensor, key: Tensor, value: Tensor, heads: int = 1,
              mask: Optional[np.ndarray] = None) -> Tuple[Tensor, np.ndarray]:
    """Multi-head scaled dot-product attention without projections.

    `mask` is boolean (T_q, T_k), True where a key must be ignored. There is
    no causal masking. Returns the (T_q, H) output and the (heads, T_q, T_k)
    weights.
    """
    query, key, value = as_tensor(query), as_tensor(key), as_tensor(value)
    if query.ndim != 2 or key.ndim != 2 or value.ndim != 2:
        raise DimensionError('attention', query.shape, key.shape, value.shape)
    if not (query.shape[1] == key.shape[1] == value.shape[1]) or key.shape[0] != value.shape[0]:
        raise DimensionError('attention', query.shape, key.shape, value.shape)

    t_q, width = query.shape
    t_k = key.shape[0]
    if width % heads:
        raise DimensionError('attention', (width,), (heads,))
    if t_k == 0:
        raise UsageError('attention over an empty key sequence')
    d_head = width // heads

    q = ops.transpose(ops.reshape(query, (t_q, heads, d_head)), (1, 0, 2))
    k_t = ops.transpose(ops.reshape(key, (t_k, heads, d_head)), (1, 2, 0))
    v = ops.transpose(ops.reshape(value, (t_k, heads, d_head)), (1, 0, 2))

    scores = ops.div_scalar(ops.matmul(q, k_t), math.sqrt(d_head))
    if mask is not None:
        mask = np.asarray(mask, dtype=bool)
        if mask.shape != (t_q, t_k):
            raise DimensionError('attention mask', mask.shape, (t_q, t_k))
        if mask.all(axis=1).any():
            raise UsageError('attention mask leaves a query position with no visible key')
        scores = ops.masked_fill(scores, np.broadcast_to(mask, scores.shape), MASK_VALUE)

    weights = ops.softmax(scores)
    out = ops.matmul(weights, v)
    out = ops.reshape(ops.transpose(out, (1, 0, 2)), (t_q, width))
    return out, weights.data


class MultiHeadAttention(Module):

    def __init__(self, store: ParameterStore, prefix: str, width: int, heads: int, rng: np.random.Generator):
        super().__init__(store, prefix)
        if width % heads:
            raise UsageError(f'width {width} is not divisible by {heads} heads')
        self.heads = heads
        self.query = self.child(Linear(store, self.scope('query'), width, width, rng))
        self.key = self.child(Linear(store, self.scope('key'), width, width, rng))
        self.value = self.child(Linear(store, self.scope('value'), width, width, rng))
        self.output = self.child(Linear(store, self.scope('output'), width, width, rng))

    def __call__(self, query: Tensor, memory: Tensor, mask: Optional[np.ndarray] = None
                 ) -> Tuple[Tensor, np.ndarray]:
        out, weights = attention(self.query(query), self.key(memory), self.value(memory), self.heads, mask)
        return self.output(out), weights


class FeedForward(Module):

    def __init__(self, store: ParameterStore, prefix: str, width: int, ff_dim: int, rng: np.random.Generator,
                 dropout: float = 0.0):
        super().__init__(store, prefix)
        self.inner = self.child(Linear(store, self.scope('inner'), width, ff_dim, rng))
        self.outer = self.child(Linear(store, self.scope('outer'), ff_dim, width, rng))
        self.dropout = dropout

    def __call__(self, x: Tensor) -> Tensor:
        return self.outer(ops.dropout(ops.relu(self.inner(x)), self.dropout, self.rng))


class EncoderLayer(Module):
    """Pre-norm Transformer encoder layer."""

    def __init__(self, store: ParameterStore, prefix: str, width: int, heads: int, ff_dim: int,
                 rng: np.random.Generator, dropout: float = 0.0):
        super().__init__(store, prefix)
        self.norm_attn = self.child(LayerNorm(store, self.scope('norm_attn'), width))
        self.self_attn = self.child(MultiHeadAttention(store, self.scope('self_attn'), width, heads, rng))
        self.norm_ff = self.child(LayerNorm(store, self.scope('norm_ff'), width))
        self.ff = self.child(FeedForward(store, self.scope('ff'), width, ff_dim, rng, dropout))
        self.dropout = dropout

    def __call__(self, x: Tensor, mask: Optional[np.ndarray] = None) -> Tensor:
        if x.shape[0] == 0:
            raise UsageError('the encoder needs at least one input position')
        h = self.norm_attn(x)
        attended, _ = self.self_attn(h, h, mask)
        x = ops.add(x, ops.dropout(attended, self.dropout, self.rng))
        return ops.add(x, ops.dropout(self.ff(self.norm_ff(x)), self.dropout, self.rng))


class DecoderLayer(Module):
    """Pre-norm decoder layer with no look-ahead mask.

    Self attention runs over the source frames; their output queries the
    encoded targets through cross attention.
    """

    def __init__(self, store: ParameterStore, prefix: str, width: int, heads: int, ff_dim: int,
                 rng: np.random.Generator, dropout: float = 0.0):
        super().__init__(store, prefix)
        self.norm_self = self.child(LayerNorm(store, self.scope('norm_self'), width))
        self.self_attn = self.child(MultiHeadAttention(store, self.scope('self_attn'), width, heads, rng))
        self.norm_cross = self.child(LayerNorm(store, self.scope('norm_cross'), width))
        self.cross_attn = self.child(MultiHeadAttention(store, self.scope('cross_attn'), width, heads, rng))
        self.norm_ff = self.child(LayerNorm(store, self.scope('norm_ff'), width))
        self.ff = self.child(FeedForward(store, self.scope('ff'), width, ff_dim, rng, dropout))
        self.dropout = dropout

    def __call__(self, x: Tensor, memory: Tensor) -> Tuple[Tensor, np.ndarray]:
        h = self.norm_self(x)
        attended, _ = self.self_attn(h, h)
        x = ops.add(x, ops.dropout(attended, self.dropout, self.rng))

        crossed, weights = self.cross_attn(self.norm_cross(x), memory)
        x = ops.add(x, ops.dropout(crossed, self.dropout, self.rng))

        x = ops.add(x, ops.dropout(self.ff(self.norm_ff(x)), self.dropout, self.rng))
        return x, weights


ACTIVATIONS = {
    'relu': ops.relu,
    'tanh': ops.tanh,
}


class ConvBlock(Module):
    """Conv1d (optionally depthwise-separable) -> layer norm -> activation -> dropout."""

    def __init__(self, store: ParameterStore, prefix: str, in_channels: int, out_channels: int, kernel: int,
                 stride: int, rng: np.random.Generator, separable: bool = False,
                 activation: Optional[str] = 'relu', norm: bool = True, dropout: float = 0.0):
        super().__init__(store, prefix)
        if kernel < 1 or stride < 1:
            raise UsageError(f'{prefix}: kernel and stride must be positive')
        if activation is not None and activation not in ACTIVATIONS:
            raise UsageError(f'{prefix}: unknown activation {activation}')

        self.in_channels = in_channels
        self.out_channels = out_channels
        self.kernel = kernel
        self.stride = stride
        self.separable = separable
        self.activation = activation
        self.dropout = dropout

        if separable:
            self.depthwise = self.param('depthwise', glorot(rng, (in_channels, 1, kernel), kernel, kernel))
            self.weight = self.param('weight', glorot(rng, (out_channels, in_channels, 1), in_channels, out_channels))
        else:
            fan_in = in_channels * kernel
            self.depthwise = None
            self.weight = self.param('weight', glorot(rng, (out_channels, in_channels, kernel), fan_in, out_channels))
        self.bias = self.param('bias', np.zeros(out_channels))
        self.norm = self.child(LayerNorm(store, self.scope('norm'), out_channels)) if norm else None

    def output_length(self, length: int) -> int:
        return ops.conv_output_length(length, self.stride)

    def __call__(self, x: Tensor) -> Tensor:
        if x.shape[-1] != self.in_channels:
            raise DimensionError(self.prefix, x.shape, (x.shape[0], self.in_channels))
        if self.separable:
            x = ops.conv1d(x, self.depthwise, stride=self.stride, groups=self.in_channels)
            x = ops.conv1d(x, self.weight, self.bias)
        else:
            x = ops.conv1d(x, self.weight, self.bias, stride=self.stride)
        if self.norm is not None:
            x = self.norm(x)
        if self.activation is not None:
            x = ACTIVATIONS[self.activation](x)
        return ops.dropout(x, self.dropout, self.rng)


def conv_stack(x: Tensor, blocks: Sequence[ConvBlock]) -> Tensor:
    for previous, block in zip(blocks, blocks[1:]):
        if previous.out_channels != block.in_channels:
            raise DimensionError('conv_stack', (previous.out_channels,), (block.in_channels,))
    for block in blocks:
        x = block(x)
    return x


def build_conv_blocks(store: ParameterStore, prefix: str, in_channels: int, channels: int, kernel: int,
                      strides: Sequence[int], rng: np.random.Generator, separable: bool = False,
                      dropout: float = 0.0) -> List[ConvBlock]:
    blocks = []
    width = in_channels
    for i, stride in enumerate(strides):
        # first block stays dense over the raw features
        blocks.append(ConvBlock(store, f'{prefix}.{i}', width, channels, kernel, stride, rng,
                                separable=separable and i > 0, dropout=dropout))
        width = channels
    return blocks
