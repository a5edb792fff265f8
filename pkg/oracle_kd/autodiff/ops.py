"""Differentiable primitives.

Every function takes Tensors (or plain numbers/arrays, treated as
constants), computes the forward value with numpy in float64 and records a
backward closure on the active tape. Broadcasting is limited to equal
shapes, scalars and trailing-dimension matches.
"""
import math
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.special import logsumexp

from oracle_kd.autodiff.tensor import Tensor, as_tensor, record
from oracle_kd.errors import DimensionError, UsageError

Operand = Union[Tensor, np.ndarray, float, int]


def _is_scalar(shape: Tuple[int, ...]) -> bool:
    return int(np.prod(shape)) == 1 and len(shape) <= 1


def _broadcast_shape(op: str, a: Tuple[int, ...], b: Tuple[int, ...]) -> Tuple[int, ...]:
    if a == b:
        return a
    if _is_scalar(b):
        return a
    if _is_scalar(a):
        return b
    if len(b) < len(a) and a[len(a) - len(b):] == b:
        return a
    if len(a) < len(b) and b[len(b) - len(a):] == a:
        return b
    raise DimensionError(op, a, b)


def _unbroadcast(grad: np.ndarray, shape: Tuple[int, ...]) -> np.ndarray:
    if grad.shape == shape:
        return grad
    if _is_scalar(shape):
        return np.asarray(grad.sum()).reshape(shape)
    lead = grad.ndim - len(shape)
    return grad.sum(axis=tuple(range(lead)))


def _binary(op: str, a: Operand, b: Operand):
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape(op, a.shape, b.shape)
    return a, b


def add(a: Operand, b: Operand) -> Tensor:
    a, b = _binary('add', a, b)

    def backward(g):
        return _unbroadcast(g, a.shape), _unbroadcast(g, b.shape)

    return record('add', a.data + b.data, (a, b), backward)


def sub(a: Operand, b: Operand) -> Tensor:
    a, b = _binary('sub', a, b)

    def backward(g):
        return _unbroadcast(g, a.shape), -_unbroadcast(g, b.shape)

    return record('sub', a.data - b.data, (a, b), backward)


def mul(a: Operand, b: Operand) -> Tensor:
    a, b = _binary('mul', a, b)

    def backward(g):
        return _unbroadcast(g * b.data, a.shape), _unbroadcast(g * a.data, b.shape)

    return record('mul', a.data * b.data, (a, b), backward)


def div_scalar(a: Operand, scalar: float) -> Tensor:
    a = as_tensor(a)
    if isinstance(scalar, Tensor):
        raise UsageError('div-by-scalar takes a plain number as divisor')
    scalar = float(scalar)
    if scalar == 0.0:
        raise UsageError('div-by-scalar: division by zero')

    def backward(g):
        return (g / scalar,)

    return record('div-by-scalar', a.data / scalar, (a,), backward)


def matmul(a: Operand, b: Operand) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    if a.ndim < 2 or b.ndim < 2 or a.shape[-1] != b.shape[-2]:
        raise DimensionError('matmul', a.shape, b.shape)
    if b.ndim > 2 and a.shape[:-2] != b.shape[:-2]:
        raise DimensionError('matmul', a.shape, b.shape)

    def backward(g):
        ga = g @ np.swapaxes(b.data, -1, -2)
        gb = np.swapaxes(a.data, -1, -2) @ g
        if b.ndim == 2 and gb.ndim > 2:
            gb = gb.reshape(-1, *b.shape).sum(axis=0)
        return ga, gb

    return record('matmul', a.data @ b.data, (a, b), backward)


def exp(a: Operand) -> Tensor:
    a = as_tensor(a)
    out = np.exp(a.data)

    def backward(g):
        return (g * out,)

    return record('exp', out, (a,), backward)


def log(a: Operand) -> Tensor:
    a = as_tensor(a)
    with np.errstate(divide='ignore', invalid='ignore'):
        out = np.log(a.data)

    def backward(g):
        return (g / a.data,)

    return record('log', out, (a,), backward)


def tanh(a: Operand) -> Tensor:
    a = as_tensor(a)
    out = np.tanh(a.data)

    def backward(g):
        return (g * (1.0 - out ** 2),)

    return record('tanh', out, (a,), backward)


def relu(a: Operand) -> Tensor:
    a = as_tensor(a)
    mask = a.data > 0

    def backward(g):
        return (g * mask,)

    return record('relu', a.data * mask, (a,), backward)


def softmax(a: Operand) -> Tensor:
    a = as_tensor(a)
    shifted = a.data - a.data.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    out = e / e.sum(axis=-1, keepdims=True)

    def backward(g):
        return (out * (g - (g * out).sum(axis=-1, keepdims=True)),)

    return record('softmax-lastdim', out, (a,), backward)


def log_softmax(a: Operand) -> Tensor:
    a = as_tensor(a)
    out = a.data - logsumexp(a.data, axis=-1, keepdims=True)
    probs = np.exp(out)

    def backward(g):
        return (g - probs * g.sum(axis=-1, keepdims=True),)

    return record('log-softmax-lastdim', out, (a,), backward)


def layer_norm(a: Operand, gamma: Operand, beta: Operand, eps: float = 1e-5) -> Tensor:
    a, gamma, beta = as_tensor(a), as_tensor(gamma), as_tensor(beta)
    width = a.shape[-1]
    if gamma.shape != (width,) or beta.shape != (width,):
        raise DimensionError('layernorm-lastdim', a.shape, gamma.shape, beta.shape)

    mu = a.data.mean(axis=-1, keepdims=True)
    centered = a.data - mu
    inv_std = 1.0 / np.sqrt((centered ** 2).mean(axis=-1, keepdims=True) + eps)
    x_hat = centered * inv_std

    def backward(g):
        g_hat = g * gamma.data
        g_a = inv_std * (
            g_hat
            - g_hat.mean(axis=-1, keepdims=True)
            - x_hat * (g_hat * x_hat).mean(axis=-1, keepdims=True)
        )
        lead = tuple(range(g.ndim - 1))
        return g_a, (g * x_hat).sum(axis=lead), g.sum(axis=lead)

    return record('layernorm-lastdim', x_hat * gamma.data + beta.data, (a, gamma, beta), backward)


def sum_(a: Operand, axis: Optional[Union[int, Tuple[int, ...]]] = None, keepdims: bool = False) -> Tensor:
    a = as_tensor(a)
    out = a.data.sum(axis=axis, keepdims=keepdims)

    def backward(g):
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, a.shape).copy(),)

    return record('sum', np.asarray(out), (a,), backward)


def mean(a: Operand, axis: Optional[Union[int, Tuple[int, ...]]] = None, keepdims: bool = False) -> Tensor:
    a = as_tensor(a)
    count = a.size if axis is None else int(np.prod([a.shape[i] for i in np.atleast_1d(axis)]))
    if count == 0:
        raise UsageError(f'mean over an empty extent of shape {a.shape}')
    out = a.data.mean(axis=axis, keepdims=keepdims)

    def backward(g):
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g / count, a.shape).copy(),)

    return record('mean', np.asarray(out), (a,), backward)


def transpose(a: Operand, axes: Optional[Sequence[int]] = None) -> Tensor:
    a = as_tensor(a)
    if axes is None:
        axes = tuple(range(a.ndim))[::-1]
    axes = tuple(axes)
    inverse = tuple(np.argsort(axes))

    def backward(g):
        return (np.transpose(g, inverse),)

    return record('transpose', np.transpose(a.data, axes), (a,), backward)


def reshape(a: Operand, shape: Sequence[int]) -> Tensor:
    a = as_tensor(a)
    try:
        out = a.data.reshape(tuple(shape))
    except ValueError:
        raise DimensionError('reshape', a.shape, tuple(shape)) from None

    def backward(g):
        return (g.reshape(a.shape),)

    return record('reshape', out, (a,), backward)


def concat(tensors: Sequence[Operand], axis: int = 0) -> Tensor:
    tensors = [as_tensor(t) for t in tensors]
    if not tensors:
        raise UsageError('concat needs at least one tensor')
    ref = list(tensors[0].shape)
    for t in tensors[1:]:
        other = list(t.shape)
        if len(other) != len(ref) or any(o != r for i, (o, r) in enumerate(zip(other, ref)) if i != axis % len(ref)):
            raise DimensionError('concat', tensors[0].shape, t.shape)

    bounds = np.cumsum([t.shape[axis] for t in tensors])[:-1]

    def backward(g):
        return tuple(np.split(g, bounds, axis=axis))

    return record('concat', np.concatenate([t.data for t in tensors], axis=axis), tensors, backward)


def slice_(a: Operand, index) -> Tensor:
    """Basic (int/slice) indexing."""
    a = as_tensor(a)
    parts = index if isinstance(index, tuple) else (index,)
    if any(not isinstance(p, (int, np.integer, slice, type(Ellipsis))) for p in parts):
        raise UsageError('slice supports integers and slices only')
    out = a.data[index]

    def backward(g):
        full = np.zeros_like(a.data)
        full[index] = g
        return (full,)

    return record('slice', np.array(out), (a,), backward)


def embedding(table: Operand, tokens: Sequence[int]) -> Tensor:
    table = as_tensor(table)
    idx = np.asarray(tokens, dtype=np.int64).reshape(-1)
    if idx.size and (idx.min() < 0 or idx.max() >= table.shape[0]):
        raise UsageError(f'embedding: token out of range for a table with {table.shape[0]} rows')

    def backward(g):
        full = np.zeros_like(table.data)
        np.add.at(full, idx, g)
        return (full,)

    return record('embedding-gather', table.data[idx].reshape(idx.size, table.shape[1]), (table,), backward)


def conv_output_length(length: int, stride: int) -> int:
    return math.ceil(length / stride)


def conv1d(x: Operand, weight: Operand, bias: Optional[Operand] = None, stride: int = 1, groups: int = 1) -> Tensor:
    """1-D convolution over a (T, C_in) sequence.

    `weight` is (C_out, C_in / groups, K). Padding is floor(K / 2) zeros on
    both sides and the output has ceil(T / stride) frames.
    """
    x, weight = as_tensor(x), as_tensor(weight)
    if x.ndim != 2 or weight.ndim != 3:
        raise DimensionError('conv1d', x.shape, weight.shape)

    length, c_in = x.shape
    c_out, c_group, kernel = weight.shape
    if stride < 1 or groups < 1 or c_in % groups or c_out % groups or c_in // groups != c_group:
        raise DimensionError('conv1d', x.shape, weight.shape)

    inputs: List[Tensor] = [x, weight]
    if bias is not None:
        bias = as_tensor(bias)
        if bias.shape != (c_out,):
            raise DimensionError('conv1d', weight.shape, bias.shape)
        inputs.append(bias)

    pad = kernel // 2
    out_len = conv_output_length(length, stride)
    padded = np.pad(x.data, ((pad, pad), (0, 0)))
    # (T_out, C_in, K) windows, strided
    cols = sliding_window_view(padded, kernel, axis=0)[::stride][:out_len]
    cols_g = cols.reshape(out_len, groups, c_group, kernel)
    w_g = weight.data.reshape(groups, c_out // groups, c_group, kernel)

    out = np.einsum('tgik,goik->tgo', cols_g, w_g).reshape(out_len, c_out)
    if bias is not None:
        out = out + bias.data

    def backward(g):
        g_g = g.reshape(out_len, groups, c_out // groups)
        g_w = np.einsum('tgo,tgik->goik', g_g, cols_g).reshape(weight.shape)
        g_cols = np.einsum('tgo,goik->tgik', g_g, w_g).reshape(out_len, c_in, kernel)
        g_padded = np.zeros_like(padded)
        for k in range(kernel):
            rows = np.arange(out_len) * stride + k
            np.add.at(g_padded, rows, g_cols[:, :, k])
        g_x = g_padded[pad:pad + length]
        grads = [g_x, g_w]
        if bias is not None:
            grads.append(g.sum(axis=0))
        return grads

    return record('conv1d', out, inputs, backward)


def masked_fill(a: Operand, mask: np.ndarray, value: float) -> Tensor:
    a = as_tensor(a)
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != a.shape:
        raise DimensionError('masked-fill', a.shape, mask.shape)

    def backward(g):
        return (np.where(mask, 0.0, g),)

    return record('masked-fill', np.where(mask, value, a.data), (a,), backward)


def dropout(a: Operand, p: float, rng: Optional[np.random.Generator]) -> Tensor:
    a = as_tensor(a)
    if p <= 0.0 or rng is None:
        return a
    if p >= 1.0:
        raise UsageError(f'dropout probability must be < 1, got {p}')
    keep = (rng.random(a.shape) >= p) / (1.0 - p)
    return mul(a, keep)


def stack_output_length(length: int, strides: Sequence[int]) -> int:
    for stride in strides:
        length = conv_output_length(length, stride)
    return length
