import contextvars
import logging
from contextlib import contextmanager
from dataclasses import dataclass
from typing import Callable, Dict, Iterable, Iterator, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from oracle_kd.errors import NumericError, UsageError

logger = logging.getLogger(__name__)

ArrayLike = Union[np.ndarray, float, int, Sequence[float]]
BackwardFn = Callable[[np.ndarray], Sequence[Optional[np.ndarray]]]

_active_tape: contextvars.ContextVar = contextvars.ContextVar('oracle_kd_active_tape', default=None)


class Tensor:
    """Dense float64 array with an optional name and gradient flag.

    Leaves are created directly; every other tensor is the output of a
    primitive in `oracle_kd.autodiff.ops`. Data is never mutated by ops.
    """

    __array_priority__ = 100

    def __init__(self, data: ArrayLike, requires_grad: bool = False, name: Optional[str] = None):
        self.data = np.asarray(data, dtype=np.float64)
        self.requires_grad = requires_grad
        self.name = name

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        return float(self.data.reshape(-1)[0]) if self.data.size == 1 else float(self.data)

    def detach(self) -> 'Tensor':
        return Tensor(self.data, requires_grad=False)

    def __repr__(self) -> str:
        label = f', name={self.name!r}' if self.name else ''
        return f'Tensor(shape={self.shape}, requires_grad={self.requires_grad}{label})'

    def __len__(self) -> int:
        return self.data.shape[0]

    # operator sugar; the primitives live in ops
    def __add__(self, other):
        from oracle_kd.autodiff import ops
        return ops.add(self, other)

    def __radd__(self, other):
        from oracle_kd.autodiff import ops
        return ops.add(other, self)

    def __sub__(self, other):
        from oracle_kd.autodiff import ops
        return ops.sub(self, other)

    def __rsub__(self, other):
        from oracle_kd.autodiff import ops
        return ops.sub(other, self)

    def __mul__(self, other):
        from oracle_kd.autodiff import ops
        return ops.mul(self, other)

    def __rmul__(self, other):
        from oracle_kd.autodiff import ops
        return ops.mul(other, self)

    def __neg__(self):
        from oracle_kd.autodiff import ops
        return ops.mul(self, -1.0)

    def __truediv__(self, other):
        from oracle_kd.autodiff import ops
        return ops.div_scalar(self, other)

    def __matmul__(self, other):
        from oracle_kd.autodiff import ops
        return ops.matmul(self, other)

    def __getitem__(self, index):
        from oracle_kd.autodiff import ops
        return ops.slice_(self, index)

    @property
    def T(self) -> 'Tensor':
        from oracle_kd.autodiff import ops
        return ops.transpose(self)

    def reshape(self, *shape) -> 'Tensor':
        from oracle_kd.autodiff import ops
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return ops.reshape(self, shape)

    def sum(self, axis=None, keepdims: bool = False) -> 'Tensor':
        from oracle_kd.autodiff import ops
        return ops.sum_(self, axis=axis, keepdims=keepdims)

    def mean(self, axis=None, keepdims: bool = False) -> 'Tensor':
        from oracle_kd.autodiff import ops
        return ops.mean(self, axis=axis, keepdims=keepdims)


def as_tensor(value: Union[Tensor, ArrayLike]) -> Tensor:
    if isinstance(value, Tensor):
        return value
    return Tensor(value)


@dataclass(frozen=True)
class Record:
    op: str
    inputs: Tuple[Tensor, ...]
    output: Tensor
    backward: BackwardFn


class Tape:
    """Append-only log of the primitives executed while it is active.

    Used as a context manager; ops record onto the innermost active tape
    whenever one of their inputs requires a gradient. A tape belongs to a
    single forward/backward pass and is bound to the current context, so
    concurrent passes in other threads never see it.
    """

    def __init__(self):
        self.records: List[Record] = []
        self._token = None

    def __enter__(self) -> 'Tape':
        self._token = _active_tape.set(self)
        return self

    def __exit__(self, *exc) -> None:
        _active_tape.reset(self._token)
        self._token = None

    def __len__(self) -> int:
        return len(self.records)

    def append(self, record: Record) -> None:
        self.records.append(record)

    def leaves(self) -> Iterator[Tensor]:
        produced = {id(r.output) for r in self.records}
        seen = set()
        for record in self.records:
            for tensor in record.inputs:
                if tensor.requires_grad and id(tensor) not in produced and id(tensor) not in seen:
                    seen.add(id(tensor))
                    yield tensor

    def backward(self, loss: Tensor, leaves: Optional[Union[Mapping[str, Tensor], Iterable[Tensor]]] = None
                 ) -> Dict[str, np.ndarray]:
        return backward(self, loss, leaves)


def current_tape() -> Optional[Tape]:
    return _active_tape.get()


@contextmanager
def no_grad() -> Iterator[None]:
    token = _active_tape.set(None)
    try:
        yield
    finally:
        _active_tape.reset(token)


def record(op: str, data: np.ndarray, inputs: Sequence[Tensor], backward_fn: BackwardFn) -> Tensor:
    """Wrap the raw result of a primitive and log it on the active tape."""
    if not np.all(np.isfinite(data)):
        raise NumericError(op)

    tape = current_tape()
    needs_grad = tape is not None and any(t.requires_grad for t in inputs)
    out = Tensor(data, requires_grad=needs_grad)

    if needs_grad:
        tape.append(Record(op, tuple(inputs), out, backward_fn))

    return out


def backward(tape: Tape, loss: Tensor, leaves: Optional[Union[Mapping[str, Tensor], Iterable[Tensor]]] = None
             ) -> Dict[str, np.ndarray]:
    """Reverse-mode sweep over `tape` starting from a scalar `loss`.

    Returns a gradient per leaf, keyed by leaf name. When `leaves` is given
    (a ParameterStore or any name -> Tensor mapping, or named tensors) every
    one of them gets an entry, zero if the loss does not depend on it;
    otherwise all named leaves found on the tape are reported.
    """
    if loss.size != 1:
        raise UsageError(f'backward needs a scalar loss, got shape {loss.shape}')

    if leaves is None:
        targets = list(tape.leaves())
    elif isinstance(leaves, Mapping):
        targets = list(leaves.values())
    else:
        targets = list(leaves)

    grads: Dict[int, np.ndarray] = {id(loss): np.ones_like(loss.data)}

    for rec in reversed(tape.records):
        g_out = grads.pop(id(rec.output), None)
        if g_out is None:
            continue

        for tensor, g_in in zip(rec.inputs, rec.backward(g_out)):
            if g_in is None or not tensor.requires_grad:
                continue
            key = id(tensor)
            if key in grads:
                grads[key] = grads[key] + g_in
            else:
                grads[key] = g_in

    table: Dict[str, np.ndarray] = {}
    for i, leaf in enumerate(targets):
        name = leaf.name if leaf.name is not None else f'leaf_{i}'
        g = grads.get(id(leaf))
        table[name] = np.zeros_like(leaf.data) if g is None else np.asarray(g, dtype=np.float64).reshape(leaf.shape)

    return table
