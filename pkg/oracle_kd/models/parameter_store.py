from collections.abc import MutableMapping
from typing import Dict, Iterator, Mapping, Tuple

import numpy as np

from oracle_kd.autodiff.tensor import Tensor
from oracle_kd.errors import UsageError


class ParameterStore(MutableMapping):
    """Named, trainable tensors of one model, in insertion order."""

    def __init__(self):
        self._tensors: Dict[str, Tensor] = {}

    def __getitem__(self, name: str) -> Tensor:
        return self._tensors[name]

    def __setitem__(self, name: str, tensor: Tensor) -> None:
        if not isinstance(tensor, Tensor):
            tensor = Tensor(tensor)
        tensor.name = name
        tensor.requires_grad = True
        self._tensors[name] = tensor

    def __delitem__(self, name: str) -> None:
        del self._tensors[name]

    def __iter__(self) -> Iterator[str]:
        return iter(self._tensors)

    def __len__(self) -> int:
        return len(self._tensors)

    def add(self, name: str, value: np.ndarray) -> Tensor:
        if name in self._tensors:
            raise UsageError(f'parameter {name} already exists')
        self[name] = Tensor(np.array(value, dtype=np.float64))
        return self._tensors[name]

    def manifest(self) -> Dict[str, Tuple[int, ...]]:
        return {name: t.shape for name, t in self._tensors.items()}

    def num_parameters(self) -> int:
        return int(sum(t.size for t in self._tensors.values()))

    def snapshot(self) -> Dict[str, np.ndarray]:
        return {name: t.data.copy() for name, t in self._tensors.items()}

    def assign(self, values: Mapping[str, np.ndarray]) -> None:
        """Overwrite values in place; names and shapes must match exactly."""
        if set(values) != set(self._tensors):
            diff = sorted(set(values) ^ set(self._tensors))
            raise UsageError(f'parameter names differ: {diff[:5]}')
        for name, value in values.items():
            value = np.asarray(value, dtype=np.float64)
            if value.shape != self._tensors[name].shape:
                raise UsageError(f'{name}: shape {value.shape} does not match {self._tensors[name].shape}')
            self._tensors[name].data = value.copy()

    def subset(self, prefix: str) -> 'ParameterStore':
        """View of the parameters under `prefix.`; tensors are shared."""
        view = ParameterStore()
        for name, tensor in self._tensors.items():
            if name.startswith(prefix + '.'):
                view._tensors[name] = tensor
        return view
