from typing import List, Optional

import numpy as np

from oracle_kd.autodiff.tensor import Tensor
from oracle_kd.models.parameter_store import ParameterStore


def glorot(rng: np.random.Generator, shape, fan_in: int, fan_out: int) -> np.ndarray:
    return rng.normal(0.0, np.sqrt(2.0 / (fan_in + fan_out)), size=shape)


class Module:
    """Building block that owns a slice of a shared ParameterStore.

    Parameters are registered under `prefix.name`; child modules extend the
    prefix. `rng` is the dropout stream while training and None otherwise.
    """

    def __init__(self, store: ParameterStore, prefix: str):
        self.store = store
        self.prefix = prefix
        self.rng: Optional[np.random.Generator] = None
        self._children: List['Module'] = []

    def param(self, name: str, value: np.ndarray) -> Tensor:
        return self.store.add(f'{self.prefix}.{name}', value)

    def child(self, module: 'Module') -> 'Module':
        self._children.append(module)
        return module

    def scope(self, name: str) -> str:
        return f'{self.prefix}.{name}'

    def train(self, rng: Optional[np.random.Generator]) -> 'Module':
        self.rng = rng
        for c in self._children:
            c.train(rng)
        return self

    def eval(self) -> 'Module':
        return self.train(None)
