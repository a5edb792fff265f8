from typing import Sequence

import numpy as np

from oracle_kd.autodiff.tensor import Tensor
from oracle_kd.autodiff.ops import stack_output_length
from oracle_kd.models.blocks import build_conv_blocks, conv_stack
from oracle_kd.models.module import Module
from oracle_kd.models.parameter_store import ParameterStore


class SourceNet(Module):
    """Convolutional front-end mapping source frames x to h^S."""

    def __init__(self, store: ParameterStore, prefix: str, feature_dim: int, channels: int, kernel: int,
                 strides: Sequence[int], rng: np.random.Generator, separable: bool = False, dropout: float = 0.0):
        super().__init__(store, prefix)
        self.channels = channels
        self.strides = list(strides)
        self.blocks = [self.child(b) for b in build_conv_blocks(
            store, prefix, feature_dim, channels, kernel, strides, rng, separable=separable, dropout=dropout
        )]

    def output_length(self, frames: int) -> int:
        return stack_output_length(frames, self.strides)

    def __call__(self, x: Tensor) -> Tensor:
        return conv_stack(x, self.blocks)
