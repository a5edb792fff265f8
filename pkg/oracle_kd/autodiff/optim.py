import logging
from typing import Dict, Mapping, MutableMapping, Optional, Tuple

import numpy as np

from oracle_kd.autodiff.tensor import Tensor
from oracle_kd.errors import UsageError

logger = logging.getLogger(__name__)

Grads = Mapping[str, np.ndarray]


def clip_grad_norm(grads: Grads, max_norm: float) -> Tuple[Dict[str, np.ndarray], float]:
    total = float(np.sqrt(sum(float((g ** 2).sum()) for g in grads.values())))
    if max_norm <= 0 or total <= max_norm:
        return dict(grads), total
    scale = max_norm / (total + 1e-12)
    return {n: g * scale for n, g in grads.items()}, total


class NoamSchedule:
    """Warmup then inverse-square-root decay, as used for Transformer training."""

    def __init__(self, d_model: int, warmup: int, factor: float = 1.0):
        self.d_model = d_model
        self.warmup = max(1, warmup)
        self.factor = factor

    def __call__(self, step: int) -> float:
        step = max(1, step)
        return self.factor * self.d_model ** -0.5 * min(step ** -0.5, step * self.warmup ** -1.5)


class Optimizer:

    def __init__(self, lr: float, weight_decay: float = 0.0, schedule: Optional[NoamSchedule] = None):
        self.lr = lr
        self.weight_decay = weight_decay
        self.schedule = schedule
        self.step_count = 0
        self.state: Dict[str, Dict[str, np.ndarray]] = {}

    def current_lr(self) -> float:
        if self.schedule is None:
            return self.lr
        return self.schedule(self.step_count)

    def step(self, params: MutableMapping[str, Tensor], grads: Grads) -> MutableMapping[str, Tensor]:
        """Advance one step; parameter tensors get fresh data arrays."""
        if set(params.keys()) != set(grads.keys()):
            missing = sorted(set(params) ^ set(grads))
            raise UsageError(f'gradient keys do not match parameters: {missing[:5]}')

        self.step_count += 1
        lr = self.current_lr()
        for name, param in params.items():
            g = np.asarray(grads[name], dtype=np.float64)
            if g.shape != param.shape:
                raise UsageError(f'gradient for {name} has shape {g.shape}, parameter has {param.shape}')
            param.data = self._update(name, param.data, g, lr)
        return params

    def _update(self, name: str, value: np.ndarray, grad: np.ndarray, lr: float) -> np.ndarray:
        raise NotImplementedError


class SGD(Optimizer):

    def __init__(self, lr: float, momentum: float = 0.0, weight_decay: float = 0.0,
                 schedule: Optional[NoamSchedule] = None):
        super().__init__(lr, weight_decay, schedule)
        self.momentum = momentum

    def _update(self, name, value, grad, lr):
        if self.weight_decay:
            grad = grad + self.weight_decay * value
        if self.momentum:
            state = self.state.setdefault(name, {'velocity': np.zeros_like(value)})
            state['velocity'] = self.momentum * state['velocity'] + grad
            grad = state['velocity']
        return value - lr * grad


class Adam(Optimizer):
    """Adam moments with decoupled weight decay (AdamW when weight_decay > 0)."""

    def __init__(self, lr: float, betas: Tuple[float, float] = (0.9, 0.999), eps: float = 1e-8,
                 weight_decay: float = 0.0, schedule: Optional[NoamSchedule] = None):
        super().__init__(lr, weight_decay, schedule)
        self.betas = betas
        self.eps = eps

    def _update(self, name, value, grad, lr):
        beta1, beta2 = self.betas
        state = self.state.setdefault(name, {'m': np.zeros_like(value), 'v': np.zeros_like(value)})
        state['m'] = beta1 * state['m'] + (1.0 - beta1) * grad
        state['v'] = beta2 * state['v'] + (1.0 - beta2) * grad ** 2

        m_hat = state['m'] / (1.0 - beta1 ** self.step_count)
        v_hat = state['v'] / (1.0 - beta2 ** self.step_count)

        if self.weight_decay:
            value = value - lr * self.weight_decay * value
        return value - lr * m_hat / (np.sqrt(v_hat) + self.eps)


def make_optimizer(name: str, lr: float, momentum: float = 0.0, weight_decay: float = 0.0,
                   betas: Tuple[float, float] = (0.9, 0.999), eps: float = 1e-8,
                   schedule: Optional[NoamSchedule] = None) -> Optimizer:
    if name == 'sgd':
        return SGD(lr, momentum=momentum, weight_decay=weight_decay, schedule=schedule)
    if name == 'adam':
        return Adam(lr, betas=betas, eps=eps, weight_decay=weight_decay, schedule=schedule)
    raise UsageError(f'unknown optimizer: {name}')
