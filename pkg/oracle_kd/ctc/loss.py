import logging
import math
from typing import Sequence, Tuple

import numpy as np
from numba import njit
from scipy.special import logsumexp

from oracle_kd.autodiff.tensor import Tensor, as_tensor, record
from oracle_kd.ctc.alignment import enumerate_inverse, extend_with_blanks, is_feasible, repeat_count
from oracle_kd.ctc.vocab import Vocab
from oracle_kd.errors import DimensionError, InfeasibleAlignmentError, NumericError, UsageError

logger = logging.getLogger(__name__)

BRUTEFORCE_MAX_FRAMES = 8
BRUTEFORCE_MAX_LABELS = 4


@njit(cache=True)
def _lse(a, b):
    if a == -np.inf:
        return b
    if b == -np.inf:
        return a
    if a > b:
        return a + math.log1p(math.exp(b - a))
    return b + math.log1p(math.exp(a - b))


@njit(cache=True)
def _alpha(log_probs, ext, blank):
    frames = log_probs.shape[0]
    states = ext.shape[0]
    alpha = np.full((frames, states), -np.inf)
    alpha[0, 0] = log_probs[0, ext[0]]
    if states > 1:
        alpha[0, 1] = log_probs[0, ext[1]]

    for t in range(1, frames):
        for s in range(states):
            acc = alpha[t - 1, s]
            if s >= 1:
                acc = _lse(acc, alpha[t - 1, s - 1])
            if s >= 2 and ext[s] != blank and ext[s] != ext[s - 2]:
                acc = _lse(acc, alpha[t - 1, s - 2])
            if acc != -np.inf:
                alpha[t, s] = acc + log_probs[t, ext[s]]
    return alpha


@njit(cache=True)
def _beta(log_probs, ext, blank):
    frames = log_probs.shape[0]
    states = ext.shape[0]
    beta = np.full((frames, states), -np.inf)
    beta[frames - 1, states - 1] = log_probs[frames - 1, ext[states - 1]]
    if states > 1:
        beta[frames - 1, states - 2] = log_probs[frames - 1, ext[states - 2]]

    for t in range(frames - 2, -1, -1):
        for s in range(states):
            acc = beta[t + 1, s]
            if s + 1 < states:
                acc = _lse(acc, beta[t + 1, s + 1])
            if s + 2 < states and ext[s] != blank and ext[s] != ext[s + 2]:
                acc = _lse(acc, beta[t + 1, s + 2])
            if acc != -np.inf:
                beta[t, s] = acc + log_probs[t, ext[s]]
    return beta


def _check_grid(grid: np.ndarray, vocab: Vocab) -> np.ndarray:
    grid = np.asarray(grid, dtype=np.float64)
    if grid.ndim != 2 or grid.shape[1] != vocab.num_classes:
        raise DimensionError('ctc_loss', grid.shape, (grid.shape[0] if grid.ndim else 0, vocab.num_classes))
    return grid


def _check_feasible(y: Sequence[int], frames: int) -> None:
    if not is_feasible(y, frames):
        raise InfeasibleAlignmentError(frames, len(y), repeat_count(y))


def ctc_loss(grid: np.ndarray, y: Sequence[int], vocab: Vocab) -> Tuple[float, np.ndarray]:
    """Negative log-likelihood of `y` under a (T', |I'|) log-posterior grid.

    Forward-backward over the blank-interleaved label sequence, all in log
    space. The gradient is taken with respect to the grid entries
    themselves.
    """
    grid = _check_grid(grid, vocab)
    frames = grid.shape[0]
    _check_feasible(y, frames)

    if frames == 0:
        return 0.0, np.zeros_like(grid)

    ext = np.asarray(extend_with_blanks(y, vocab), dtype=np.int64)
    alpha = _alpha(grid, ext, vocab.blank)
    beta = _beta(grid, ext, vocab.blank)

    tail = alpha[-1, -2:] if ext.size > 1 else alpha[-1, -1:]
    log_likelihood = float(logsumexp(tail))
    if not np.isfinite(log_likelihood):
        raise NumericError('ctc_loss')

    # state occupancy, emission counted once; an impossible emission has none
    emit = grid[:, ext]
    with np.errstate(invalid='ignore', divide='ignore'):
        occupancy = np.where(np.isneginf(emit), -np.inf, alpha + beta - emit)
        grad = np.zeros_like(grid)
        for cls in np.unique(ext):
            cols = occupancy[:, ext == cls]
            grad[:, cls] = -np.exp(logsumexp(cols, axis=1) - log_likelihood)
    if not np.all(np.isfinite(grad)):
        raise NumericError('ctc_loss')

    return -log_likelihood, grad


def ctc_loss_bruteforce(grid: np.ndarray, y: Sequence[int], vocab: Vocab) -> float:
    """Same quantity as `ctc_loss`, by summing over every alignment in B^-1(y)."""
    grid = _check_grid(grid, vocab)
    frames = grid.shape[0]
    if frames > BRUTEFORCE_MAX_FRAMES or len(vocab) > BRUTEFORCE_MAX_LABELS:
        raise UsageError(
            f'brute-force CTC is limited to {BRUTEFORCE_MAX_FRAMES} frames and '
            f'{BRUTEFORCE_MAX_LABELS} labels, got {frames} and {len(vocab)}'
        )
    _check_feasible(y, frames)

    paths = sorted(enumerate_inverse(y, frames, vocab))
    steps = np.arange(frames)
    scores = [grid[steps, list(pi)].sum() for pi in paths]
    return -float(logsumexp(scores))


def ctc_loss_op(log_probs: Tensor, y: Sequence[int], vocab: Vocab) -> Tensor:
    """CTC loss as a primitive on the tape, differentiable in `log_probs`."""
    log_probs = as_tensor(log_probs)
    loss, grad = ctc_loss(log_probs.data, y, vocab)

    def backward(g):
        return (g * grad,)

    return record('ctc_loss', np.asarray(loss), (log_probs,), backward)
