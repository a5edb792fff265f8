from typing import List

import numpy as np

from oracle_kd.ctc.alignment import LabelSeq, collapse
from oracle_kd.ctc.vocab import Vocab


def best_path(grid: np.ndarray) -> List[int]:
    """Frame-wise argmax; ties go to the lowest class index."""
    grid = np.asarray(grid)
    if grid.shape[0] == 0:
        return []
    return [int(c) for c in np.argmax(grid, axis=1)]


def greedy_decode(grid: np.ndarray, vocab: Vocab) -> LabelSeq:
    return collapse(best_path(grid), vocab)


def is_normalized(grid: np.ndarray, atol: float = 1e-9) -> bool:
    """Every frame of a log-posterior grid log-sum-exps to zero."""
    grid = np.asarray(grid, dtype=np.float64)
    if grid.shape[0] == 0:
        return True
    m = grid.max(axis=1, keepdims=True)
    lse = (m + np.log(np.exp(grid - m).sum(axis=1, keepdims=True))).ravel()
    return bool(np.all(np.abs(lse) <= atol))
