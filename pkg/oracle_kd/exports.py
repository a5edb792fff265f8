"""CSV exports of posterior grids and cross-attention maps."""
import logging

import numpy as np
import pandas as pd

from oracle_kd.ctc.vocab import Vocab
from oracle_kd.errors import DimensionError

logger = logging.getLogger(__name__)

FLOAT_FORMAT = '%.6f'


def _write_csv(frame: pd.DataFrame, path: str) -> None:
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator='\n', encoding='utf-8')
    logger.info(f'Wrote {len(frame)} rows to {path}')


def posterior_table(grid: np.ndarray, vocab: Vocab) -> pd.DataFrame:
    """Per-frame probabilities; label classes in token order, then the blank."""
    grid = np.asarray(grid, dtype=np.float64)
    if grid.ndim != 2 or grid.shape[1] != vocab.num_classes:
        raise DimensionError('posterior heatmap', grid.shape, (grid.shape[0] if grid.ndim else 0, vocab.num_classes))

    probs = np.exp(grid)
    columns = {'frame': np.arange(grid.shape[0])}
    for token, cls in enumerate(vocab.label_classes()):
        columns[f'class_{token}'] = probs[:, cls]
    columns['blank'] = probs[:, vocab.blank]
    return pd.DataFrame(columns)


def export_posterior_heatmap(grid: np.ndarray, vocab: Vocab, path: str) -> None:
    _write_csv(posterior_table(grid, vocab), path)


def export_attention(weights: np.ndarray, path: str) -> None:
    """T' query rows by L+2 key columns (targets wrapped in begin/end tokens)."""
    weights = np.asarray(weights, dtype=np.float64)
    if weights.ndim != 2:
        raise DimensionError('attention export', weights.shape)
    frame = pd.DataFrame(weights, columns=[f'key_{k}' for k in range(weights.shape[1])])
    _write_csv(frame, path)


def blank_fraction_from_csv(path: str) -> float:
    """Share of heatmap rows whose most probable column is the blank."""
    table = pd.read_csv(path)
    probs = table.drop(columns=['frame'])
    if probs.empty:
        return 0.0
    return float((probs.idxmax(axis=1) == 'blank').mean())
