import logging
from typing import Any, Dict, Optional

import numpy as np
from omegaconf import DictConfig

from oracle_kd.ctc.vocab import Vocab
from oracle_kd.errors import ConfigurationError, UsageError
from oracle_kd.models.base import MODEL_KINDS, CTCModel
from oracle_kd.models.checkpoint import load_checkpoint, load_meta, save_checkpoint, save_meta
from oracle_kd.models.oracle_teacher import INPUT_MODES, OracleTeacher
from oracle_kd.models.student import StudentCTC
from oracle_kd.utils import make_rng

logger = logging.getLogger(__name__)


def build_model(kind: str, cfg: DictConfig, seed: int, vocab: Optional[Vocab] = None) -> CTCModel:
    """Fresh model of `kind` from the run config, initialised from the `init/<kind>` stream."""
    if kind not in MODEL_KINDS:
        raise UsageError(f'unknown model kind: {kind}')
    vocab = vocab or Vocab.of_size(cfg.task.vocab_size, blank_last=cfg.model.blank_last)
    rng = make_rng(seed, f'init/{kind}')
    m = cfg.model
    if kind in INPUT_MODES:
        return OracleTeacher(vocab, cfg.task.feature_dim, rng, hidden=m.hidden, heads=m.heads, ff_dim=m.ff_dim,
                             kernel=m.kernel, strides=list(m.strides), encoder_layers=m.encoder_layers,
                             decoder_layers=m.decoder_layers, dropout=m.dropout, kind=kind)
    if kind == 'conventional':
        return StudentCTC(vocab, cfg.task.feature_dim, rng, channels=m.student_channels * m.conventional_scale,
                          kernel=m.kernel, strides=list(m.strides), separable=False, dropout=m.dropout,
                          kind='conventional')
    return StudentCTC(vocab, cfg.task.feature_dim, rng, channels=m.student_channels, kernel=m.kernel,
                      strides=list(m.strides), separable=m.student_separable, dropout=m.dropout, kind='student')


def model_from_meta(meta: Dict[str, Any]) -> CTCModel:
    kind = meta.get('kind')
    vocab = Vocab.of_size(meta['vocab_size'], blank_last=meta['blank_last'])
    rng = np.random.default_rng(0)
    if kind in INPUT_MODES:
        return OracleTeacher(vocab, meta['feature_dim'], rng, hidden=meta['hidden'], heads=meta['heads'],
                             ff_dim=meta['ff_dim'], kernel=meta['kernel'], strides=meta['strides'],
                             encoder_layers=meta['encoder_layers'], decoder_layers=meta['decoder_layers'],
                             dropout=meta['dropout'], kind=kind)
    if kind in ('student', 'conventional'):
        return StudentCTC(vocab, meta['feature_dim'], rng, channels=meta['channels'], kernel=meta['kernel'],
                          strides=meta['strides'], separable=meta['separable'], dropout=meta['dropout'], kind=kind)
    raise ConfigurationError(f'unknown model kind in metadata: {kind}')


def save_model(model: CTCModel, path: str) -> int:
    size = save_checkpoint(model.params, path)
    save_meta(model.meta(), path)
    return size


def load_model(path: str) -> CTCModel:
    model = model_from_meta(load_meta(path))
    store = load_checkpoint(path)
    if store.manifest() != model.params.manifest():
        raise ConfigurationError(f'{path}: parameters do not match the {model.kind} architecture in its metadata')
    model.params.assign(store.snapshot())
    return model
