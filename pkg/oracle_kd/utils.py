import hashlib
import logging
import os
import sys
from typing import Optional

import numpy as np
from threadpoolctl import threadpool_limits

logger = logging.getLogger(__name__)

THREADS_ENV = 'OTKD_THREADS'


def derive_seed(seed: int, label: str) -> int:
    """Seed for a named random stream; adding a stream never moves another."""
    digest = hashlib.blake2b(f'{int(seed)}/{label}'.encode('utf-8'), digest_size=16).digest()
    return int.from_bytes(digest, 'little')


def make_rng(seed: int, label: str) -> np.random.Generator:
    """Counter-based generator keyed by (seed, label)."""
    return np.random.Generator(np.random.Philox(key=derive_seed(seed, label)))


def limit_threads(threads: Optional[int] = None):
    """Cap BLAS/OpenMP pools; defaults to $OTKD_THREADS or 1."""
    if threads is None:
        threads = int(os.getenv(THREADS_ENV, '1'))
    logger.debug(f'Limiting native thread pools to {threads}')
    return threadpool_limits(limits=threads)


def progress_enabled() -> bool:
    return sys.stderr.isatty()
