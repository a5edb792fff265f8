"""Binary parameter checkpoints.

Layout (all integers u32 little-endian):
    b"OTKD" | version | entry count
    per entry: name length | UTF-8 name | rank | dims... | float32 LE values
Model metadata travels in a `<path>.yaml` sidecar next to the checkpoint.
"""
import logging
import os
from typing import Any, Dict, Tuple

import numpy as np
from omegaconf import OmegaConf

from oracle_kd.data.file_handler import U32, BinaryReader, float32_bytes, header, read_bytes, write_bytes
from oracle_kd.errors import ConfigurationError
from oracle_kd.models.parameter_store import ParameterStore

logger = logging.getLogger(__name__)

MAGIC = b'OTKD'
VERSION = 1


def encode_store(store: ParameterStore) -> bytes:
    parts = [header(MAGIC, VERSION, len(store))]
    for name, tensor in store.items():
        encoded = name.encode('utf-8')
        parts.append(U32.pack(len(encoded)))
        parts.append(encoded)
        parts.append(U32.pack(tensor.ndim))
        parts.extend(U32.pack(d) for d in tensor.shape)
        parts.append(float32_bytes(tensor.data))
    return b''.join(parts)


def decode_store(payload: bytes, path: str = '<bytes>') -> ParameterStore:
    reader = BinaryReader(payload, path)
    count = reader.header(MAGIC, VERSION)

    entries = []
    for _ in range(count):
        name = reader.take(reader.u32()).decode('utf-8')
        shape: Tuple[int, ...] = tuple(reader.u32() for _ in range(reader.u32()))
        size = int(np.prod(shape)) if shape else 1
        entries.append((name, reader.float32s(size).reshape(shape)))
    reader.finish()

    # built only once the whole file parsed
    store = ParameterStore()
    for name, values in entries:
        store.add(name, values)
    return store


def save_checkpoint(store: ParameterStore, path: str) -> int:
    size = write_bytes(encode_store(store), path)
    logger.info(f'Saved {len(store)} tensors ({size} bytes) to {path}')
    return size


def load_checkpoint(path: str) -> ParameterStore:
    return decode_store(read_bytes(path), path)


def meta_path(path: str) -> str:
    return f'{path}.yaml'


def save_meta(meta: Dict[str, Any], path: str) -> None:
    OmegaConf.save(OmegaConf.create(meta), meta_path(path))


def load_meta(path: str) -> Dict[str, Any]:
    if not os.path.exists(meta_path(path)):
        raise ConfigurationError(f'{path}: missing model metadata {meta_path(path)}')
    return OmegaConf.to_container(OmegaConf.load(meta_path(path)))
