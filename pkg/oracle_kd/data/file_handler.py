"""Little-endian binary I/O shared by checkpoint and dataset files."""
import logging
import struct
from typing import List

import numpy as np

from oracle_kd.data.task import Sample
from oracle_kd.errors import BadMagicError, BadVersionError, TruncationError

logger = logging.getLogger(__name__)

U32 = struct.Struct('<I')

DATASET_MAGIC = b'OTDS'
DATASET_VERSION = 1


class BinaryReader:

    def __init__(self, payload: bytes, path: str = '<bytes>'):
        self.payload = payload
        self.path = path
        self.offset = 0

    def take(self, size: int) -> bytes:
        end = self.offset + size
        if end > len(self.payload):
            raise TruncationError(f'{self.path}: file ends at byte {len(self.payload)}, needed {end}')
        chunk = self.payload[self.offset:end]
        self.offset = end
        return chunk

    def u32(self) -> int:
        return U32.unpack(self.take(4))[0]

    def float32s(self, count: int) -> np.ndarray:
        return np.frombuffer(self.take(4 * count), dtype='<f4').astype(np.float64)

    def header(self, magic: bytes, version: int) -> int:
        """Check magic and version; return the entry count that follows."""
        found = self.take(len(magic))
        if found != magic:
            raise BadMagicError(f'{self.path}: expected magic {magic!r}, found {found!r}')
        found_version = self.u32()
        if found_version != version:
            raise BadVersionError(f'{self.path}: unsupported version {found_version} (expected {version})')
        return self.u32()

    def finish(self) -> None:
        if self.offset != len(self.payload):
            # a count field corrupted downward shows up here
            raise TruncationError(
                f'{self.path}: {len(self.payload) - self.offset} bytes past the last declared entry'
            )


def header(magic: bytes, version: int, count: int) -> bytes:
    return magic + U32.pack(version) + U32.pack(count)


def float32_bytes(values: np.ndarray) -> bytes:
    return np.ascontiguousarray(values, dtype='<f4').tobytes()


def read_bytes(path: str) -> bytes:
    with open(path, 'rb') as f:
        return f.read()


def write_bytes(payload: bytes, path: str) -> int:
    with open(path, 'wb') as f:
        f.write(payload)
    return len(payload)


def encode_dataset(samples: List[Sample]) -> bytes:
    parts = [header(DATASET_MAGIC, DATASET_VERSION, len(samples))]
    for sample in samples:
        x = np.asarray(sample.x)
        parts.append(U32.pack(sample.id))
        parts.append(U32.pack(len(sample.y)))
        parts.extend(U32.pack(int(t)) for t in sample.y)
        parts.append(U32.pack(x.shape[0]))
        parts.append(U32.pack(x.shape[1]))
        parts.append(float32_bytes(x))
    return b''.join(parts)


def decode_dataset(payload: bytes, path: str = '<bytes>') -> List[Sample]:
    reader = BinaryReader(payload, path)
    count = reader.header(DATASET_MAGIC, DATASET_VERSION)

    samples = []
    for _ in range(count):
        sample_id = reader.u32()
        y = [reader.u32() for _ in range(reader.u32())]
        frames, dim = reader.u32(), reader.u32()
        x = reader.float32s(frames * dim).reshape(frames, dim)
        samples.append(Sample(id=sample_id, x=x, y=y))

    reader.finish()
    return samples


def write_dataset(samples: List[Sample], path: str) -> int:
    size = write_bytes(encode_dataset(samples), path)
    logger.info(f'Wrote {len(samples)} samples ({size} bytes) to {path}')
    return size


def read_dataset(path: str) -> List[Sample]:
    samples = decode_dataset(read_bytes(path), path)
    logger.info(f'Read {len(samples)} samples from {path}')
    return samples
