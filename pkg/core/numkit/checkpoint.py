"""
Single-file checkpoint container.

Layout (all integers little-endian)::

    b"CFXM" | u32 version | u32 metadata length | metadata (UTF-8 JSON)
    | u32 tensor count | per tensor: u32 name length, name (UTF-8),
      u32 rank, rank x u64 dims, float32 payload
"""

import json
import os
import struct
from pathlib import Path

import numpy as np

from core.exceptions import CheckpointError

MAGIC = b'CFXM'
FORMAT_VERSION = 1


def save_checkpoint(path, tensors, metadata=None):
    """
    Write named tensors and a JSON metadata header to ``path``.

    Args:
        path: destination file; written through a temporary file and renamed
        tensors (Mapping[str, ndarray]): payload in insertion order
        metadata (dict): model hyperparameters needed to rebuild the model
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)

    chunks = [MAGIC, struct.pack('<I', FORMAT_VERSION)]
    header = json.dumps(metadata or {}, sort_keys=True).encode('utf-8')
    chunks += [struct.pack('<I', len(header)), header, struct.pack('<I', len(tensors))]
    for name, array in tensors.items():
        encoded = name.encode('utf-8')
        array = np.ascontiguousarray(np.asarray(array, dtype='<f4'))
        chunks += [
            struct.pack('<I', len(encoded)), encoded,
            struct.pack('<I', array.ndim),
            struct.pack(f'<{array.ndim}Q', *array.shape),
            array.tobytes(order='C'),
        ]

    tmp = path.with_suffix(path.suffix + '.tmp')
    with open(tmp, 'wb') as handle:
        handle.write(b''.join(chunks))
    os.replace(tmp, path)


class _Reader:
    def __init__(self, payload, path):
        self.payload = payload
        self.offset = 0
        self.path = path

    def take(self, size):
        if self.offset + size > len(self.payload):
            raise CheckpointError(f"{self.path}: truncated at byte {self.offset}", code='truncated')
        chunk = self.payload[self.offset:self.offset + size]
        self.offset += size
        return chunk

    def unpack(self, fmt):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))


def load_checkpoint(path):
    """
    Read a container written by ``save_checkpoint``.

    Returns:
        tuple: (dict of name -> float32 ndarray, metadata dict)
    """
    path = Path(path)
    try:
        payload = path.read_bytes()
    except OSError as e:
        raise CheckpointError(f"cannot read checkpoint {path}: {e}", code='unreadable') from e

    reader = _Reader(payload, path)
    if reader.take(4) != MAGIC:
        raise CheckpointError(f"{path}: not a checkpoint container (bad magic)", code='bad_magic')
    (version,) = reader.unpack('<I')
    if version != FORMAT_VERSION:
        raise CheckpointError(f"{path}: unsupported format version {version}", code='bad_version')

    (header_len,) = reader.unpack('<I')
    try:
        metadata = json.loads(reader.take(header_len).decode('utf-8'))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise CheckpointError(f"{path}: corrupt metadata header", code='bad_metadata') from e

    (count,) = reader.unpack('<I')
    tensors = {}
    for _ in range(count):
        (name_len,) = reader.unpack('<I')
        name = reader.take(name_len).decode('utf-8')
        (rank,) = reader.unpack('<I')
        dims = reader.unpack(f'<{rank}Q') if rank else ()
        size = int(np.prod(dims)) if dims else 1
        data = np.frombuffer(reader.take(size * 4), dtype='<f4').astype(np.float32)
        tensors[name] = data.reshape(dims)

    if reader.offset != len(payload):
        raise CheckpointError(f"{path}: trailing bytes after tensor manifest", code='trailing')
    return tensors, metadata
