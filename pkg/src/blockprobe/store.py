"""Binary feature-store files.

Layout (all little-endian), documented in FORMATS.md:

    magic   4 bytes  b"VAFS"
    version u32      1
    block   u8
    dim     u32
    count   u64
    then `count` records of:
        id_len    u16, id_len bytes UTF-8
        label_len u16, label_len bytes UTF-8
        dim float32 values

Files are immutable once written; readers validate fully before returning.
"""

import struct
from pathlib import Path

import numpy as np

from .errors import (
    StoreDuplicateIdError,
    StoreMagicError,
    StoreTruncatedError,
    StoreValueError,
    StoreVersionError,
)
from .matrix import EmbeddingMatrix

MAGIC = b"VAFS"
VERSION = 1
_HEADER = struct.Struct("<4sIBIQ")

HEADER_SIZE = _HEADER.size  # 21


def write_store(matrix: EmbeddingMatrix, path) -> None:
    """Serialize ``matrix`` to ``path``. Rejects non-finite values."""
    if not (0 <= matrix.block_index <= 255):
        raise StoreValueError(f"block index {matrix.block_index} out of range")
    vectors = np.ascontiguousarray(matrix.vectors, dtype="<f4")
    if vectors.size and not np.isfinite(vectors).all():
        raise StoreValueError("refusing to write NaN/Inf values")
    parts = [_HEADER.pack(MAGIC, VERSION, matrix.block_index, matrix.dim, matrix.n)]
    for i in range(matrix.n):
        for text in (matrix.ids[i], matrix.labels[i]):
            raw = text.encode("utf-8")
            if len(raw) > 0xFFFF:
                raise StoreValueError(f"string too long: {text[:32]!r}...")
            parts.append(struct.pack("<H", len(raw)))
            parts.append(raw)
        parts.append(vectors[i].tobytes())
    Path(path).write_bytes(b"".join(parts))


def read_store(path) -> EmbeddingMatrix:
    """Read and fully validate a feature-store file."""
    data = Path(path).read_bytes()
    if len(data) < HEADER_SIZE:
        raise StoreTruncatedError(f"{path}: shorter than the {HEADER_SIZE}-byte header")
    magic, version, block_index, dim, count = _HEADER.unpack_from(data, 0)
    if magic != MAGIC:
        raise StoreMagicError(f"{path}: bad magic {magic!r}")
    if version != VERSION:
        raise StoreVersionError(f"{path}: unsupported version {version}")
    pos = HEADER_SIZE
    vec_bytes = 4 * dim
    ids: list[str] = []
    labels: list[str] = []
    vectors = np.empty((count, dim), dtype=np.float32)

    def take(n: int) -> bytes:
        nonlocal pos
        if pos + n > len(data):
            raise StoreTruncatedError(f"{path}: truncated mid-record at byte {pos}")
        chunk = data[pos : pos + n]
        pos += n
        return chunk

    for i in range(count):
        texts = []
        for _ in range(2):
            (length,) = struct.unpack("<H", take(2))
            texts.append(take(length).decode("utf-8"))
        ids.append(texts[0])
        labels.append(texts[1])
        vectors[i] = np.frombuffer(take(vec_bytes), dtype="<f4")
    if pos != len(data):
        raise StoreTruncatedError(f"{path}: {len(data) - pos} trailing bytes")
    if len(set(ids)) != count:
        raise StoreDuplicateIdError(f"{path}: duplicate image ids")
    if count and not np.isfinite(vectors).all():
        raise StoreValueError(f"{path}: non-finite values")
    return EmbeddingMatrix(
        block_index=block_index, ids=ids, labels=labels, vectors=vectors
    )
