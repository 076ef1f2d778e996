"""OZMM binary matrix files.

Layout (little-endian): magic ``OZMM``, u32 version, u8 kind (0 FP64,
1 multi-word), u8 word count, u64 rows, u64 cols, then one row-major binary64
payload per word, most significant first.
"""
import struct
from typing import Union

import numpy as np

from ozmm.exceptions import MatrixFormatError
from ozmm.numeric import MatrixF64, MultiWordMatrix

MAGIC = b"OZMM"
VERSION = 1
KIND_FP64 = 0
KIND_MULTIWORD = 1
HEADER = struct.Struct("<4sIBBQQ")
PAYLOAD_DTYPE = np.dtype("<f8")


def dumps(X: Union[MatrixF64, MultiWordMatrix]) -> bytes:
    if isinstance(X, MatrixF64):
        kind, words = KIND_FP64, [X]
    elif isinstance(X, MultiWordMatrix):
        kind, words = KIND_MULTIWORD, list(X.words)
    else:
        raise MatrixFormatError(f"Cannot encode {type(X).__name__}.")
    rows, cols = words[0].shape
    header = HEADER.pack(MAGIC, VERSION, kind, len(words), rows, cols)
    return header + b"".join(
        np.ascontiguousarray(w.data, dtype=PAYLOAD_DTYPE).tobytes() for w in words
    )


def loads(buf: bytes) -> Union[MatrixF64, MultiWordMatrix]:
    try:
        magic, version, kind, v, rows, cols = HEADER.unpack_from(buf, 0)
    except struct.error as e:
        raise MatrixFormatError("Truncated OZMM header.") from e
    if magic != MAGIC:
        raise MatrixFormatError(f"Bad magic {magic!r}.")
    if version != VERSION:
        raise MatrixFormatError(f"Unsupported OZMM version {version}.")
    if kind not in (KIND_FP64, KIND_MULTIWORD):
        raise MatrixFormatError(f"Unknown matrix kind {kind}.")
    if v < 1 or (kind == KIND_FP64 and v != 1):
        raise MatrixFormatError(f"Word count {v} is invalid for kind {kind}.")

    count = rows * cols
    expected = HEADER.size + v * count * PAYLOAD_DTYPE.itemsize
    if len(buf) != expected:
        raise MatrixFormatError(
            f"Payload has {len(buf)} bytes, expected {expected} for {v}x{rows}x{cols}."
        )
    if count == 0:
        payload = np.zeros(0, dtype=PAYLOAD_DTYPE)
    else:
        payload = np.frombuffer(
            buf, dtype=PAYLOAD_DTYPE, count=v * count, offset=HEADER.size
        )
    words = [
        MatrixF64(payload[i * count : (i + 1) * count].reshape(rows, cols))
        for i in range(v)
    ]
    if kind == KIND_FP64:
        return words[0]
    return MultiWordMatrix(words)


def read_matrix(path) -> Union[MatrixF64, MultiWordMatrix]:
    try:
        with open(path, "rb") as f:
            return loads(f.read())
    except OSError as e:
        raise MatrixFormatError(f"Unable to read matrix file '{path}'.") from e


def write_matrix(path, X: Union[MatrixF64, MultiWordMatrix]) -> None:
    data = dumps(X)
    try:
        with open(path, "wb") as f:
            f.write(data)
    except OSError as e:
        raise MatrixFormatError(f"Unable to write matrix file '{path}'.") from e
