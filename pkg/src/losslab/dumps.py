"""Binary container for activation / score matrices with optional labels.

Layout, all little-endian:

    offset 0   magic   b"ACTDUMP\\n"
    offset 8   version uint32 (currently 1)
    offset 12  n       uint64 rows
    offset 20  d       uint64 columns
    offset 28  dtype   uint8: 4 = float32, 8 = float64 (bytes per value)
    offset 29  flags   uint8: bit0 set when int64 labels follow the matrix
    offset 30  matrix  n*d values, row-major
    then       labels  n int64 values when flags bit0 is set

Truncation errors report the byte offset where data ran out.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

MAGIC = b"ACTDUMP\n"
VERSION = 1
HEADER = struct.Struct("<8sIQQBB")


@dataclass
class ActivationDump:
    data: np.ndarray  # (n, d)
    labels: np.ndarray | None = None  # (n,) int64 or None

    def __post_init__(self):
        self.data = np.asarray(self.data)
        if self.data.ndim != 2:
            raise ValueError(f"dump data must be 2d, got shape {self.data.shape}")
        if self.labels is not None:
            self.labels = np.asarray(self.labels, dtype=np.int64)
            if self.labels.shape != (self.data.shape[0],):
                raise ValueError(
                    f"{self.labels.shape} labels for {self.data.shape[0]} rows"
                )


def write_activation_dump(path, data, labels=None, dtype="f8") -> None:
    dump = ActivationDump(np.asarray(data), labels)
    if dtype not in ("f4", "f8"):
        raise ValueError(f"dtype must be 'f4' or 'f8', got {dtype!r}")
    itemsize = 4 if dtype == "f4" else 8
    n, d = dump.data.shape
    flags = 1 if dump.labels is not None else 0
    with open(path, "wb") as fh:
        fh.write(HEADER.pack(MAGIC, VERSION, n, d, itemsize, flags))
        fh.write(np.ascontiguousarray(dump.data, dtype=f"<{dtype}").tobytes())
        if dump.labels is not None:
            fh.write(np.ascontiguousarray(dump.labels, dtype="<i8").tobytes())


def read_activation_dump(path) -> ActivationDump:
    raw = Path(path).read_bytes()
    if len(raw) < HEADER.size:
        raise ValueError(
            f"{path}: truncated at byte {len(raw)}: header needs {HEADER.size} bytes"
        )
    magic, version, n, d, itemsize, flags = HEADER.unpack_from(raw, 0)
    if magic != MAGIC:
        raise ValueError(f"{path}: bad magic {magic!r} at byte 0")
    if version != VERSION:
        raise ValueError(f"{path}: unsupported version {version}")
    if itemsize not in (4, 8):
        raise ValueError(f"{path}: bad dtype byte {itemsize} at byte 28")
    if flags not in (0, 1):
        raise ValueError(f"{path}: bad flags byte {flags} at byte 29")
    body = HEADER.size + n * d * itemsize
    if len(raw) < body:
        raise ValueError(
            f"{path}: truncated at byte {len(raw)}: matrix ends at byte {body}"
        )
    dt = "<f4" if itemsize == 4 else "<f8"
    data = np.frombuffer(raw[HEADER.size : body], dtype=dt).reshape(n, d)
    labels = None
    if flags & 1:
        end = body + n * 8
        if len(raw) < end:
            raise ValueError(
                f"{path}: truncated at byte {len(raw)}: labels end at byte {end}"
            )
        labels = np.frombuffer(raw[body:end], dtype="<i8").copy()
    return ActivationDump(data.astype(np.float64), labels)
