"""Datasets: Gaussian blob generator plus CSV and IDX loaders.

CSV rows are headerless ``label, feat_1, ..., feat_d``. IDX is the
big-endian binary format with magic 0x00000803 (images, rank 3) or
0x00000801 (labels, rank 1); rank-2+ payloads are flattened to rows.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np


@dataclass
class Batch:
    features: np.ndarray  # (n, d) float64
    labels: np.ndarray  # (n,) int64
    num_classes: int

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.features.ndim != 2:
            raise ValueError(f"features must be 2d, got {self.features.shape}")
        if self.labels.shape != (self.features.shape[0],):
            raise ValueError(
                f"{self.labels.shape[0] if self.labels.ndim == 1 else self.labels.shape} "
                f"labels for {self.features.shape[0]} rows"
            )
        if self.num_classes < 1:
            raise ValueError(f"num_classes must be >= 1, got {self.num_classes}")
        if self.labels.size and (
            self.labels.min() < 0 or self.labels.max() >= self.num_classes
        ):
            raise ValueError("labels out of range")

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def dim(self) -> int:
        return self.features.shape[1]


def make_blobs(
    n_per_class: int,
    num_classes: int,
    feature_dim: int,
    spread: float,
    seed: int,
) -> Batch:
    """Isotropic Gaussian blobs around standard-normal class means.

    spread=0 collapses every class onto its mean. Classes come out in label
    order (the trainer shuffles); balanced by construction.
    """
    if n_per_class < 1 or num_classes < 2 or feature_dim < 1:
        raise ValueError("need n_per_class >= 1, num_classes >= 2, feature_dim >= 1")
    if spread < 0:
        raise ValueError(f"spread must be >= 0, got {spread}")
    rng = np.random.default_rng(seed)
    means = rng.standard_normal((num_classes, feature_dim))
    feats = np.repeat(means, n_per_class, axis=0)
    feats = feats + spread * rng.standard_normal(feats.shape)
    labels = np.repeat(np.arange(num_classes, dtype=np.int64), n_per_class)
    return Batch(feats, labels, num_classes)


def make_blob_split(
    n_train_per_class: int,
    n_eval_per_class: int,
    num_classes: int,
    feature_dim: int,
    spread: float,
    seed: int,
) -> tuple:
    """(train, eval) blob batches drawn around one shared set of class means."""
    if n_train_per_class < 1 or n_eval_per_class < 1:
        raise ValueError("need >= 1 train and eval examples per class")
    total = n_train_per_class + n_eval_per_class
    full = make_blobs(total, num_classes, feature_dim, spread, seed)
    rows = np.arange(full.n).reshape(num_classes, total)
    tr = rows[:, :n_train_per_class].ravel()
    ev = rows[:, n_train_per_class:].ravel()
    return (
        Batch(full.features[tr], full.labels[tr], num_classes),
        Batch(full.features[ev], full.labels[ev], num_classes),
    )


def save_csv(batch: Batch, path) -> None:
    with open(path, "w") as fh:
        for i in range(batch.n):
            row = ",".join("%.17g" % v for v in batch.features[i])
            fh.write(f"{int(batch.labels[i])},{row}\n")


def load_csv(path, num_classes: int | None = None) -> Batch:
    labels = []
    rows = []
    width = None
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if width is None:
                width = len(parts)
                if width < 2:
                    raise ValueError(
                        f"{path}: line {lineno}: need label plus >= 1 feature"
                    )
            elif len(parts) != width:
                raise ValueError(
                    f"{path}: line {lineno}: expected {width} fields, got {len(parts)}"
                )
            try:
                lab = int(parts[0])
            except ValueError:
                raise ValueError(
                    f"{path}: line {lineno}: bad label {parts[0]!r}"
                ) from None
            try:
                feats = [float(v) for v in parts[1:]]
            except ValueError:
                raise ValueError(f"{path}: line {lineno}: bad feature value") from None
            if lab < 0:
                raise ValueError(f"{path}: line {lineno}: negative label")
            labels.append(lab)
            rows.append(feats)
    if not rows:
        raise ValueError(f"{path}: no data rows")
    labels = np.array(labels, dtype=np.int64)
    k = num_classes if num_classes is not None else int(labels.max()) + 1
    return Batch(np.array(rows), labels, k)


_IDX_DTYPES = {
    0x08: np.dtype(">u1"),
    0x09: np.dtype(">i1"),
    0x0B: np.dtype(">i2"),
    0x0C: np.dtype(">i4"),
    0x0D: np.dtype(">f4"),
    0x0E: np.dtype(">f8"),
}


def _read_idx(path) -> np.ndarray:
    raw = Path(path).read_bytes()
    if len(raw) < 4:
        raise ValueError(f"{path}: truncated at byte {len(raw)}: no magic")
    zero1, zero2, code, ndim = struct.unpack(">BBBB", raw[:4])
    if zero1 != 0 or zero2 != 0:
        raise ValueError(f"{path}: bad magic bytes {raw[:4]!r} at byte 0")
    if code not in _IDX_DTYPES:
        raise ValueError(f"{path}: unknown dtype code 0x{code:02x} at byte 2")
    header_end = 4 + 4 * ndim
    if len(raw) < header_end:
        raise ValueError(
            f"{path}: truncated at byte {len(raw)}: need {header_end} header bytes"
        )
    dims = struct.unpack(f">{ndim}I", raw[4:header_end])
    dtype = _IDX_DTYPES[code]
    count = int(np.prod(dims)) if dims else 1
    need = header_end + count * dtype.itemsize
    if len(raw) < need:
        raise ValueError(
            f"{path}: truncated at byte {len(raw)}: expected {need} bytes "
            f"for shape {dims}"
        )
    arr = np.frombuffer(raw[header_end:need], dtype=dtype).reshape(dims)
    return arr


def derive_idx_labels_path(images_path) -> Path:
    p = Path(images_path)
    name = p.name.replace("images", "labels").replace("idx3", "idx1")
    if name == p.name:
        raise ValueError(
            f"cannot derive a labels path from {p.name!r}; pass labels_path"
        )
    return p.with_name(name)


def load_idx(images_path, labels_path=None, num_classes: int | None = None) -> Batch:
    imgs = _read_idx(images_path)
    if imgs.ndim < 2:
        raise ValueError(f"{images_path}: rank-{imgs.ndim} payload is not features")
    if labels_path is None:
        labels_path = derive_idx_labels_path(images_path)
        if not Path(labels_path).exists():
            raise FileNotFoundError(
                f"derived labels file {labels_path} not found; pass labels_path"
            )
    labs = _read_idx(labels_path)
    if labs.ndim != 1:
        raise ValueError(f"{labels_path}: labels must be rank 1, got rank {labs.ndim}")
    if labs.shape[0] != imgs.shape[0]:
        raise ValueError(
            f"{labels_path}: {labs.shape[0]} labels for {imgs.shape[0]} rows"
        )
    feats = imgs.reshape(imgs.shape[0], -1).astype(np.float64)
    labs = labs.astype(np.int64)
    k = num_classes if num_classes is not None else int(labs.max()) + 1
    return Batch(feats, labs, k)


def load_dataset(path, fmt: str = "csv", labels_path=None,
                 num_classes: int | None = None) -> Batch:
    if fmt == "csv":
        return load_csv(path, num_classes)
    if fmt == "idx":
        return load_idx(path, labels_path, num_classes)
    raise ValueError(f"unknown dataset format {fmt!r}")
