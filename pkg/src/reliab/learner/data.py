"""Datasets: seeded Gaussian blobs and IDX (MNIST-family) files."""
from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import DomainError, FormatError

IDX_IMAGES_MAGIC = 0x00000803
IDX_LABELS_MAGIC = 0x00000801


@dataclass
class Dataset:
    inputs: np.ndarray
    labels: np.ndarray
    n_classes: int

    def __post_init__(self):
        self.inputs = np.asarray(self.inputs, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.inputs.ndim != 2:
            raise DomainError("inputs must be an (n, d) matrix")
        if self.labels.shape != (self.inputs.shape[0],):
            raise DomainError("need exactly one label per input row")
        if self.n_classes < 2:
            raise DomainError("n_classes must be >= 2")
        if self.labels.size and (self.labels.min() < 0 or self.labels.max() >= self.n_classes):
            raise DomainError("labels must lie in [0, n_classes)")
        if np.isnan(self.inputs).any():
            raise DomainError("inputs contain NaN")

    def __len__(self) -> int:
        return self.labels.shape[0]

    @property
    def dim(self) -> int:
        return self.inputs.shape[1]

    def subset(self, idx) -> Dataset:
        return Dataset(self.inputs[idx], self.labels[idx], self.n_classes)

    def copy(self) -> Dataset:
        return Dataset(self.inputs.copy(), self.labels.copy(), self.n_classes)


def make_blobs(seed: int, n: int, d: int, n_classes: int, spread: float,
               center_scale: float = 3.0) -> Dataset:
    """Isotropic Gaussian clusters, one per class, balanced to within one point."""
    if n_classes < 2:
        raise DomainError("n_classes must be >= 2")
    if spread < 0:
        raise DomainError("spread must be >= 0")
    rng = np.random.default_rng(seed)
    centers = rng.normal(0.0, center_scale, size=(n_classes, d))
    labels = rng.permutation(np.arange(n) % n_classes)
    inputs = centers[labels] + spread * rng.normal(size=(n, d))
    return Dataset(inputs, labels, n_classes)


def train_test_split(ds: Dataset, test_fraction: float, seed: int) -> tuple[Dataset, Dataset]:
    if not 0.0 < test_fraction < 1.0:
        raise DomainError("test_fraction must lie in (0, 1)")
    perm = np.random.default_rng(seed).permutation(len(ds))
    n_test = max(1, int(round(len(ds) * test_fraction)))
    return ds.subset(perm[n_test:]), ds.subset(perm[:n_test])


def _read_header(buf: bytes, path, want_magic: int, kind: str) -> tuple[int, ...]:
    if len(buf) < 4:
        raise FormatError(f"{path}: truncated file, missing magic number")
    (magic,) = struct.unpack(">I", buf[:4])
    if magic != want_magic:
        raise FormatError(f"{path}: wrong magic for {kind} (0x{magic:08x}, expected 0x{want_magic:08x})")
    ndim = magic & 0xFF
    if len(buf) < 4 + 4 * ndim:
        raise FormatError(f"{path}: truncated file, incomplete dimension header")
    return struct.unpack(f">{ndim}I", buf[4:4 + 4 * ndim])


def read_idx_images(path) -> np.ndarray:
    buf = Path(path).read_bytes()
    count, rows, cols = _read_header(buf, path, IDX_IMAGES_MAGIC, "images")
    body = buf[16:]
    need = count * rows * cols
    if len(body) != need:
        raise FormatError(f"{path}: truncated file, pixel payload has {len(body)} bytes, header declares {need}")
    pixels = np.frombuffer(body, dtype=np.uint8).reshape(count, rows * cols)
    return pixels.astype(np.float64) / 255.0


def read_idx_labels(path) -> np.ndarray:
    buf = Path(path).read_bytes()
    (count,) = _read_header(buf, path, IDX_LABELS_MAGIC, "labels")
    body = buf[8:]
    if len(body) != count:
        raise FormatError(f"{path}: truncated file, label payload has {len(body)} bytes, header declares {count}")
    return np.frombuffer(body, dtype=np.uint8).astype(np.int64)


def load_idx(images_path, labels_path, n_classes: int | None = None,
             limit: int | None = None) -> Dataset:
    images = read_idx_images(images_path)
    labels = read_idx_labels(labels_path)
    if images.shape[0] != labels.shape[0]:
        raise FormatError(f"count mismatch: {images.shape[0]} images vs {labels.shape[0]} labels")
    if limit is not None:
        images, labels = images[:limit], labels[:limit]
    k = n_classes if n_classes is not None else max(10, int(labels.max()) + 1 if labels.size else 2)
    return Dataset(images, labels, k)


def write_idx_images(path, images: np.ndarray) -> None:
    """Write an (n, rows, cols) uint8 array in IDX layout."""
    images = np.asarray(images, dtype=np.uint8)
    n, rows, cols = images.shape
    Path(path).write_bytes(struct.pack(">IIII", IDX_IMAGES_MAGIC, n, rows, cols) + images.tobytes())


def write_idx_labels(path, labels) -> None:
    labels = np.asarray(labels, dtype=np.uint8)
    Path(path).write_bytes(struct.pack(">II", IDX_LABELS_MAGIC, labels.shape[0]) + labels.tobytes())
