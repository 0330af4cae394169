"""Seeded synthetic image data and the binary raster format.

Raster layout (little-endian): six int32 header fields ``magic, count,
classes, channels, height, width``, then ``count*channels*height*width``
float64 pixels in (N, C, H, W) order, then ``count`` int32 labels.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

RASTER_MAGIC = 0x44524153   # "SARD" read as little-endian bytes
_HEADER = struct.Struct("<6i")


@dataclass
class ImageDataset:
    x: np.ndarray            # (N, C, H, W) float64
    y: np.ndarray            # (N,) int64
    n_classes: int

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=np.float64)
        self.y = np.asarray(self.y, dtype=np.int64)
        if self.x.ndim != 4 or self.y.shape != (self.x.shape[0],):
            raise ValueError(f"inconsistent dataset shapes {self.x.shape} / {self.y.shape}")
        if self.y.size and (self.y.min() < 0 or self.y.max() >= self.n_classes):
            raise ValueError("labels outside [0, n_classes)")

    def __len__(self) -> int:
        return self.x.shape[0]

    @property
    def shape(self) -> tuple:
        return self.x.shape[1:]

    def subset(self, idx) -> "ImageDataset":
        return ImageDataset(self.x[idx], self.y[idx], self.n_classes)

    def split(self, seed: int = 0) -> tuple["ImageDataset", "ImageDataset"]:
        """Disjoint halves, stratified by class."""
        if len(self) < 2:
            raise ValueError("need at least two samples to split")
        rng = np.random.default_rng(seed)
        a, b = [], []
        for c in range(self.n_classes):
            idx = rng.permutation(np.flatnonzero(self.y == c))
            h = (len(idx) + 1) // 2
            a.extend(idx[:h])
            b.extend(idx[h:])
        return self.subset(np.sort(a)), self.subset(np.sort(b))

    def batches(self, batch_size: int, rng: np.random.Generator | None = None):
        order = np.arange(len(self)) if rng is None else rng.permutation(len(self))
        for s in range(0, len(self), batch_size):
            idx = order[s:s + batch_size]
            yield self.x[idx], self.y[idx]


def oriented_textures(n: int = 256, n_classes: int = 2, channels: int = 3, size: int = 8,
                      noise: float = 0.3, seed: int = 0) -> ImageDataset:
    """Class ``c`` is a sinusoidal grating at angle ``pi * c / n_classes``.

    Phase and frequency jitter vary per image; ``noise`` is the std of added
    Gaussian pixel noise.  Labels are balanced.
    """
    if n < 1 or n_classes < 1 or size < 2:
        raise ValueError("need n >= 1, n_classes >= 1, size >= 2")
    rng = np.random.default_rng(seed)
    y = np.arange(n) % n_classes
    rng.shuffle(y)
    theta = np.pi * y / n_classes + rng.normal(0, 0.05, n)
    freq = rng.uniform(0.18, 0.28, n)
    phase = rng.uniform(0, 2 * np.pi, n)
    r = np.arange(size) - (size - 1) / 2
    yy, xx = np.meshgrid(r, r, indexing="ij")
    proj = (np.cos(theta)[:, None, None] * xx + np.sin(theta)[:, None, None] * yy)
    base = np.sin(2 * np.pi * freq[:, None, None] * proj + phase[:, None, None])
    gain = rng.uniform(0.8, 1.2, (n, channels))
    x = gain[:, :, None, None] * base[:, None] + noise * rng.standard_normal((n, channels,
                                                                           size, size))
    return ImageDataset(x, y, n_classes)


def write_raster(ds: ImageDataset, path) -> None:
    n, c, h, w = ds.x.shape
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(RASTER_MAGIC, n, ds.n_classes, c, h, w))
        fh.write(ds.x.astype("<f8").tobytes())
        fh.write(ds.y.astype("<i4").tobytes())


def read_raster(path) -> ImageDataset:
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < _HEADER.size:
        raise ValueError("raster file too short for its header")
    magic, n, k, c, h, w = _HEADER.unpack_from(blob)
    if magic != RASTER_MAGIC:
        raise ValueError(f"bad raster magic {magic:#x}")
    if min(n, k, c, h, w) < 0:
        raise ValueError("negative raster dimension")
    npx = n * c * h * w
    expect = _HEADER.size + 8 * npx + 4 * n
    if len(blob) != expect:
        raise ValueError(f"raster size {len(blob)} bytes, expected {expect}")
    x = np.frombuffer(blob, "<f8", npx, _HEADER.size).reshape(n, c, h, w)
    y = np.frombuffer(blob, "<i4", n, _HEADER.size + 8 * npx)
    return ImageDataset(x.astype(np.float64), y.astype(np.int64), k)
