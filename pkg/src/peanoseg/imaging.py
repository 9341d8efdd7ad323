"""Image and label I/O, synthetic scenes, noise and scoring.

Files are 8-bit PGM (ASCII P2 or binary P5); float observation fields can
additionally round-trip through .npy.  Class labels run 1..K, with class i
rendered at intensity round(255 (i-1) / (K-1)).
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import permutations
from pathlib import Path

import numpy as np

from .scan import GridShape

_PERMUTATION_LIMIT = 8


class BadFormat(ValueError):
    """Unreadable or unsupported image file."""


class BadShape(ValueError):
    """Image is not a square power-of-two grid (and cropping is off)."""


class TooManyLevels(ValueError):
    """More distinct intensities than classes."""


class TooManyClasses(ValueError):
    """Class count beyond the permutation-scoring bound."""


@dataclass(frozen=True)
class LabelImage:
    """Row-major class labels in 1..n_classes on a square grid."""

    shape: GridShape
    labels: np.ndarray
    n_classes: int

    def grid(self) -> np.ndarray:
        return self.labels.reshape(self.shape.side, self.shape.side)


@dataclass(frozen=True)
class ObservedImage:
    """Row-major real-valued observations on a square grid."""

    shape: GridShape
    values: np.ndarray

    def grid(self) -> np.ndarray:
        return self.values.reshape(self.shape.side, self.shape.side)


# ---------------------------------------------------------------------------
# PGM / npy I/O

def _next_token(data: bytes, pos: int) -> tuple[bytes, int]:
    n = len(data)
    while pos < n:
        c = data[pos:pos + 1]
        if c == b"#":
            nl = data.find(b"\n", pos)
            pos = n if nl < 0 else nl + 1
        elif c.isspace():
            pos += 1
        else:
            break
    start = pos
    while pos < n and not data[pos:pos + 1].isspace() and data[pos:pos + 1] != b"#":
        pos += 1
    if start == pos:
        raise BadFormat("truncated PGM header")
    return data[start:pos], pos


def _read_pgm(path) -> np.ndarray:
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise BadFormat(f"cannot read {path}: {exc}") from exc
    magic = data[:2]
    if magic not in (b"P2", b"P5"):
        raise BadFormat(f"{path}: not a P2/P5 PGM file")
    pos = 2
    header = []
    for _ in range(3):
        tok, pos = _next_token(data, pos)
        try:
            header.append(int(tok))
        except ValueError as exc:
            raise BadFormat(f"{path}: bad PGM header token {tok!r}") from exc
    width, height, maxval = header
    if width < 1 or height < 1:
        raise BadFormat(f"{path}: empty image")
    if not 1 <= maxval <= 255:
        raise BadFormat(f"{path}: only 8-bit PGM supported (maxval {maxval})")
    count = width * height
    if magic == b"P5":
        pos += 1  # single whitespace byte after maxval
        raster = np.frombuffer(data, dtype=np.uint8, count=-1, offset=pos)
        if raster.size < count:
            raise BadFormat(f"{path}: truncated raster")
        raster = raster[:count].astype(np.int64)
    else:
        try:
            raster = np.array(data[pos:].split(), dtype=np.int64)
        except ValueError as exc:
            raise BadFormat(f"{path}: bad ASCII raster") from exc
        if raster.size != count:
            raise BadFormat(f"{path}: expected {count} samples, found {raster.size}")
    if raster.min() < 0 or raster.max() > maxval:
        raise BadFormat(f"{path}: sample out of range 0..{maxval}")
    return raster.reshape(height, width)


def _to_square_pow2(arr: np.ndarray, crop: bool) -> np.ndarray:
    h, w = arr.shape
    if crop:
        side = 1 << (min(h, w).bit_length() - 1)
        r0 = (h - side) // 2
        c0 = (w - side) // 2
        return arr[r0:r0 + side, c0:c0 + side]
    if h != w or h & (h - 1) != 0:
        raise BadShape(f"image is {h}x{w}, need a square power-of-two side"
                       " (pass crop to center-crop)")
    return arr


def _shape_of(arr: np.ndarray) -> GridShape:
    return GridShape.from_order(arr.shape[0].bit_length() - 1)


def load_grayscale(path, crop: bool = False) -> ObservedImage:
    """Read a grayscale PGM as real observations in [0, 255].

    Without crop the image must be square with a power-of-two side; with
    crop it is center-cropped to the largest conforming square.
    """
    arr = _to_square_pow2(_read_pgm(path), crop).astype(np.float64)
    return ObservedImage(_shape_of(arr), np.ascontiguousarray(arr.ravel()))


def load_observed(path, crop: bool = False) -> ObservedImage:
    """Read observations from .npy (exact floats) or PGM."""
    if str(path).endswith(".npy"):
        arr = np.load(path)
        if arr.ndim == 1:
            side = int(round(np.sqrt(arr.size)))
            arr = arr.reshape(side, -1) if side * side == arr.size else arr[None, :]
        if arr.ndim != 2:
            raise BadFormat(f"{path}: expected a 2-D array")
        arr = _to_square_pow2(arr.astype(np.float64), crop)
        if not np.all(np.isfinite(arr)):
            raise BadFormat(f"{path}: non-finite values")
        return ObservedImage(_shape_of(arr), np.ascontiguousarray(arr.ravel()))
    return load_grayscale(path, crop)


def save_observed(obs: ObservedImage, path) -> None:
    """Write observations: .npy keeps exact floats, .pgm rescales to 0..255."""
    if str(path).endswith(".npy"):
        np.save(path, obs.grid())
        return
    grid = obs.grid()
    lo, hi = grid.min(), grid.max()
    span = hi - lo if hi > lo else 1.0
    _write_pgm(np.round((grid - lo) / span * 255.0).astype(np.uint8), path)


def load_labels(path, n_classes: int) -> LabelImage:
    """Read a PGM label map, mapping distinct intensities to classes 1..K
    by ascending value."""
    arr = _to_square_pow2(_read_pgm(path), crop=False)
    distinct = np.unique(arr)
    if distinct.size > n_classes:
        raise TooManyLevels(
            f"{path}: {distinct.size} intensity levels for {n_classes} classes")
    labels = np.searchsorted(distinct, arr).astype(np.int64) + 1
    return LabelImage(_shape_of(arr), np.ascontiguousarray(labels.ravel()), n_classes)


def count_levels(path) -> int:
    """Number of distinct intensities in a PGM (class count for eval)."""
    return int(np.unique(_read_pgm(path)).size)


def _write_pgm(grid: np.ndarray, path) -> None:
    header = f"P5\n{grid.shape[1]} {grid.shape[0]}\n255\n".encode("ascii")
    Path(path).write_bytes(header + grid.astype(np.uint8).tobytes())


def save_segmentation(labels: LabelImage, path) -> None:
    """Write a label map as binary PGM, classes spread over 0..255."""
    k = labels.n_classes
    if k == 1:
        inten = np.zeros(labels.labels.size, dtype=np.uint8)
    else:
        inten = np.round(255.0 * (labels.labels - 1) / (k - 1)).astype(np.uint8)
    _write_pgm(inten.reshape(labels.shape.side, labels.shape.side), path)


# ---------------------------------------------------------------------------
# synthetic scenes, noise, scoring

def synth_noise(truth: LabelImage, means, variances, seed) -> ObservedImage:
    """Independent Gaussian observations around each pixel's class mean.

    Variances below the sampling floor of 1e-6 are lifted to it;
    deterministic for a fixed seed.
    """
    means = np.asarray(means, dtype=np.float64)
    variances = np.asarray(variances, dtype=np.float64)
    if means.size != truth.n_classes or variances.size != truth.n_classes:
        raise ValueError("means/variances must have one entry per class")
    rng = np.random.default_rng(seed)
    idx = truth.labels - 1
    values = rng.normal(means[idx], np.sqrt(np.maximum(variances, 1e-6))[idx])
    return ObservedImage(truth.shape, values)


def error_rate(truth: LabelImage, predicted: LabelImage) -> float:
    """Mismatch fraction minimized over all class permutations."""
    if truth.shape != predicted.shape:
        raise ValueError("images differ in shape")
    k = max(truth.n_classes, predicted.n_classes)
    if k > _PERMUTATION_LIMIT:
        raise TooManyClasses(f"permutation scoring bounded at {_PERMUTATION_LIMIT} classes")
    conf = np.bincount((truth.labels - 1) * k + (predicted.labels - 1),
                       minlength=k * k).reshape(k, k)
    best = max(sum(conf[perm[j], j] for j in range(k))
               for perm in permutations(range(k)))
    return 1.0 - best / truth.labels.size


def stripes(k: int, width: int, n_classes: int = 2) -> LabelImage:
    """Horizontal bands of the given width, cycling the classes."""
    shape = GridShape.from_order(k)
    rows = (np.arange(shape.side) // width) % n_classes
    labels = np.repeat(rows + 1, shape.side).astype(np.int64)
    return LabelImage(shape, labels, n_classes)


def rings(k: int, width: int, n_classes: int = 2) -> LabelImage:
    """Concentric square rings of the given thickness."""
    shape = GridShape.from_order(k)
    r = np.arange(shape.side, dtype=np.float64)
    center = (shape.side - 1) / 2.0
    cheb = np.maximum(np.abs(r[:, None] - center), np.abs(r[None, :] - center))
    labels = ((cheb // width).astype(np.int64) % n_classes) + 1
    return LabelImage(shape, np.ascontiguousarray(labels.ravel()), n_classes)


def blocks_and_stripes(k: int, stripe_width: int = 2, n_classes: int = 2) -> LabelImage:
    """Two large blocks over thin stripes: wide areas plus fine detail."""
    shape = GridShape.from_order(k)
    side = shape.side
    grid = np.ones((side, side), dtype=np.int64)
    grid[:side // 2, side // 2:] = 2
    rows = (np.arange(side - side // 2) // stripe_width) % n_classes
    grid[side // 2:, :] = (rows + 1)[:, None]
    return LabelImage(shape, np.ascontiguousarray(grid.ravel()), n_classes)


def random_walks(k: int, seed: int = 0, n_walks: int = 6, n_classes: int = 2) -> LabelImage:
    """One-pixel random-walk scribbles over a blocky background."""
    shape = GridShape.from_order(k)
    side = shape.side
    rng = np.random.default_rng(seed)
    grid = np.ones((side, side), dtype=np.int64)
    grid[:side // 2, :side // 2] = 2
    moves = np.array([(-1, 0), (1, 0), (0, -1), (0, 1)])
    for w in range(n_walks):
        cls = 2 - (w % n_classes) if n_classes == 2 else (w % n_classes) + 1
        row, col = rng.integers(0, side, size=2)
        for _ in range(side * 4):
            grid[row, col] = cls
            drow, dcol = moves[rng.integers(0, 4)]
            row = int(np.clip(row + drow, 0, side - 1))
            col = int(np.clip(col + dcol, 0, side - 1))
    return LabelImage(shape, np.ascontiguousarray(grid.ravel()), n_classes)
