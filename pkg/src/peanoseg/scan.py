"""Hilbert-type scan of square pixel grids and its off-scan context map.

The scan orders the pixels of a 2^k x 2^k grid so that consecutive scan
points are always 4-adjacent in the grid.  Each scan point can then be
augmented with the observations of the grid neighbors that are *not* its
neighbors along the scan; those off-scan neighbors, tagged with their
orientation relative to the point, form the context map consumed by the
contextual segmentation models.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

HORIZONTAL = 0
VERTICAL = 1

# 4**32 ranks no longer fit a signed 64-bit index.
MAX_ORDER = 31


class CapacityError(ValueError):
    """Grid order too large for 64-bit scan ranks."""


@dataclass(frozen=True)
class GridShape:
    """Square grid of side 2^k."""

    k: int
    side: int
    n_pixels: int

    @classmethod
    def from_order(cls, k: int) -> "GridShape":
        if k < 0:
            raise ValueError("grid order must be >= 0")
        if k > MAX_ORDER:
            raise CapacityError(f"grid order {k} exceeds the 64-bit rank range")
        side = 1 << k
        return cls(k=k, side=side, n_pixels=side * side)


@dataclass(frozen=True)
class ScanLayout:
    """Bijection between pixel coordinates and scan ranks.

    ``order[n]`` is the (row, col) of the pixel at 0-based rank ``n`` and
    ``rank[row, col]`` the 0-based rank of a pixel; ``step_orient[n]`` tags
    the scan step from rank n to n+1 as HORIZONTAL (the two pixels share a
    row) or VERTICAL (they share a column).  The arrays are 0-based and
    read-only; the accessors speak the conventional 1-based rank language.
    """

    shape: GridShape
    order: np.ndarray        # (N, 2) int64
    rank: np.ndarray         # (side, side) int64
    step_orient: np.ndarray  # (N-1,) uint8

    @property
    def n_sites(self) -> int:
        return self.shape.n_pixels

    @property
    def scan_indices(self) -> np.ndarray:
        """Row-major flat index of each pixel, in scan order."""
        return self.order[:, 0] * self.shape.side + self.order[:, 1]

    def rank_of(self, row: int, col: int) -> int:
        """1-based scan rank of the pixel at (row, col)."""
        return int(self.rank[row, col]) + 1

    def pixel_of(self, rank: int) -> tuple[int, int]:
        """(row, col) of the pixel at the given 1-based scan rank."""
        row, col = self.order[rank - 1]
        return int(row), int(col)

    def rank_grid(self) -> np.ndarray:
        """1-based rank of every pixel, as a (side, side) grid."""
        return self.rank + 1


@dataclass(frozen=True)
class ContextMap:
    """Off-scan 4-neighbors of every scan point, with orientations.

    Stored as flat arrays sorted by owning site: ``site[e]`` is the 0-based
    rank the extra belongs to, ``extra_rank[e]`` the 0-based rank of the
    contributing neighbor pixel, ``orient[e]`` HORIZONTAL or VERTICAL.
    Interior pixels own two extras, border pixels at most one, and the two
    corners the scan passes through own none.
    """

    layout: ScanLayout
    site: np.ndarray
    extra_rank: np.ndarray
    orient: np.ndarray

    @property
    def n_sites(self) -> int:
        return self.layout.n_sites

    @classmethod
    def empty(cls, layout: ScanLayout) -> "ContextMap":
        """Context map with no extras (plain-scan behavior)."""
        z = np.zeros(0, dtype=np.int64)
        return cls(layout=layout, site=z, extra_rank=z.copy(),
                   orient=np.zeros(0, dtype=np.uint8))

    def extras_of(self, rank: int) -> list[tuple[tuple[int, int], int]]:
        """Extras of the 1-based rank as ((row, col), orientation) pairs."""
        sel = self.site == rank - 1
        out = []
        for extra, orient in zip(self.extra_rank[sel], self.orient[sel]):
            row, col = self.layout.order[extra]
            out.append(((int(row), int(col)), int(orient)))
        return out


def build_scan(k: int) -> ScanLayout:
    """Build the Hilbert-type scan of a 2^k x 2^k grid.

    The curve starts at the upper-left pixel and visits every pixel once,
    each step moving to a 4-adjacent pixel.  k = 0 yields the degenerate
    single-pixel scan.
    """
    shape = GridShape.from_order(k)
    col, row = _hilbert_coords(k)
    order = np.stack([row, col], axis=1)
    rank = np.empty((shape.side, shape.side), dtype=np.int64)
    rank[row, col] = np.arange(shape.n_pixels, dtype=np.int64)
    if shape.n_pixels > 1:
        same_row = order[:-1, 0] == order[1:, 0]
        step_orient = np.where(same_row, HORIZONTAL, VERTICAL).astype(np.uint8)
    else:
        step_orient = np.zeros(0, dtype=np.uint8)
    for arr in (order, rank, step_orient):
        arr.setflags(write=False)
    return ScanLayout(shape=shape, order=order, rank=rank, step_orient=step_orient)


def _hilbert_coords(k: int) -> tuple[np.ndarray, np.ndarray]:
    """(col, row) of every curve position, via the Gray-code recursion.

    Level by level, each position's quadrant bits select one of the four
    sub-squares; positions falling in a reflected sub-square get their
    accumulated low coordinates flipped and/or transposed.
    """
    n_pixels = 1 << (2 * k)
    t = np.arange(n_pixels, dtype=np.int64)
    x = np.zeros(n_pixels, dtype=np.int64)
    y = np.zeros(n_pixels, dtype=np.int64)
    s = 1
    side = 1 << k
    while s < side:
        rx = 1 & (t >> 1)
        ry = 1 & (t ^ rx)
        flip = (ry == 0) & (rx == 1)
        x[flip] = s - 1 - x[flip]
        y[flip] = s - 1 - y[flip]
        swap = ry == 0
        x[swap], y[swap] = y[swap], x[swap]
        x += s * rx
        y += s * ry
        t >>= 2
        s <<= 1
    return x, y


def build_context(layout: ScanLayout) -> ContextMap:
    """Collect, per scan point, its grid 4-neighbors lying off the scan.

    A neighbor is an extra iff its rank differs from the point's rank by
    more than one; the rule covers the first and last ranks (one scan
    neighbor only) without special cases.
    """
    side = layout.shape.side
    n = layout.n_sites
    own_ranks = np.arange(n, dtype=np.int64)
    sites, extras, orients = [], [], []
    for drow, dcol, orient in ((-1, 0, VERTICAL), (1, 0, VERTICAL),
                               (0, -1, HORIZONTAL), (0, 1, HORIZONTAL)):
        rows = layout.order[:, 0] + drow
        cols = layout.order[:, 1] + dcol
        inside = (rows >= 0) & (rows < side) & (cols >= 0) & (cols < side)
        nb_rank = layout.rank[rows[inside], cols[inside]]
        own = own_ranks[inside]
        off_scan = np.abs(nb_rank - own) != 1
        sites.append(own[off_scan])
        extras.append(nb_rank[off_scan])
        orients.append(np.full(int(off_scan.sum()), orient, dtype=np.uint8))
    site = np.concatenate(sites)
    extra = np.concatenate(extras)
    orient = np.concatenate(orients)
    idx = np.lexsort((extra, site))
    site, extra, orient = site[idx], extra[idx], orient[idx]
    for arr in (site, extra, orient):
        arr.setflags(write=False)
    return ContextMap(layout=layout, site=site, extra_rank=extra, orient=orient)
