"""Grayscale min/max filtering over Euclidean disk neighborhoods.

The neighborhood of a pixel is the round patch {(dx, dy) : dx^2 + dy^2 <= r^2}
clipped at the raster border. Filtering decomposes the disk into one horizontal
segment per row offset: a 1-D sliding extremum along x, then a clamped row
shift and a running extremum over row offsets. Replicate-border handling is
exact here because clamping an out-of-bounds offset coordinate can only shrink
it, which keeps the sampled position inside the disk.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import ndimage

__all__ = ["disk_footprint", "dilate_disk", "erode_disk"]


def disk_footprint(radius: int) -> np.ndarray:
    """Boolean (2r+1, 2r+1) mask of the disk dx^2 + dy^2 <= r^2."""
    if radius < 0:
        raise ValueError("radius must be nonnegative")
    yy, xx = np.mgrid[-radius : radius + 1, -radius : radius + 1]
    return (yy * yy + xx * xx) <= radius * radius


def dilate_disk(values: np.ndarray, radius: int) -> np.ndarray:
    """Maximum of ``values`` over the border-clipped disk at every pixel."""
    return _disk_filter(values, radius, ndimage.maximum_filter1d, np.maximum)


def erode_disk(values: np.ndarray, radius: int) -> np.ndarray:
    """Minimum of ``values`` over the border-clipped disk at every pixel."""
    return _disk_filter(values, radius, ndimage.minimum_filter1d, np.minimum)


def _disk_filter(values, radius, filter1d, combine):
    if radius < 0:
        raise ValueError("radius must be nonnegative")
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError("disk filtering expects a 2-D map")
    if radius == 0:
        return arr.copy()
    height = arr.shape[0]
    rows = np.arange(height)
    out = None
    for dy in range(-radius, radius + 1):
        half = math.isqrt(radius * radius - dy * dy)
        line = filter1d(arr, size=2 * half + 1, axis=1, mode="nearest")
        line = line[np.clip(rows + dy, 0, height - 1)]
        if out is None:
            out = line
        else:
            combine(out, line, out=out)
    return out
