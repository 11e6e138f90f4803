"""Dark channel and atmospheric light estimation.

The dark channel takes the per-pixel channel minimum of the raw intensities
and erodes it over the round patch. Air-light is read from the brightest pixel
among the darkest-channel candidates, which tends to sit deep inside the haze.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import AirlightError
from .image import AirLight, ImageRgb, ScalarMap
from .morphology import erode_disk

__all__ = ["dark_channel", "estimate_airlight"]

DEFAULT_TOP_FRACTION = 0.001


def dark_channel(image: ImageRgb, radius: int) -> ScalarMap:
    """min over the disk patch of min over channels; radius 0 is the pointwise minimum."""
    return ScalarMap(erode_disk(image.data.min(axis=2), radius))


def estimate_airlight(
    image: ImageRgb,
    radius: int = 25,
    top_fraction: float = DEFAULT_TOP_FRACTION,
) -> AirLight:
    """Pick the air-light color from the brightest of the top dark-channel pixels.

    Candidates are the ceil(top_fraction * N) pixels with the largest dark
    channel value; among them the pixel maximizing R + G + B wins. Ties on
    either step resolve to the smallest row-major index, so the result is
    deterministic. Raises AirlightError when the winning pixel is pure black.
    """
    if not 0.0 < top_fraction <= 1.0:
        raise ValueError("top_fraction must be in (0, 1]")
    dark = dark_channel(image, radius).data.ravel()
    count = max(1, math.ceil(top_fraction * dark.size))
    # stable sort keeps row-major order among equal dark values
    candidates = np.argsort(-dark, kind="stable")[:count]
    flat = image.data.reshape(-1, 3)
    sums = flat[candidates].sum(axis=1)
    best_sum = sums.max()
    if best_sum <= 0.0:
        raise AirlightError("air-light indeterminate: candidate pixels are black")
    winner = candidates[sums == best_sum].min()
    return AirLight(flat[winner])
