"""Transmission lower bound, patch-based initial estimate, and data weights.

The lower bound b comes straight from the haze model: any pixel's transmission
satisfies t >= 1 - min_c(I_c / A_c). The initial estimate lifts b over a round
patch (pixels with a zero channel reach the bound exactly, so the patch max is
a plausible local transmission). The weight map then scores each pixel by how
close its own bound came to the patch estimate: a tiny gap means the pixel
itself was the evidence, so its data term should dominate the refinement.
"""

from __future__ import annotations

import dataclasses

import numpy as np

from .image import AirLight, ImageRgb, ScalarMap, min_channel
from .morphology import dilate_disk, erode_disk

__all__ = [
    "Initializer",
    "lower_bound",
    "initial_transmission",
    "weight_map",
    "dark_pixel_mask",
    "DEFAULT_GAP_FLOOR",
]

DEFAULT_GAP_FLOOR = 1e-3

_KINDS = ("dilation", "opening")


@dataclasses.dataclass(frozen=True)
class Initializer:
    """Patch initializer choice: plain dilation, or the opening-style variant."""

    kind: str = "dilation"
    radius: int = 25

    def __post_init__(self) -> None:
        if self.kind not in _KINDS:
            raise ValueError(f"initializer kind must be one of {_KINDS}, got {self.kind!r}")
        if self.radius < 1:
            raise ValueError("initializer radius must be >= 1")


def lower_bound(image: ImageRgb, airlight: AirLight) -> ScalarMap:
    """b = 1 - min_c(I_c / A_c), clamped into [0, 1]."""
    return ScalarMap.clipped01(1.0 - min_channel(image, airlight).data)


def initial_transmission(bound: ScalarMap, initializer: Initializer) -> ScalarMap:
    """Patch estimate of transmission from the lower bound map.

    ``dilation`` takes the patch maximum of b. ``opening`` is the variant that
    opens the intensity-ratio map instead, which on the bound map amounts to a
    dilation followed by an erosion; it keeps the estimate from ballooning past
    object silhouettes while still filling in textured interiors. Both results
    dominate b pointwise.
    """
    r = initializer.radius
    if initializer.kind == "dilation":
        est = dilate_disk(bound.data, r)
    else:
        est = erode_disk(dilate_disk(bound.data, r), r)
    return ScalarMap(est)


def weight_map(
    t_init: ScalarMap,
    bound: ScalarMap,
    gap_floor: float = DEFAULT_GAP_FLOOR,
) -> ScalarMap:
    """Data-term weights 1 / gap^2, mean-normalized to 1.

    gap = max(t_init - b, 0) floored at ``gap_floor``; negative gaps can only
    come from clamping artifacts and are treated as zero. Normalizing by the
    mean removes the arbitrary overall scale, so downstream energies only see
    relative confidence.
    """
    if gap_floor <= 0.0:
        raise ValueError("gap_floor must be positive")
    if t_init.data.shape != bound.data.shape:
        raise ValueError("t_init and bound must share dimensions")
    gap = np.maximum(t_init.data - bound.data, 0.0)
    gap = np.maximum(gap, gap_floor)
    raw = 1.0 / (gap * gap)
    return ScalarMap(raw / raw.mean())


def dark_pixel_mask(
    t_init: ScalarMap,
    bound: ScalarMap,
    tol: float = DEFAULT_GAP_FLOOR,
) -> np.ndarray:
    """Boolean map of pixels whose bound reached the patch estimate within tol."""
    if t_init.data.shape != bound.data.shape:
        raise ValueError("t_init and bound must share dimensions")
    return (t_init.data - bound.data) <= tol
