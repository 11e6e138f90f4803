"""Image containers and raster I/O.

All pipeline code works on float64 arrays in [0, 1]. Decoding, encoding and
resizing are delegated to OpenCV; everything else in the package sees only the
small container types below.

Conventions:
  * ``ImageRgb.data`` has shape (height, width, 3), RGB order, C-contiguous.
  * Pixel coordinates are integer (x, y) with the origin at the top-left.
  * 8-bit output quantization is round-half-up: ``floor(v * 255 + 0.5)``.
  * Transmission-like maps are written as 16-bit grayscale PNG with
    ``value = floor(t * 65535 + 0.5)``.
"""

from __future__ import annotations

import dataclasses
import os
from typing import Tuple

import cv2
import numpy as np

from .errors import ImageFormatError

__all__ = [
    "ImageRgb",
    "ScalarMap",
    "AirLight",
    "PixelCoord",
    "load_image",
    "decode_image",
    "save_image",
    "encode_png",
    "save_map16",
    "load_map16",
    "resize_dims",
    "resize_max_side",
    "min_channel",
]

# Integer (x, y) pair, 0 <= x < width and 0 <= y < height.
PixelCoord = Tuple[int, int]

# Hard ceiling on decoded pixel count; beyond this we refuse rather than
# let a corrupt header drive a giant allocation.
_MAX_PIXELS = 2 ** 30


def _frozen_array(arr: np.ndarray) -> np.ndarray:
    out = np.ascontiguousarray(arr, dtype=np.float64)
    out.flags.writeable = False
    return out


@dataclasses.dataclass(frozen=True)
class ImageRgb:
    """Immutable RGB raster with float64 channels in [0, 1]."""

    data: np.ndarray

    def __post_init__(self) -> None:
        arr = np.ascontiguousarray(self.data, dtype=np.float64)
        if arr.ndim != 3 or arr.shape[2] != 3:
            raise ValueError(f"expected (h, w, 3) array, got shape {arr.shape}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError("image must contain at least one pixel")
        if not np.all(np.isfinite(arr)):
            raise ValueError("image contains non-finite values")
        if arr.min() < 0.0 or arr.max() > 1.0:
            raise ValueError("channel values outside [0, 1]")
        object.__setattr__(self, "data", _frozen_array(arr))

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def shape(self) -> Tuple[int, int, int]:
        return self.data.shape


@dataclasses.dataclass(frozen=True)
class ScalarMap:
    """Immutable single-channel float64 map (transmission, weights, depth)."""

    data: np.ndarray

    def __post_init__(self) -> None:
        arr = np.ascontiguousarray(self.data, dtype=np.float64)
        if arr.ndim != 2:
            raise ValueError(f"expected 2-D array, got shape {arr.shape}")
        if arr.size < 1:
            raise ValueError("map must contain at least one value")
        if not np.all(np.isfinite(arr)):
            raise ValueError("map contains non-finite values")
        object.__setattr__(self, "data", _frozen_array(arr))

    @classmethod
    def clipped01(cls, arr: np.ndarray) -> "ScalarMap":
        """Construct a transmission-like map, clamping values into [0, 1]."""
        return cls(np.clip(np.asarray(arr, dtype=np.float64), 0.0, 1.0))

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]


@dataclasses.dataclass(frozen=True)
class AirLight:
    """Atmospheric light color; channels floored at 1/255 so ratios stay finite."""

    rgb: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.rgb, dtype=np.float64).reshape(-1)
        if arr.shape != (3,):
            raise ValueError("air-light must have exactly three channels")
        if not np.all(np.isfinite(arr)):
            raise ValueError("air-light contains non-finite values")
        arr = np.maximum(arr, 1.0 / 255.0)
        object.__setattr__(self, "rgb", _frozen_array(arr))


def load_image(path: str | os.PathLike) -> ImageRgb:
    """Decode a PNG (8- or 16-bit) or binary PPM file into an ImageRgb.

    Grayscale inputs are replicated across channels; an alpha channel, if
    present, is dropped. Raises ImageFormatError for anything undecodable.
    """
    path = os.fspath(path)
    if not os.path.isfile(path):
        raise ImageFormatError(f"no such image file: {path}")
    raw = cv2.imread(path, cv2.IMREAD_UNCHANGED)
    if raw is None:
        raise ImageFormatError(f"could not decode image: {path}")
    return _from_decoded(raw, path)


def decode_image(buf: bytes, label: str = "<bytes>") -> ImageRgb:
    """Decode an in-memory PNG/PPM byte stream (used by the HTTP service)."""
    raw = cv2.imdecode(np.frombuffer(buf, dtype=np.uint8), cv2.IMREAD_UNCHANGED)
    if raw is None:
        raise ImageFormatError(f"could not decode image: {label}")
    return _from_decoded(raw, label)


def _from_decoded(raw: np.ndarray, label: str) -> ImageRgb:
    if raw.ndim not in (2, 3):
        raise ImageFormatError(f"unsupported raster layout in {label}")
    if raw.shape[0] * raw.shape[1] > _MAX_PIXELS:
        raise ImageFormatError(f"image dimensions overflow sanity cap: {label}")
    if raw.dtype == np.uint8:
        scale = 255.0
    elif raw.dtype == np.uint16:
        scale = 65535.0
    else:
        raise ImageFormatError(f"unsupported bit depth {raw.dtype} in {label}")
    arr = raw.astype(np.float64) / scale
    if arr.ndim == 2:
        arr = np.repeat(arr[:, :, None], 3, axis=2)
    elif arr.shape[2] == 4:
        arr = arr[:, :, :3][:, :, ::-1]  # BGRA -> RGB
    elif arr.shape[2] == 3:
        arr = arr[:, :, ::-1]  # BGR -> RGB
    else:
        raise ImageFormatError(f"unsupported channel count {arr.shape[2]} in {label}")
    return ImageRgb(arr)


def _quantize(values: np.ndarray, levels: int) -> np.ndarray:
    # round-half-up, e.g. 0.5 -> 128 at 8 bits
    return np.floor(np.clip(values, 0.0, 1.0) * levels + 0.5)


def save_image(path: str | os.PathLike, image: ImageRgb) -> None:
    """Write an 8-bit PNG; channel = round-half-up(v * 255) after clamping."""
    u8 = _quantize(image.data, 255).astype(np.uint8)
    if not cv2.imwrite(os.fspath(path), u8[:, :, ::-1]):
        raise ImageFormatError(f"could not write image: {path}")


def encode_png(image: ImageRgb) -> bytes:
    """8-bit PNG encoding of an image, as bytes (same quantization as save_image)."""
    u8 = _quantize(image.data, 255).astype(np.uint8)
    ok, buf = cv2.imencode(".png", u8[:, :, ::-1])
    if not ok:
        raise ImageFormatError("PNG encoding failed")
    return buf.tobytes()


def save_map16(path: str | os.PathLike, map01: ScalarMap) -> None:
    """Write a [0, 1] map as 16-bit grayscale PNG with value = round(t * 65535)."""
    u16 = _quantize(map01.data, 65535).astype(np.uint16)
    if not cv2.imwrite(os.fspath(path), u16):
        raise ImageFormatError(f"could not write map: {path}")


def load_map16(path: str | os.PathLike) -> ScalarMap:
    """Read a grayscale PNG back into a [0, 1] ScalarMap."""
    raw = cv2.imread(os.fspath(path), cv2.IMREAD_UNCHANGED)
    if raw is None:
        raise ImageFormatError(f"could not decode map: {path}")
    if raw.ndim != 2:
        raise ImageFormatError(f"expected single-channel map in {path}")
    scale = 65535.0 if raw.dtype == np.uint16 else 255.0
    return ScalarMap(raw.astype(np.float64) / scale)


def resize_dims(width: int, height: int, max_side: int) -> Tuple[int, int]:
    """Target (width, height) so the longer side equals max_side; never upscales."""
    if max_side <= 0:
        raise ValueError("max_side must be positive")
    longest = max(width, height)
    if longest <= max_side:
        return width, height
    scale = max_side / longest
    return max(1, round(width * scale)), max(1, round(height * scale))


def resize_max_side(image: ImageRgb, max_side: int) -> ImageRgb:
    """Bilinear downscale so that max(width, height) == max_side.

    Images already within the budget are returned unchanged, which also makes
    the operation idempotent.
    """
    new_w, new_h = resize_dims(image.width, image.height, max_side)
    if (new_w, new_h) == (image.width, image.height):
        return image
    out = cv2.resize(image.data, (new_w, new_h), interpolation=cv2.INTER_LINEAR)
    return ImageRgb(np.clip(out, 0.0, 1.0))


def min_channel(image: ImageRgb, airlight: AirLight) -> ScalarMap:
    """Per-pixel minimum of I_c / A_c over channels; may exceed 1 where I > A."""
    ratios = image.data / airlight.rgb
    return ScalarMap(ratios.min(axis=2))
