"""Synthetic hazy scenes with ground truth, plus MSE/SSIM metrics.

Scenes pair a clean radiance image with a depth map; haze follows the standard
scattering model I = t J + (1 - t) A with t = exp(-beta * depth). The built-in
test scenes carry a lattice of zero-channel "dark texels" in every region so
the transmission bound is exact somewhere in each neighborhood, which is the
regime the estimator is designed for.
"""

from __future__ import annotations

import dataclasses
import json
import os

import numpy as np
from scipy import ndimage

from .image import AirLight, ImageRgb, ScalarMap, load_map16, save_map16, load_image, save_image

__all__ = [
    "SceneSpec",
    "make_test_scene",
    "transmission_from_depth",
    "synthesize_haze",
    "save_scene",
    "load_scene",
    "mse",
    "ssim",
    "SCENE_KINDS",
]

SCENE_KINDS = ("steps", "occluder", "gradient", "holes")

DEFAULT_SCENE_SEED = 7
DEFAULT_AIRLIGHT = (0.9, 0.95, 1.0)

# dark texel spacing; every region interior gets an exact-bound pixel at least
# this often in both axes
_LATTICE_STEP = 6

_SSIM_WINDOW = 11
_SSIM_SIGMA = 1.5
_SSIM_K1 = 0.01
_SSIM_K2 = 0.03
_LUMA = np.array([0.299, 0.587, 0.114])


@dataclasses.dataclass(frozen=True)
class SceneSpec:
    """Clean radiance + depth + scattering parameters; enough to render haze."""

    radiance: ImageRgb
    depth: ScalarMap
    beta: float
    airlight: AirLight
    kind: str = "custom"

    def __post_init__(self) -> None:
        if self.radiance.data.shape[:2] != self.depth.data.shape:
            raise ValueError("radiance and depth dimensions disagree")
        if self.beta <= 0.0:
            raise ValueError("beta must be positive")
        if self.depth.data.min() < 0.0:
            raise ValueError("depth must be nonnegative")


def transmission_from_depth(depth: ScalarMap, beta: float) -> ScalarMap:
    return ScalarMap(np.exp(-beta * depth.data))


def synthesize_haze(spec: SceneSpec) -> tuple[ImageRgb, ScalarMap]:
    """Render (hazy image, true transmission) from a scene spec."""
    t = transmission_from_depth(spec.depth, spec.beta)
    a = spec.airlight.rgb
    hazy = t.data[:, :, None] * spec.radiance.data + (1.0 - t.data[:, :, None]) * a
    return ImageRgb(np.clip(hazy, 0.0, 1.0)), t


def _textured_radiance(size: int, rng: np.random.Generator) -> np.ndarray:
    """Tiled saturated radiance with a dark-texel lattice; values in [0, 0.8].

    Every tile keeps one color channel low so each pixel has a nearly dark
    channel (the scene statistic the transmission bound relies on), and
    per-pixel grain keeps neighboring colors distinct everywhere, as sensor
    noise does in photographs.
    """
    tile = 8
    tiles_y = (size + tile - 1) // tile
    tiles_x = (size + tile - 1) // tile
    palette = rng.uniform(0.25, 0.7, size=(tiles_y, tiles_x, 3))
    low_channel = rng.integers(0, 3, size=(tiles_y, tiles_x))
    rows, cols = np.mgrid[0:tiles_y, 0:tiles_x]
    palette[rows, cols, low_channel] = rng.uniform(0.02, 0.1, size=(tiles_y, tiles_x))
    base = np.repeat(np.repeat(palette, tile, axis=0), tile, axis=1)[:size, :size, :]
    yy, xx = np.mgrid[0:size, 0:size]
    ripple = 0.05 * np.sin(2.0 * np.pi * (xx / 17.0 + yy / 23.0))
    grain = rng.uniform(-0.02, 0.02, size=(size, size, 3))
    art = np.clip(base + ripple[:, :, None] + grain, 0.01, 0.8)
    # dark texels: one channel exactly zero so the transmission bound is tight
    ys = np.arange(_LATTICE_STEP // 2, size, _LATTICE_STEP)
    xs = np.arange(_LATTICE_STEP // 2, size, _LATTICE_STEP)
    gy, gx = np.meshgrid(ys, xs, indexing="ij")
    gy = gy.ravel()
    gx = gx.ravel()
    colors = rng.uniform(0.2, 0.6, size=(gy.size, 3))
    zero_channel = rng.integers(0, 3, size=gy.size)
    colors[np.arange(gy.size), zero_channel] = 0.0
    art[gy, gx, :] = colors
    return art


def _scene_depth(kind: str, size: int) -> np.ndarray:
    # Depth spans keep exp(-beta*depth) recoverable for beta up to ~1: below
    # transmission ~0.1 any air-light or quantization error is amplified past
    # usefulness when inverting the haze model.
    if kind == "steps":
        depth = np.empty((size, size))
        third = size // 3
        depth[:third, :] = 0.5
        depth[third : 2 * third, :] = 1.0
        depth[2 * third :, :] = 2.0
        return depth
    if kind == "occluder":
        depth = np.full((size, size), 2.5)
        bar = max(2, round(size / 8))
        top = (size - bar) // 2
        depth[top : top + bar, :] = 0.2
        return depth
    if kind == "gradient":
        ramp = np.linspace(0.5, 2.5, size)
        return np.repeat(ramp[:, None], size, axis=1)
    if kind == "holes":
        depth = np.full((size, size), 2.5)
        top, bottom = size // 4, (3 * size) // 4
        depth[top:bottom, :] = 0.5  # shelf
        side = max(4, size // 10)
        gap = (size - 3 * side) // 4
        row0 = (top + bottom - side) // 2
        for k in range(3):
            col0 = gap + k * (side + gap)
            depth[row0 : row0 + side, col0 : col0 + side] = 2.5
        return depth
    raise ValueError(f"unknown scene kind {kind!r}; expected one of {SCENE_KINDS}")


def holes_mask(size: int) -> np.ndarray:
    """Boolean mask of the isolated background holes in the ``holes`` scene."""
    depth = _scene_depth("holes", size)
    top, bottom = size // 4, (3 * size) // 4
    mask = np.zeros((size, size), dtype=bool)
    mask[top:bottom, :] = depth[top:bottom, :] > depth[top:bottom, :].min()
    return mask


def make_test_scene(
    kind: str,
    size: int,
    beta: float = 0.8,
    seed: int = DEFAULT_SCENE_SEED,
    airlight: tuple[float, float, float] = DEFAULT_AIRLIGHT,
) -> SceneSpec:
    """Deterministic benchmark scene; ``kind`` in steps | occluder | gradient | holes."""
    if size < 16:
        raise ValueError("scene size must be at least 16")
    if kind not in SCENE_KINDS:
        raise ValueError(f"unknown scene kind {kind!r}; expected one of {SCENE_KINDS}")
    rng = np.random.default_rng(seed + 1000 * SCENE_KINDS.index(kind))
    radiance = ImageRgb(_textured_radiance(size, rng))
    depth = ScalarMap(_scene_depth(kind, size))
    return SceneSpec(radiance=radiance, depth=depth, beta=beta, airlight=AirLight(airlight), kind=kind)


def save_scene(spec: SceneSpec, json_path: str | os.PathLike) -> None:
    """Serialize a scene: JSON descriptor plus PNG sidecars for depth and radiance.

    Depth is stored as a 16-bit PNG scaled by its maximum (max recorded in the
    JSON), radiance as 8-bit PNG; both quantize accordingly.
    """
    json_path = os.fspath(json_path)
    stem = os.path.splitext(json_path)[0]
    depth_path = stem + ".depth.png"
    radiance_path = stem + ".radiance.png"
    dmax = float(spec.depth.data.max())
    scale = dmax if dmax > 0 else 1.0
    save_map16(depth_path, ScalarMap(spec.depth.data / scale))
    save_image(radiance_path, spec.radiance)
    doc = {
        "kind": spec.kind,
        "beta": spec.beta,
        "airlight": [float(v) for v in spec.airlight.rgb],
        "depth_png": os.path.basename(depth_path),
        "depth_max": scale,
        "radiance_png": os.path.basename(radiance_path),
    }
    with open(json_path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2)


def load_scene(json_path: str | os.PathLike) -> SceneSpec:
    json_path = os.fspath(json_path)
    with open(json_path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    base = os.path.dirname(json_path)
    depth = load_map16(os.path.join(base, doc["depth_png"]))
    radiance = load_image(os.path.join(base, doc["radiance_png"]))
    return SceneSpec(
        radiance=radiance,
        depth=ScalarMap(depth.data * float(doc["depth_max"])),
        beta=float(doc["beta"]),
        airlight=AirLight(doc["airlight"]),
        kind=doc.get("kind", "custom"),
    )


def _as_array(value) -> np.ndarray:
    if isinstance(value, ImageRgb) or isinstance(value, ScalarMap):
        return value.data
    return np.asarray(value, dtype=np.float64)


def mse(a, b) -> float:
    """Mean squared error over all pixels (and channels, when present)."""
    x = _as_array(a)
    y = _as_array(b)
    if x.shape != y.shape:
        raise ValueError(f"shape mismatch: {x.shape} vs {y.shape}")
    return float(np.mean((x - y) ** 2))


def _luminance(arr: np.ndarray) -> np.ndarray:
    if arr.ndim == 3:
        return arr @ _LUMA
    return arr


def _ssim_blur(arr: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    pad = _SSIM_WINDOW // 2
    out = ndimage.convolve1d(arr, kernel, axis=0, mode="nearest")
    out = ndimage.convolve1d(out, kernel, axis=1, mode="nearest")
    return out[pad:-pad, pad:-pad]


def ssim(a, b) -> float:
    """Single-scale structural similarity on the luminance channel.

    11x11 Gaussian window (sigma 1.5), K1 = 0.01, K2 = 0.03, unit dynamic
    range; border pixels whose window leaves the image are excluded from the
    average. Requires both sides of the window to fit: min dimension >= 11.
    """
    x = _luminance(_as_array(a))
    y = _luminance(_as_array(b))
    if x.shape != y.shape:
        raise ValueError(f"shape mismatch: {x.shape} vs {y.shape}")
    if min(x.shape) < _SSIM_WINDOW:
        raise ValueError(f"images must be at least {_SSIM_WINDOW} pixels on each side")
    offsets = np.arange(_SSIM_WINDOW) - _SSIM_WINDOW // 2
    kernel = np.exp(-(offsets ** 2) / (2.0 * _SSIM_SIGMA ** 2))
    kernel /= kernel.sum()

    ux = _ssim_blur(x, kernel)
    uy = _ssim_blur(y, kernel)
    uxx = _ssim_blur(x * x, kernel)
    uyy = _ssim_blur(y * y, kernel)
    uxy = _ssim_blur(x * y, kernel)
    vx = uxx - ux * ux
    vy = uyy - uy * uy
    vxy = uxy - ux * uy

    c1 = _SSIM_K1 ** 2
    c2 = _SSIM_K2 ** 2
    num = (2.0 * ux * uy + c1) * (2.0 * vxy + c2)
    den = (ux * ux + uy * uy + c1) * (vx + vy + c2)
    return float(np.mean(num / den))
