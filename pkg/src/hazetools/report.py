"""Rendering of pipeline intermediates: pseudo-color maps, weight exports,
composite diagnostic figures, solver trace CSVs, and run manifests.

Figures render through the matplotlib Agg backend so the functions work in
headless batch runs; nothing here opens a window. Writers take the target
path first, matching the image module.
"""

from __future__ import annotations

import csv
import json
import os
from typing import Iterable, Optional

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .image import ImageRgb, ScalarMap, save_image, save_map16
from .pipeline import DehazeResult, config_to_dict

__all__ = [
    "pseudocolor",
    "weight_preview",
    "export_weights16",
    "render_panel",
    "render_comparison",
    "write_trace_csv",
    "write_manifest",
    "dump_intermediates",
]

# Five anchor colors from low to high, interpolated linearly per channel:
# deep blue, azure, green, amber, dark red.
_RAMP_STOPS = (0.0, 0.25, 0.5, 0.75, 1.0)
_RAMP_COLORS = (
    (0.0, 0.0, 0.55),
    (0.0, 0.35, 1.0),
    (0.1, 0.9, 0.45),
    (1.0, 0.85, 0.0),
    (0.8, 0.0, 0.0),
)


def pseudocolor(values: ScalarMap | np.ndarray) -> ImageRgb:
    """Map a scalar field in [0, 1] onto the five-stop color ramp."""
    arr = values.data if isinstance(values, ScalarMap) else np.asarray(values, dtype=np.float64)
    arr = np.clip(arr, 0.0, 1.0)
    channels = [
        np.interp(arr, _RAMP_STOPS, [color[c] for color in _RAMP_COLORS])
        for c in range(3)
    ]
    return ImageRgb(np.stack(channels, axis=-1))


def weight_preview(weights: ScalarMap) -> ScalarMap:
    """Log-compressed grayscale view of the weight map.

    Weights span many decades, so the preview shows log(W) rescaled to [0, 1];
    a constant map renders mid-gray.
    """
    w = np.maximum(weights.data, np.finfo(np.float64).tiny)
    logs = np.log(w)
    lo, hi = logs.min(), logs.max()
    if hi - lo < 1e-12:
        return ScalarMap(np.full_like(logs, 0.5))
    return ScalarMap((logs - lo) / (hi - lo))


def export_weights16(path: str | os.PathLike, weights: ScalarMap) -> None:
    """Write weights as 16-bit grayscale PNG, scaled linearly so max -> 65535."""
    peak = weights.data.max()
    scaled = weights.data / peak if peak > 0 else weights.data
    save_map16(path, ScalarMap(scaled))


def render_panel(path: str | os.PathLike, result: DehazeResult) -> None:
    """Render input, bound, initial/refined transmission, weights, mask, and
    output radiance side by side into one PNG."""
    panels = [
        ("input", result.image.data, None),
        ("lower bound", pseudocolor(result.bound).data, None),
        ("initial t", pseudocolor(result.t_init).data, None),
        ("weights (log)", weight_preview(result.weights).data, "gray"),
        ("dark-pixel mask", result.dark_mask.astype(np.float64), "gray"),
        ("refined t", pseudocolor(result.transmission).data, None),
        ("radiance", result.radiance.data, None),
    ]
    fig, axes = plt.subplots(1, len(panels), figsize=(3 * len(panels), 3.4))
    for ax, (title, data, cmap) in zip(axes, panels):
        if cmap is None:
            ax.imshow(data)
        else:
            ax.imshow(data, cmap=cmap, vmin=0.0, vmax=1.0)
        ax.set_title(title, fontsize=9)
        ax.axis("off")
    fig.tight_layout()
    fig.savefig(os.fspath(path), dpi=110)
    plt.close(fig)


def render_comparison(path: str | os.PathLike, reference: ImageRgb, candidate: ImageRgb) -> None:
    """Render reference, candidate, and their per-pixel absolute difference."""
    diff = np.abs(reference.data - candidate.data).mean(axis=2)
    fig, axes = plt.subplots(1, 3, figsize=(10.5, 3.6))
    axes[0].imshow(reference.data)
    axes[0].set_title("reference", fontsize=9)
    axes[1].imshow(candidate.data)
    axes[1].set_title("candidate", fontsize=9)
    im = axes[2].imshow(diff, cmap="magma", vmin=0.0, vmax=max(diff.max(), 1e-6))
    axes[2].set_title("abs difference", fontsize=9)
    fig.colorbar(im, ax=axes[2], fraction=0.046)
    for ax in axes:
        ax.axis("off")
    fig.tight_layout()
    fig.savefig(os.fspath(path), dpi=110)
    plt.close(fig)


def write_trace_csv(path: str | os.PathLike, rows: Iterable[dict]) -> None:
    """Write solver trace rows (phase, iteration, residual/objective) as CSV."""
    fields = ["phase", "iteration", "residual", "objective"]
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fields, extrasaction="ignore")
        writer.writeheader()
        for row in rows:
            writer.writerow(row)


def write_manifest(path: str | os.PathLike, result: DehazeResult, outputs: Optional[dict] = None) -> None:
    """Write a JSON manifest of the run: config, air-light, stats, outputs."""
    doc = {
        "config": config_to_dict(result.config),
        "airlight": [float(v) for v in result.airlight.rgb],
        "working_size": {"width": result.image.width, "height": result.image.height},
        "messages": [m.to_dict() for m in result.messages],
        "stats": result.stats,
        "outputs": outputs or {},
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


def dump_intermediates(result: DehazeResult, directory: str | os.PathLike) -> dict:
    """Write every intermediate into a directory; returns name -> path."""
    directory = os.fspath(directory)
    os.makedirs(directory, exist_ok=True)
    written = {}

    def _put(name: str, writer, *args) -> None:
        path = os.path.join(directory, name)
        writer(path, *args)
        written[name] = path

    _put("input.png", save_image, result.image)
    _put("bound.png", save_map16, result.bound)
    _put("bound_color.png", save_image, pseudocolor(result.bound))
    _put("t_init.png", save_map16, result.t_init)
    _put("t_init_color.png", save_image, pseudocolor(result.t_init))
    _put("weights.png", export_weights16, result.weights)
    _put("weights_preview.png", save_image, ImageRgb(
        np.repeat(weight_preview(result.weights).data[:, :, None], 3, axis=2)))
    _put("mask.png", save_map16, ScalarMap(result.dark_mask.astype(np.float64)))
    _put("transmission.png", save_map16, result.transmission)
    _put("transmission_color.png", save_image, pseudocolor(result.transmission))
    _put("radiance.png", save_image, result.radiance)
    _put("panel.png", render_panel, result)
    return written
