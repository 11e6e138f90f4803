"""End-to-end dehazing pipelines and the transmission-constraint message layer.

``dehaze_wdc`` runs the unconstrained weighted refinement (one SPD solve);
``dehaze_cwdc`` runs the variant constrained to stay above the per-pixel lower
bound (a non-negative QP). ``apply_messages`` re-runs either pipeline after
overwriting the initial transmission on user-chosen pixel sets, which is how
interactive scribble corrections and automatic color-cluster hints are fed in.

Stage order is fixed: resize, air-light, lower bound, initial estimate,
(message edits), weights, graph solve, clamp, radiance recovery. All
intermediates are retained on the result for diagnostics and previews.
"""

from __future__ import annotations

import dataclasses
import json
import logging
import time
from typing import Optional, Sequence

import cv2
import numpy as np

from .airlight import DEFAULT_TOP_FRACTION, estimate_airlight
from .errors import ConfigError, MessageError, SolverError
from .graphs import (
    DEFAULT_COLOR_FLOOR,
    assemble_cwdc_qp,
    assemble_wdc_system,
    build_laplacian,
)
from .image import AirLight, ImageRgb, ScalarMap, resize_max_side
from .solver import SolverConfig, solve_nnqp, solve_spd
from .transmission import (
    DEFAULT_GAP_FLOOR,
    Initializer,
    dark_pixel_mask,
    initial_transmission,
    lower_bound,
    weight_map,
)

__all__ = [
    "DehazeConfig",
    "DehazeResult",
    "EwdcMessage",
    "recover_radiance",
    "dehaze_wdc",
    "dehaze_cwdc",
    "apply_messages",
    "cluster_messages",
    "messages_to_json",
    "messages_from_json",
    "config_from_dict",
    "config_to_dict",
    "TARGET_FEASIBILITY_TOL",
]

logger = logging.getLogger(__name__)

MODES = ("wdc", "cwdc")

# a message target may undershoot the largest bound on its pixels by this much
# before it would force transmission below the bound
TARGET_FEASIBILITY_TOL = 1e-3

DEFAULT_CLUSTER_MIN_FRACTION = 0.005
_CLUSTER_BINS = 16

# below this pixel count the warm-start cascade bottoms out at t_init
_WARM_START_BASE = 1024
_WARM_START_TOL = 1e-4


@dataclasses.dataclass(frozen=True)
class DehazeConfig:
    """Pipeline parameters; defaults follow the published operating point."""

    mode: str = "wdc"
    initializer: Initializer = Initializer("dilation", 25)
    lambda_: float = 0.02
    eps_t: float = 0.05
    gap_floor: float = DEFAULT_GAP_FLOOR
    max_side: int = 640
    airlight: Optional[AirLight] = None
    color_floor: float = DEFAULT_COLOR_FLOOR
    top_fraction: float = DEFAULT_TOP_FRACTION
    solver: SolverConfig = dataclasses.field(default_factory=SolverConfig)

    def __post_init__(self) -> None:
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.lambda_ < 0.0:
            raise ConfigError("lambda must be nonnegative")
        if self.eps_t < 0.0:
            raise ConfigError("eps_t must be nonnegative")
        if self.gap_floor <= 0.0:
            raise ConfigError("gap_floor must be positive")
        if self.max_side < 1:
            raise ConfigError("max_side must be >= 1")
        if self.color_floor <= 0.0:
            raise ConfigError("color_floor must be positive")
        if not 0.0 < self.top_fraction <= 1.0:
            raise ConfigError("top_fraction must be in (0, 1]")


@dataclasses.dataclass(frozen=True)
class EwdcMessage:
    """A pixel set C plus an optional transmission target t_s.

    When ``target`` is None it resolves at application time to max of the
    lower bound over C. Pixels are (x, y) pairs in the resized working frame.
    """

    pixels: np.ndarray
    target: Optional[float] = None

    def __post_init__(self) -> None:
        arr = np.asarray(self.pixels, dtype=np.int64)
        if arr.ndim != 2 or arr.shape[1] != 2 or arr.shape[0] < 1:
            raise MessageError("message pixels must be a nonempty list of (x, y) pairs")
        arr = np.ascontiguousarray(arr)
        arr.flags.writeable = False
        object.__setattr__(self, "pixels", arr)
        if self.target is not None:
            t = float(self.target)
            if not 0.0 <= t <= 1.0:
                raise MessageError(f"message target {t} outside [0, 1]")
            object.__setattr__(self, "target", t)

    def to_dict(self) -> dict:
        return {"pixels": self.pixels.tolist(), "target": self.target}

    @classmethod
    def from_dict(cls, doc: dict) -> "EwdcMessage":
        if "pixels" not in doc:
            raise MessageError("message is missing 'pixels'")
        return cls(pixels=doc["pixels"], target=doc.get("target"))


@dataclasses.dataclass
class DehazeResult:
    """Everything the pipeline produced, including intermediates."""

    radiance: ImageRgb
    transmission: ScalarMap
    bound: ScalarMap
    t_init: ScalarMap
    weights: ScalarMap
    dark_mask: np.ndarray
    airlight: AirLight
    image: ImageRgb  # resized working image
    config: DehazeConfig
    messages: list
    stats: dict


def recover_radiance(
    image: ImageRgb,
    transmission: ScalarMap,
    bound: ScalarMap,
    airlight: AirLight,
    eps_t: float,
) -> ImageRgb:
    """Invert the haze model with the bound-respecting, haze-keeping denominator.

    J = (I - A) / ((max(t, b) + eps_t) / (1 + eps_t)) + A, clamped to [0, 1].
    With eps_t = 0 the denominator is floored at 1e-6 instead.
    """
    t_eff = np.maximum(transmission.data, bound.data)
    denom = (t_eff + eps_t) / (1.0 + eps_t)
    denom = np.maximum(denom, 1e-6)
    a = airlight.rgb
    j = (image.data - a) / denom[:, :, None] + a
    return ImageRgb(np.clip(j, 0.0, 1.0))


def _resolve_target(message: EwdcMessage, bound: ScalarMap, width: int, height: int) -> float:
    xs = message.pixels[:, 0]
    ys = message.pixels[:, 1]
    if xs.min() < 0 or ys.min() < 0 or xs.max() >= width or ys.max() >= height:
        raise MessageError(
            f"message pixel out of bounds for {width}x{height} working frame"
        )
    bound_max = float(bound.data[ys, xs].max())
    if message.target is None:
        return bound_max
    if message.target < bound_max - TARGET_FEASIBILITY_TOL:
        raise MessageError(
            f"infeasible message target {message.target:.6f}: pixels in the set "
            f"have lower bound up to {bound_max:.6f}"
        )
    return message.target


def _edit_t_init(
    t_init: ScalarMap,
    bound: ScalarMap,
    messages: Sequence[EwdcMessage],
) -> tuple[ScalarMap, list[float]]:
    """Overwrite t_init on each message's pixel set; later messages win."""
    arr = t_init.data.copy()
    height, width = arr.shape
    resolved = []
    for message in messages:
        value = _resolve_target(message, bound, width, height)
        arr[message.pixels[:, 1], message.pixels[:, 0]] = value
        resolved.append(value)
    return ScalarMap(arr), resolved


def _warm_start_guess(
    image_data: np.ndarray,
    weights_data: np.ndarray,
    t_init_data: np.ndarray,
    lambda_: float,
    color_floor: float,
    solver: SolverConfig,
) -> np.ndarray:
    """Initial guess for the refinement solve from a coarse-to-fine cascade.

    The same weighted system is assembled at half resolution (recursively),
    solved loosely, and the result is interpolated back up. This only shapes
    the starting point; the full-resolution solve still enforces its own
    residual contract. Determinism is preserved: fixed restriction and
    interpolation operators, no randomness.
    """
    h, w = t_init_data.shape
    if h * w <= _WARM_START_BASE or min(h, w) < 4 or lambda_ == 0.0:
        return t_init_data.ravel()
    h2, w2 = (h + 1) // 2, (w + 1) // 2
    img2 = np.clip(cv2.resize(image_data, (w2, h2), interpolation=cv2.INTER_AREA), 0.0, 1.0)
    wts2 = cv2.resize(weights_data, (w2, h2), interpolation=cv2.INTER_AREA)
    ti2 = np.clip(cv2.resize(t_init_data, (w2, h2), interpolation=cv2.INTER_AREA), 0.0, 1.0)
    x0_coarse = _warm_start_guess(img2, wts2, ti2, lambda_, color_floor, solver)
    laplacian2 = build_laplacian(ImageRgb(img2), color_floor)
    mat2, rhs2 = assemble_wdc_system(
        ScalarMap(np.maximum(wts2, np.finfo(np.float64).tiny)),
        ScalarMap(ti2), laplacian2, lambda_)
    coarse_cfg = dataclasses.replace(solver, cg_tol=max(solver.cg_tol, _WARM_START_TOL))
    try:
        t2 = solve_spd(mat2, rhs2, coarse_cfg, x0=x0_coarse)
    except SolverError as err:
        t2 = err.iterate if err.iterate is not None else x0_coarse
    up = cv2.resize(t2.reshape(h2, w2), (w, h), interpolation=cv2.INTER_LINEAR)
    return up.ravel()


def _run(image: ImageRgb, config: DehazeConfig, messages: Sequence[EwdcMessage], trace=None) -> DehazeResult:
    t_start = time.perf_counter()
    resized = resize_max_side(image, config.max_side)
    if config.airlight is not None:
        airlight = config.airlight
        airlight_source = "given"
    else:
        airlight = estimate_airlight(resized, config.initializer.radius, config.top_fraction)
        airlight_source = "estimated"
    bound = lower_bound(resized, airlight)
    t_init = initial_transmission(bound, config.initializer)
    resolved_targets: list[float] = []
    if messages:
        t_init, resolved_targets = _edit_t_init(t_init, bound, messages)
    weights = weight_map(t_init, bound, config.gap_floor)
    mask = dark_pixel_mask(t_init, bound, config.gap_floor)
    laplacian = build_laplacian(resized, config.color_floor)
    t_setup = time.perf_counter()

    stats: dict = {
        "mode": config.mode,
        "airlight_source": airlight_source,
        "resolved_targets": resolved_targets,
        "qp_fallback": False,
    }

    mat, rhs = assemble_wdc_system(weights, t_init, laplacian, config.lambda_)
    cg_trace = [] if trace is not None else None
    cg_info: dict = {}
    x0 = _warm_start_guess(resized.data, weights.data, t_init.data,
                           config.lambda_, config.color_floor, config.solver)
    t_flat = solve_spd(mat, rhs, config.solver, x0=x0, trace=cg_trace, info=cg_info)
    stats["cg_iterations"] = cg_info.get("iterations", 0)
    stats["cg_residual"] = cg_info.get("residual", 0.0)

    if config.mode == "cwdc":
        qp = assemble_cwdc_qp(weights, t_init, bound, laplacian, config.lambda_)
        x0 = np.maximum(t_flat - bound.data.ravel(), 0.0)
        qp_trace = [] if trace is not None else None
        try:
            sol = solve_nnqp(qp, config.solver, x0=x0, trace=qp_trace)
            t_flat = bound.data.ravel() + sol.x
            stats["qp_outer_iterations"] = sol.outer_iterations
            stats["qp_inner_iterations"] = sol.inner_iterations
            stats["qp_kkt_residual"] = sol.kkt_residual
            stats["qp_objective"] = sol.objective
        except SolverError as err:
            # degrade softly: clamp the unconstrained solution to the bound
            logger.warning("constrained solve failed (%s); falling back to clamped solution", err)
            stats["qp_fallback"] = True
            stats["qp_kkt_residual"] = err.residual
            t_flat = np.maximum(t_flat, bound.data.ravel())
        if trace is not None:
            trace.extend(
                {"phase": "qp", "iteration": row["outer"], "residual": row["kkt"],
                 "objective": row["objective"], "penalty": row["penalty"]}
                for row in qp_trace or [])

    if trace is not None:
        trace.extend({"phase": "cg", "iteration": it, "residual": res} for it, res in cg_trace or [])

    transmission = ScalarMap.clipped01(t_flat.reshape(bound.data.shape))
    t_solve = time.perf_counter()
    radiance = recover_radiance(resized, transmission, bound, airlight, config.eps_t)
    stats["timings"] = {
        "setup_s": t_setup - t_start,
        "solve_s": t_solve - t_setup,
        "total_s": time.perf_counter() - t_start,
    }
    return DehazeResult(
        radiance=radiance,
        transmission=transmission,
        bound=bound,
        t_init=t_init,
        weights=weights,
        dark_mask=mask,
        airlight=airlight,
        image=resized,
        config=config,
        messages=list(messages),
        stats=stats,
    )


def dehaze_wdc(image: ImageRgb, config: DehazeConfig | None = None, *, trace=None) -> DehazeResult:
    """Unconstrained weighted refinement; one preconditioned CG solve."""
    config = config or DehazeConfig()
    if config.mode != "wdc":
        config = dataclasses.replace(config, mode="wdc")
    return _run(image, config, [], trace=trace)


def dehaze_cwdc(image: ImageRgb, config: DehazeConfig | None = None, *, trace=None) -> DehazeResult:
    """Bound-constrained refinement; guarantees t >= b up to solver tolerance."""
    config = config or DehazeConfig(mode="cwdc")
    if config.mode != "cwdc":
        config = dataclasses.replace(config, mode="cwdc")
    return _run(image, config, [], trace=trace)


def apply_messages(
    image: ImageRgb,
    config: DehazeConfig,
    messages: Sequence[EwdcMessage],
    *,
    trace=None,
) -> DehazeResult:
    """Re-run the configured pipeline with t_init overwritten on message pixels.

    Messages apply in order (later messages overwrite earlier ones on shared
    pixels); the weight map is recomputed once afterwards. Message pixels are
    addressed in the resized working frame. Raises MessageError for
    out-of-bounds pixels or targets below the feasibility tolerance.
    """
    return _run(image, config, list(messages), trace=trace)


def cluster_messages(
    image: ImageRgb,
    bound: ScalarMap,
    min_fraction: float = DEFAULT_CLUSTER_MIN_FRACTION,
) -> list[EwdcMessage]:
    """Messages from RGB-space clustering: one per sufficiently large color cell.

    The color cube is cut into 16 bins per channel; every cell holding at
    least min_fraction of the pixels becomes a message with target None
    (resolved to the max bound over the cell at application time). Cells are
    emitted in ascending cell-index order, pixels in row-major order.
    """
    if not 0.0 < min_fraction <= 1.0:
        raise ValueError("min_fraction must be in (0, 1]")
    if image.data.shape[:2] != bound.data.shape:
        raise ValueError("image and bound dimensions disagree")
    h, w = bound.data.shape
    bins = np.minimum((image.data * _CLUSTER_BINS).astype(np.int64), _CLUSTER_BINS - 1)
    keys = (bins[:, :, 0] * _CLUSTER_BINS + bins[:, :, 1]) * _CLUSTER_BINS + bins[:, :, 2]
    flat = keys.ravel()
    counts = np.bincount(flat, minlength=_CLUSTER_BINS ** 3)
    threshold = min_fraction * flat.size
    xs = np.tile(np.arange(w), h)
    ys = np.repeat(np.arange(h), w)
    messages = []
    for key in np.flatnonzero(counts >= threshold):
        member = flat == key
        pixels = np.stack([xs[member], ys[member]], axis=1)
        messages.append(EwdcMessage(pixels=pixels, target=None))
    return messages


def messages_to_json(messages: Sequence[EwdcMessage]) -> str:
    return json.dumps({"messages": [m.to_dict() for m in messages]}, indent=2)


def messages_from_json(text: str) -> list[EwdcMessage]:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as err:
        raise MessageError(f"message file is not valid JSON: {err}") from err
    if not isinstance(doc, dict) or not isinstance(doc.get("messages"), list):
        raise MessageError("message file must be an object with a 'messages' list")
    return [EwdcMessage.from_dict(entry) for entry in doc["messages"]]


def config_to_dict(config: DehazeConfig) -> dict:
    doc = {
        "mode": config.mode,
        "initializer": config.initializer.kind,
        "radius": config.initializer.radius,
        "lambda": config.lambda_,
        "eps_t": config.eps_t,
        "gap_floor": config.gap_floor,
        "max_side": config.max_side,
        "color_floor": config.color_floor,
        "top_fraction": config.top_fraction,
    }
    if config.airlight is not None:
        doc["airlight"] = [float(v) for v in config.airlight.rgb]
    return doc


def config_from_dict(doc: dict) -> DehazeConfig:
    """Build a config from a JSON-style dict; unknown keys are rejected."""
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    known = {
        "mode", "initializer", "radius", "lambda", "eps_t", "gap_floor",
        "max_side", "color_floor", "top_fraction", "airlight",
    }
    unknown = set(doc) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    try:
        init = Initializer(
            kind=doc.get("initializer", "dilation"),
            radius=int(doc.get("radius", 25)),
        )
        airlight = doc.get("airlight")
        return DehazeConfig(
            mode=doc.get("mode", "wdc"),
            initializer=init,
            lambda_=float(doc.get("lambda", 0.02)),
            eps_t=float(doc.get("eps_t", 0.05)),
            gap_floor=float(doc.get("gap_floor", DEFAULT_GAP_FLOOR)),
            max_side=int(doc.get("max_side", 640)),
            color_floor=float(doc.get("color_floor", DEFAULT_COLOR_FLOOR)),
            top_fraction=float(doc.get("top_fraction", DEFAULT_TOP_FRACTION)),
            airlight=AirLight(airlight) if airlight is not None else None,
        )
    except (TypeError, ValueError) as err:
        raise ConfigError(f"invalid config value: {err}") from err
