"""Single-image dehazing built on a weighted dark-channel refinement.

The pipeline estimates atmospheric light, derives a per-pixel transmission
lower bound, inflates it into an initial estimate with disk morphology, and
refines it by a weighted least-squares solve on the image graph; a constrained
variant keeps the refined transmission above the bound everywhere. Messages
let callers (or the bundled interactive service) pin transmission on chosen
pixel sets and re-solve.
"""

from .airlight import dark_channel, estimate_airlight
from .errors import (
    AirlightError,
    ConfigError,
    HazetoolsError,
    ImageFormatError,
    MessageError,
    SolverError,
)
from .graphs import (
    SparseQuadratic,
    assemble_cwdc_qp,
    assemble_wdc_system,
    build_laplacian,
    refinement_energy,
    smoothness_energy,
)
from .image import (
    AirLight,
    ImageRgb,
    ScalarMap,
    decode_image,
    encode_png,
    load_image,
    load_map16,
    min_channel,
    resize_max_side,
    save_image,
    save_map16,
)
from .morphology import dilate_disk, disk_footprint, erode_disk
from .pipeline import (
    DehazeConfig,
    DehazeResult,
    EwdcMessage,
    apply_messages,
    cluster_messages,
    dehaze_cwdc,
    dehaze_wdc,
    messages_from_json,
    messages_to_json,
    recover_radiance,
)
from .report import dump_intermediates, pseudocolor, render_panel, weight_preview
from .solver import QpSolution, SolverConfig, solve_nnqp, solve_spd
from .synth import (
    SCENE_KINDS,
    SceneSpec,
    load_scene,
    make_test_scene,
    mse,
    save_scene,
    ssim,
    synthesize_haze,
    transmission_from_depth,
)
from .transmission import (
    Initializer,
    dark_pixel_mask,
    initial_transmission,
    lower_bound,
    weight_map,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "AirLight",
    "AirlightError",
    "ConfigError",
    "DehazeConfig",
    "DehazeResult",
    "EwdcMessage",
    "HazetoolsError",
    "ImageFormatError",
    "ImageRgb",
    "Initializer",
    "MessageError",
    "QpSolution",
    "SCENE_KINDS",
    "ScalarMap",
    "SceneSpec",
    "SolverConfig",
    "SolverError",
    "SparseQuadratic",
    "apply_messages",
    "assemble_cwdc_qp",
    "assemble_wdc_system",
    "build_laplacian",
    "cluster_messages",
    "dark_channel",
    "dark_pixel_mask",
    "decode_image",
    "dehaze_cwdc",
    "dehaze_wdc",
    "dilate_disk",
    "disk_footprint",
    "dump_intermediates",
    "encode_png",
    "erode_disk",
    "estimate_airlight",
    "initial_transmission",
    "load_image",
    "load_map16",
    "load_scene",
    "lower_bound",
    "make_test_scene",
    "messages_from_json",
    "messages_to_json",
    "min_channel",
    "mse",
    "pseudocolor",
    "recover_radiance",
    "refinement_energy",
    "render_panel",
    "resize_max_side",
    "save_image",
    "save_map16",
    "save_scene",
    "smoothness_energy",
    "solve_nnqp",
    "solve_spd",
    "ssim",
    "synthesize_haze",
    "transmission_from_depth",
    "weight_map",
    "weight_preview",
]
