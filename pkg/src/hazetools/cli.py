"""Batch command-line interface.

Subcommands:
  dehaze    run the pipeline on an image file and write outputs
  synth     generate a synthetic hazy scene with ground truth
  eval      compare two images (prints "mse=... ssim=..."), optional figures
  messages  derive color-cluster messages from an image into a JSON file

Exit codes: 0 on success, 1 on operational failure (unreadable image,
solver failure, infeasible message), 2 on usage errors.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from typing import Optional, Sequence

from . import synth
from .airlight import estimate_airlight
from .errors import HazetoolsError
from .image import AirLight, load_image, resize_max_side, save_image, save_map16
from .pipeline import (
    DehazeConfig,
    apply_messages,
    cluster_messages,
    messages_from_json,
    messages_to_json,
)
from .report import dump_intermediates, write_manifest, write_trace_csv
from .transmission import Initializer, lower_bound

__all__ = ["main", "build_parser"]


def _airlight_arg(text: str) -> AirLight:
    parts = text.split(",")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("airlight must be R,G,B")
    try:
        values = [float(p) for p in parts]
    except ValueError as err:
        raise argparse.ArgumentTypeError(f"airlight must be numeric: {err}") from err
    if any(not 0.0 <= v <= 1.0 for v in values):
        raise argparse.ArgumentTypeError("airlight channels must be in [0, 1]")
    return AirLight(values)


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hazetools", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p_dehaze = sub.add_parser("dehaze", help="dehaze an image file")
    p_dehaze.add_argument("input", help="hazy input image (8- or 16-bit PNG, or anything OpenCV reads)")
    p_dehaze.add_argument("--out", required=True, help="output radiance PNG")
    p_dehaze.add_argument("--mode", choices=["wdc", "cwdc"], default="wdc")
    p_dehaze.add_argument("--init", choices=["dilation", "opening"], default="dilation",
                          help="initial-transmission operator")
    p_dehaze.add_argument("--radius", type=_positive_int, default=25, help="structuring disk radius")
    p_dehaze.add_argument("--lambda", dest="lambda_", type=float, default=0.02,
                          help="smoothness weight")
    p_dehaze.add_argument("--eps-t", type=float, default=0.05,
                          help="haze-keeping offset in the recovery denominator")
    p_dehaze.add_argument("--airlight", type=_airlight_arg, default=None,
                          help="override estimated air-light, e.g. 0.9,0.95,1.0")
    p_dehaze.add_argument("--max-side", type=_positive_int, default=640,
                          help="downscale so the longer side is at most this")
    p_dehaze.add_argument("--trans", help="also write refined transmission (16-bit PNG)")
    p_dehaze.add_argument("--messages", help="JSON file of transmission messages to apply")
    p_dehaze.add_argument("--dump-intermediates", metavar="DIR",
                          help="write every intermediate map and a composite figure")
    p_dehaze.add_argument("--trace", help="write solver iteration trace CSV")
    p_dehaze.add_argument("--manifest", help="write run manifest JSON")
    p_dehaze.set_defaults(func=cmd_dehaze)

    p_synth = sub.add_parser("synth", help="generate a synthetic hazy scene")
    p_synth.add_argument("--kind", choices=list(synth.SCENE_KINDS), default="steps")
    p_synth.add_argument("--size", type=_positive_int, default=96, help="square scene side in pixels")
    p_synth.add_argument("--beta", type=float, default=0.8, help="extinction coefficient")
    p_synth.add_argument("--seed", type=int, default=synth.DEFAULT_SCENE_SEED)
    p_synth.add_argument("--out-dir", required=True)
    p_synth.add_argument("--scene", action="store_true",
                         help="also write the full scene description for exact replay")
    p_synth.set_defaults(func=cmd_synth)

    p_eval = sub.add_parser("eval", help="compare two images")
    p_eval.add_argument("reference")
    p_eval.add_argument("candidate")
    p_eval.add_argument("--report", metavar="DIR",
                        help="also render comparison figures into this directory")
    p_eval.set_defaults(func=cmd_eval)

    p_msg = sub.add_parser("messages", help="derive color-cluster messages from an image")
    p_msg.add_argument("input")
    p_msg.add_argument("--out", required=True, help="output messages JSON")
    p_msg.add_argument("--min-fraction", type=float, default=0.005,
                       help="minimum cluster size as a fraction of all pixels")
    p_msg.add_argument("--radius", type=_positive_int, default=25)
    p_msg.add_argument("--max-side", type=_positive_int, default=640)
    p_msg.add_argument("--airlight", type=_airlight_arg, default=None)
    p_msg.set_defaults(func=cmd_messages)

    return parser


def cmd_dehaze(args: argparse.Namespace) -> int:
    image = load_image(args.input)
    config = DehazeConfig(
        mode=args.mode,
        initializer=Initializer(args.init, args.radius),
        lambda_=args.lambda_,
        eps_t=args.eps_t,
        airlight=args.airlight,
        max_side=args.max_side,
    )
    messages = []
    if args.messages:
        with open(args.messages) as fh:
            messages = messages_from_json(fh.read())
    trace = [] if args.trace else None
    result = apply_messages(image, config, messages, trace=trace)

    outputs = {}
    save_image(args.out, result.radiance)
    outputs["radiance"] = args.out
    if args.trans:
        save_map16(args.trans, result.transmission)
        outputs["transmission"] = args.trans
    if args.dump_intermediates:
        outputs.update(dump_intermediates(result, args.dump_intermediates))
    if args.trace:
        write_trace_csv(args.trace, trace)
        outputs["trace"] = args.trace
    if args.manifest:
        write_manifest(args.manifest, result, outputs)
    a = result.airlight.rgb
    print(f"wrote {args.out} ({result.image.width}x{result.image.height}, "
          f"mode={config.mode}, airlight={a[0]:.4f},{a[1]:.4f},{a[2]:.4f})")
    return 0


def cmd_synth(args: argparse.Namespace) -> int:
    spec = synth.make_test_scene(args.kind, args.size, beta=args.beta, seed=args.seed)
    hazy, t_true = synth.synthesize_haze(spec)
    os.makedirs(args.out_dir, exist_ok=True)
    save_image(os.path.join(args.out_dir, "hazy.png"), hazy)
    save_map16(os.path.join(args.out_dir, "transmission.png"), t_true)
    save_image(os.path.join(args.out_dir, "radiance.png"), spec.radiance)
    if args.scene:
        synth.save_scene(spec, os.path.join(args.out_dir, "scene.json"))
    print(f"wrote {args.kind} scene ({args.size}x{args.size}, beta={args.beta:g}) to {args.out_dir}")
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    reference = load_image(args.reference)
    candidate = load_image(args.candidate)
    if reference.shape != candidate.shape:
        print(f"error: image sizes differ: {reference.shape} vs {candidate.shape}",
              file=sys.stderr)
        return 1
    mse_val = synth.mse(reference, candidate)
    ssim_val = synth.ssim(reference, candidate)
    print(f"mse={mse_val:g} ssim={ssim_val:g}")
    if args.report:
        from .report import render_comparison

        os.makedirs(args.report, exist_ok=True)
        render_comparison(os.path.join(args.report, "comparison.png"),
                          reference, candidate)
    return 0


def cmd_messages(args: argparse.Namespace) -> int:
    image = load_image(args.input)
    working = resize_max_side(image, args.max_side)
    airlight = args.airlight or estimate_airlight(working, args.radius)
    bound = lower_bound(working, airlight)
    messages = cluster_messages(working, bound, args.min_fraction)
    with open(args.out, "w") as fh:
        fh.write(messages_to_json(messages))
        fh.write("\n")
    print(f"wrote {len(messages)} messages to {args.out}")
    return 0


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except HazetoolsError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    except OSError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
