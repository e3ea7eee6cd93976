"""Command-line front end for the pipeline adapter.

Exit codes follow the codec CLI convention: 0 success, 2 validation error,
1 processing error. Every subcommand prints a JSON result on stdout.
"""
from __future__ import annotations

import argparse
import json
import sys

from . import attacks, skdl, video_io
from .backend import GenerationJob, InversionJob, generate, invert
from .calibrate import calibrate, to_channel_spec
from .errors import AdapterError, ValidationError


def cmd_generate(args) -> dict:
    job = GenerationJob(prompt=args.prompt, latent_path=args.latent, out_path=args.out,
                        steps=args.steps, guidance=args.guidance, sampler=args.sampler,
                        scale=args.scale)
    path = generate(job)
    frames = video_io.read_video(path)
    return {"out": path, "frames": int(frames.shape[0]),
            "resolution": [int(frames.shape[1]), int(frames.shape[2])]}


def cmd_invert(args) -> dict:
    job = InversionJob(video_path=args.infile, out_path=args.out, steps=args.steps,
                       channels=args.channels, scale=args.scale)
    path = invert(job)
    latent = skdl.read_latent(path)
    return {"out": path, "dims": [int(d) for d in latent.shape]}


def cmd_attack(args) -> dict:
    params = json.loads(args.params) if args.params else {}
    if args.crf is not None:
        params["crf"] = args.crf
    frames = video_io.read_video(args.infile)
    out = attacks.attack_video(frames, args.kind, params)
    video_io.write_video(args.out, out)
    return {"out": args.out, "kind": args.kind, "frames_in": int(frames.shape[0]),
            "frames_out": int(out.shape[0])}


def cmd_calibrate(args) -> dict:
    clean = skdl.read_latent(args.clean)
    recovered = skdl.read_latent(args.recovered)
    report = calibrate(clean, recovered)
    if args.spec_out:
        spec = to_channel_spec(report, args.spec_seed_hex)
        with open(args.spec_out, "w", encoding="utf-8") as fh:
            json.dump(spec, fh, indent=2)
            fh.write("\n")
        report["spec_out"] = args.spec_out
    return report


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="adapter",
                                     description="Video pipeline bridge for the latent watermark codec")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="render a video from a watermarked latent")
    p.add_argument("--prompt", required=True)
    p.add_argument("--latent", required=True, help="input latent (.skdl)")
    p.add_argument("--out", required=True, help="output video container (.npy)")
    p.add_argument("--steps", type=int, default=25)
    p.add_argument("--guidance", type=float, default=8.0)
    p.add_argument("--sampler", default="toy")
    p.add_argument("--scale", type=int, default=8)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("invert", help="recover the latent from a video")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--steps", type=int, default=25)
    p.add_argument("--channels", type=int, default=4, help="latent channels of the model")
    p.add_argument("--scale", type=int, default=8, help="video pixels per latent cell edge")
    p.add_argument("--out", required=True, help="output latent (.skdl)")
    p.set_defaults(func=cmd_invert)

    p = sub.add_parser("attack", help="apply a pixel-domain distortion to a video")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--kind", required=True, choices=attacks.KINDS)
    p.add_argument("--crf", type=int, default=None, help="CRF for the h264 kind")
    p.add_argument("--params", default=None, help="extra parameters as a JSON object")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_attack)

    p = sub.add_parser("calibrate", help="compare a clean latent with its recovery")
    p.add_argument("--clean", required=True)
    p.add_argument("--recovered", required=True)
    p.add_argument("--spec-out", default=None,
                   help="also write an inversion_proxy channel spec JSON here")
    p.add_argument("--spec-seed-hex", default="00" * 32)
    p.set_defaults(func=cmd_calibrate)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        result = args.func(args)
    except ValidationError as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return 2
    except (AdapterError, OSError, json.JSONDecodeError) as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return 1
    print(json.dumps(result, indent=2))
    return 0


if __name__ == "__main__":
    sys.exit(main())
