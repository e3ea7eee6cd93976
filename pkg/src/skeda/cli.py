"""Command-line front end: one subcommand per codec/detector operation.

Every subcommand prints a JSON result on stdout. Exit codes: 0 success,
2 validation error (bad flags/inputs), 1 processing error.
"""
from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import channels, detector, experiment, latent_io
from .codec import embed
from .errors import SkedaError, ValidationError
from .extractor import extract
from .keys import (LatentDims, ReplicationFactors, Seed, derive_keys, load_keys,
                   prng_stream, save_keys)


def _parse_ints(text: str, n: int, label: str) -> tuple[int, ...]:
    parts = text.split(",")
    if len(parts) != n:
        raise ValidationError(f"{label} must be {n} comma-separated integers, got {text!r}")
    try:
        return tuple(int(p) for p in parts)
    except ValueError as exc:
        raise ValidationError(f"{label} must be integers: {exc}") from exc


def cmd_keygen(args) -> dict:
    seed = Seed.from_hex(args.seed_hex) if args.seed_hex else Seed.random()
    dims = LatentDims(*_parse_ints(args.dims, 4, "--dims"))
    factors = ReplicationFactors(*_parse_ints(args.factors, 4, "--factors"))
    ks = derive_keys(seed, dims, factors, args.mode)
    save_keys(ks, args.out)
    return {"out": args.out, "seed_hex": seed.hex(), "n_bits": ks.n_bits, "mode": ks.mode}


def cmd_embed(args) -> dict:
    ks = load_keys(args.key)
    msg = detector.hex_to_bits(args.message_hex, ks.n_bits)
    latent = embed(msg, ks)
    latent_io.write_latent(args.out, latent)
    return {"out": args.out, "n_bits": ks.n_bits, "dims": list(ks.dims.shape)}


def cmd_attack(args) -> dict:
    spec = channels.load_spec(args.spec)
    latent = latent_io.read_latent(args.infile)
    attacked = channels.apply(spec, list(latent))
    out = np.stack(attacked)
    latent_io.write_latent(args.out, out)
    return {"out": args.out, "kind": spec.kind, "frames_in": int(latent.shape[0]),
            "frames_out": int(out.shape[0])}


def cmd_extract(args) -> dict:
    ks = load_keys(args.key)
    latent = latent_io.read_latent(args.infile)
    msg, diag = extract(list(latent), ks, da_enabled=not args.no_da)
    report = {
        "message_hex": detector.bits_to_hex(msg),
        "n_bits": ks.n_bits,
        "n_frames": diag.n_frames,
        "weights": [float(w) for w in diag.weights],
        "block_scores": [float(m) for m in diag.block_scores],
    }
    if diag.frame_ids is not None:
        report["frame_ids"] = [{"index": i, "score": s} for i, s in diag.frame_ids]
    if args.reference_hex:
        ref = detector.hex_to_bits(args.reference_hex, ks.n_bits)
        report["bit_accuracy"] = detector.bit_accuracy(msg, ref)
    if args.report:
        with open(args.report, "w", encoding="utf-8") as fh:
            json.dump(report, fh, indent=2)
            fh.write("\n")
    return report


def cmd_detect(args) -> dict:
    with open(args.report, "r", encoding="utf-8") as fh:
        report = json.load(fh)
    n_bits = int(report["n_bits"])
    msg = detector.hex_to_bits(report["message_hex"], n_bits)
    ref = detector.hex_to_bits(args.reference_hex, n_bits)
    return detector.detect(msg, ref, args.fpr).to_json()


def cmd_trace(args) -> dict:
    dims = LatentDims(*_parse_ints(args.dims, 4, "--dims"))
    factors = ReplicationFactors(*_parse_ints(args.factors, 4, "--factors"))
    registry = detector.load_registry(args.registry, factors.n_bits(dims))
    latent = latent_io.read_latent(args.infile)
    report = detector.trace(list(latent), registry, dims, factors, mode=args.mode,
                            fpr=args.fpr, da_enabled=not args.no_da)
    return report.to_json()


def cmd_threshold(args) -> dict:
    k = detector.detection_threshold(args.n, args.fpr)
    return {"n": args.n, "fpr": args.fpr, "threshold_bits": k,
            "attainable": k <= args.n}


def cmd_evaluate(args) -> dict:
    with open(args.config, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    cfg = experiment.ExperimentConfig.from_json(doc)
    rows = experiment.run_experiment(cfg)
    out = args.out or cfg.output
    if not out:
        raise ValidationError("evaluate needs --out or an 'output' path in the config")
    experiment.write_csv(rows, out)
    result = {"out": out, "rows": len(rows)}
    if args.json_out:
        experiment.write_json(rows, args.json_out)
        result["json_out"] = args.json_out
    if args.figures_dir:
        from .plots import render_figures
        result["figures"] = render_figures(rows, args.figures_dir)
    return result


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="skeda",
                                     description="Latent-noise video watermark codec and evaluation harness")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("keygen", help="derive and store a key file")
    p.add_argument("--seed-hex", default=None, help="64 hex chars; random if omitted")
    p.add_argument("--dims", default="16,4,64,64")
    p.add_argument("--factors", default="16,1,8,8")
    p.add_argument("--mode", choices=["uniform", "per_frame"], default="uniform")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_keygen)

    p = sub.add_parser("embed", help="embed a message into a fresh latent")
    p.add_argument("--key", required=True)
    p.add_argument("--message-hex", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_embed)

    p = sub.add_parser("attack", help="apply a distortion channel to a latent file")
    p.add_argument("--spec", required=True)
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_attack)

    p = sub.add_parser("extract", help="recover the message from a latent file")
    p.add_argument("--key", required=True)
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--no-da", action="store_true", help="disable differential-attention weighting")
    p.add_argument("--reference-hex", default=None)
    p.add_argument("--report", default=None, help="write the extraction report JSON here")
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("detect", help="decide presence from an extraction report")
    p.add_argument("--report", required=True)
    p.add_argument("--reference-hex", required=True)
    p.add_argument("--fpr", type=float, default=1e-6)
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("trace", help="identify the originating user from a registry")
    p.add_argument("--registry", required=True)
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--fpr", type=float, default=1e-6)
    p.add_argument("--dims", default="16,4,64,64")
    p.add_argument("--factors", default="16,1,8,8")
    p.add_argument("--mode", choices=["uniform", "per_frame"], default="uniform")
    p.add_argument("--no-da", action="store_true")
    p.set_defaults(func=cmd_trace)

    p = sub.add_parser("threshold", help="detection threshold for n bits at a target FPR")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--fpr", type=float, required=True)
    p.set_defaults(func=cmd_threshold)

    p = sub.add_parser("evaluate", help="run a batch robustness experiment")
    p.add_argument("--config", required=True)
    p.add_argument("--out", default=None, help="results CSV path")
    p.add_argument("--json-out", default=None)
    p.add_argument("--figures-dir", default=None, help="also render sweep figures here")
    p.set_defaults(func=cmd_evaluate)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        result = args.func(args)
    except ValidationError as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return 2
    except (SkedaError, OSError, json.JSONDecodeError, KeyError) as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return 1
    print(json.dumps(result, indent=2))
    return 0


if __name__ == "__main__":
    sys.exit(main())
