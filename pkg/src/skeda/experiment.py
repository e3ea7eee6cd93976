"""Batch experiment runner behind the `evaluate` subcommand.

For every channel grid point it runs seeded embed -> channel -> extract ->
detect trials and aggregates mean/std bit accuracy and the empirical
true-positive rate, written as CSV (and optionally JSON / figures).
"""
from __future__ import annotations

import csv
import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .channels import ChannelSpec, apply, sweep
from .codec import embed
from .detector import detect, detection_threshold
from .errors import ConfigError, IoError
from .extractor import extract
from .keys import LatentDims, ReplicationFactors, Seed, derive_keys, prng_stream

CSV_COLUMNS = ("kind", "param_name", "param_value", "trials", "mean_acc", "std_acc", "tpr")


@dataclass
class ChannelSweepConfig:
    kind: str
    params: dict = field(default_factory=dict)
    sweep_param: str | None = None
    sweep_values: list | None = None


@dataclass
class ExperimentConfig:
    dims: LatentDims
    factors: ReplicationFactors
    mode: str
    da_enabled: bool
    channels: list[ChannelSweepConfig]
    trials: int
    base_seed: Seed
    fpr: float
    output: str | None = None

    @classmethod
    def from_json(cls, doc: dict) -> "ExperimentConfig":
        try:
            dims = LatentDims(*(int(v) for v in doc.get("dims", [16, 4, 64, 64])))
            factors = ReplicationFactors(*(int(v) for v in doc.get("factors", [16, 1, 8, 8])))
            mode = doc.get("mode", "uniform")
            da_enabled = bool(doc.get("da_enabled", True))
            trials = int(doc.get("trials", 100))
            base_seed = Seed.from_hex(doc["base_seed_hex"]) if "base_seed_hex" in doc else Seed.random()
            fpr = float(doc.get("fpr", 1e-6))
            channels = []
            for ch in doc["channels"]:
                sweep_doc = ch.get("sweep")
                if sweep_doc:
                    if len(sweep_doc) != 1:
                        raise ConfigError("each channel entry may sweep exactly one parameter")
                    (pname, values), = sweep_doc.items()
                    channels.append(ChannelSweepConfig(ch["kind"], dict(ch.get("params", {})),
                                                       pname, list(values)))
                else:
                    channels.append(ChannelSweepConfig(ch["kind"], dict(ch.get("params", {}))))
        except ConfigError:
            raise
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"malformed experiment config: {exc}") from exc
        if trials < 1:
            raise ConfigError("trials must be >= 1")
        if not channels:
            raise ConfigError("config needs at least one channel entry")
        return cls(dims=dims, factors=factors, mode=mode, da_enabled=da_enabled,
                   channels=channels, trials=trials, base_seed=base_seed, fpr=fpr,
                   output=doc.get("output"))


@dataclass
class ReportRow:
    kind: str
    param_name: str
    param_value: object
    trials: int
    mean_acc: float
    std_acc: float
    tpr: float

    def as_csv(self) -> list:
        return [self.kind, self.param_name, self.param_value, self.trials,
                f"{self.mean_acc:.6f}", f"{self.std_acc:.6f}", f"{self.tpr:.6f}"]


def _run_trial(cfg: ExperimentConfig, spec: ChannelSpec, grid_index: int, trial: int) -> tuple[float, bool]:
    trial_seed = cfg.base_seed.child(b"trial/%d/%d" % (grid_index, trial))
    ks = derive_keys(trial_seed, cfg.dims, cfg.factors, cfg.mode)
    msg = prng_stream(trial_seed, b"message").bits(ks.n_bits)
    latent = embed(msg, ks)
    attacked = apply(ChannelSpec(spec.kind, dict(spec.params),
                                 trial_seed.child(b"chan"), spec.stages), list(latent))
    decoded, _ = extract(attacked, ks, da_enabled=cfg.da_enabled)
    report = detect(decoded, msg, cfg.fpr)
    return report.bit_accuracy, report.detected


def _workers() -> int:
    try:
        return max(1, int(os.environ.get("SKEDA_WORKERS", "1")))
    except ValueError:
        return 1


def run_experiment(cfg: ExperimentConfig) -> list[ReportRow]:
    """Run all grid points; deterministic given the base seed."""
    grid: list[tuple[str, str, object, ChannelSpec]] = []
    for ch in cfg.channels:
        template = ChannelSpec(ch.kind, dict(ch.params, **(
            {ch.sweep_param: ch.sweep_values[0]} if ch.sweep_param else {})),
            cfg.base_seed.child(b"chan-template"))
        if ch.sweep_param:
            specs = sweep(template, {ch.sweep_param: ch.sweep_values}, cfg.base_seed)
            for value, spec in zip(ch.sweep_values, specs):
                grid.append((ch.kind, ch.sweep_param, value, spec))
        else:
            grid.append((ch.kind, "", "", template))

    rows = []
    workers = _workers()
    for gi, (kind, pname, pvalue, spec) in enumerate(grid):
        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                results = list(pool.map(lambda t: _run_trial(cfg, spec, gi, t), range(cfg.trials)))
        else:
            results = [_run_trial(cfg, spec, gi, t) for t in range(cfg.trials)]
        accs = np.array([r[0] for r in results])
        detections = np.array([r[1] for r in results])
        rows.append(ReportRow(kind=kind, param_name=pname, param_value=pvalue,
                              trials=cfg.trials, mean_acc=float(accs.mean()),
                              std_acc=float(accs.std(ddof=0)), tpr=float(detections.mean())))
    return rows


def write_csv(rows: list[ReportRow], path) -> None:
    try:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(CSV_COLUMNS)
            for row in rows:
                writer.writerow(row.as_csv())
    except OSError as exc:
        raise IoError(f"cannot write results CSV {path}: {exc}") from exc


def write_json(rows: list[ReportRow], path) -> None:
    doc = [dict(zip(CSV_COLUMNS, (r.kind, r.param_name, r.param_value, r.trials,
                                  r.mean_acc, r.std_acc, r.tpr))) for r in rows]
    try:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=2)
            fh.write("\n")
    except OSError as exc:
        raise IoError(f"cannot write results JSON {path}: {exc}") from exc
