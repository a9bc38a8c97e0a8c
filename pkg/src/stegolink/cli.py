"""Command-line interface: run one trial, sweep a grid, export plot tables.

Exit codes: 0 success, 1 runtime failure, 2 invalid configuration or flags.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from dataclasses import replace

import numpy as np

from .harness import (ConfigError, EXPORT_KINDS, SweepSpec, aggregates_csv, export_plot_data,
                      iter_sweep, load_records, parse_config, records_to_jsonl, selftest)
from .pipeline import PipelineConfig, make_secret, run_trial
from .rng import Seed64, derive


def _add_run_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", help="JSON config file (flags override it)")
    sub.add_argument("--token", help="secret token string")
    sub.add_argument("--snr-db", type=float, dest="snr_db")
    sub.add_argument("--eta", type=float, help="perturbation mask density")
    sub.add_argument("--steps", type=int, help="schedule length T")
    sub.add_argument("--mixing-p", type=float, dest="mixing_p")
    sub.add_argument("--edit-strength", type=float, dest="edit_strength")
    sub.add_argument("--lambda", type=float, dest="guidance_weight", help="guidance weight in [0, 1]")
    sub.add_argument("--predictor", choices=("zero", "linear", "tiny-mlp"), dest="predictor_kind")
    sub.add_argument("--seed", type=int, help="trial seed (drives secret and channel noise)")
    sub.add_argument("--shape", help="latent shape as C,H,W")
    sub.add_argument("--noiseless", action="store_true", default=None)
    sub.add_argument("--scenario", choices=("all", "legit", "E1", "E2", "E3"), default="all",
                     help="which receiver to report on stdout")
    sub.add_argument("--secret-npy", dest="secret_npy", help="load the secret grid from a .npy file")
    sub.add_argument("--out", help="write the trial record as JSON to this path")


def _run_config(args: argparse.Namespace) -> PipelineConfig:
    if args.config:
        cfg = parse_config(args.config)
        if isinstance(cfg, SweepSpec):
            raise ConfigError("'run' expects a single-trial config, not a sweep file")
    else:
        cfg = PipelineConfig()
    overrides = {}
    for name in ("token", "snr_db", "eta", "steps", "mixing_p", "edit_strength",
                 "guidance_weight", "predictor_kind", "noiseless"):
        value = getattr(args, name)
        if value is not None:
            overrides[name] = value
    if args.shape is not None:
        try:
            overrides["shape"] = tuple(int(s) for s in args.shape.split(","))
        except ValueError as e:
            raise ConfigError(f"shape: expected C,H,W integers, got {args.shape!r}") from e
    if args.seed is not None:
        overrides["secret_seed"] = args.seed
        overrides["noise_seed"] = derive(Seed64(args.seed), "noise").value
    try:
        return replace(cfg, **overrides)
    except ValueError as e:
        raise ConfigError(str(e)) from e


def _cmd_run(args: argparse.Namespace) -> int:
    cfg = _run_config(args)
    if args.secret_npy:
        secret = np.asarray(np.load(args.secret_npy), dtype=np.float64)
        if secret.shape != cfg.shape:
            raise ConfigError(f"secret file shape {secret.shape} does not match config shape {cfg.shape}")
    else:
        secret = make_secret(cfg.secret_seed, cfg.shape)
    record = run_trial(secret, cfg)
    payload = json.dumps(record.to_dict(), sort_keys=True, indent=2)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(payload + "\n")
    reports = {"legit": record.legit, "E1": record.eaves1, "E2": record.eaves2, "E3": record.eaves3}
    wanted = reports if args.scenario == "all" else {args.scenario: reports[args.scenario]}
    for name, report in wanted.items():
        print(f"{name:>5}: psnr {report.psnr_db:8.3f} dB   mse {report.mse:.6e}   ssim {report.ssim:8.5f}")
    print(f"round-trip max err {record.edict_roundtrip_error:.3e}   peak {record.peak:.4f}")
    if args.out:
        print(f"record written to {args.out}")
    return 0


def _cmd_sweep(args: argparse.Namespace) -> int:
    spec = parse_config(args.config)
    if isinstance(spec, PipelineConfig):
        raise ConfigError("'sweep' expects a sweep config with an 'axes' object")
    os.makedirs(args.out, exist_ok=True)
    records_path = os.path.join(args.out, "records.jsonl")
    aggregates_path = os.path.join(args.out, "aggregates.csv")
    records = []
    with open(records_path, "w", encoding="utf-8") as fh:
        for row in iter_sweep(spec):
            fh.write(records_to_jsonl([row]))
            records.append(row)
            if row["error"] is not None:
                print(f"point {row['point_index']} trial {row['trial_index']} failed: {row['error']}",
                      file=sys.stderr)
    with open(aggregates_path, "w", encoding="utf-8") as fh:
        fh.write(aggregates_csv(records))
    failures = sum(1 for row in records if row["error"] is not None)
    print(f"{len(records)} trials ({failures} failed) -> {records_path}, {aggregates_path}")
    return 0


def _cmd_export(args: argparse.Namespace) -> int:
    records = load_records(args.records)
    table = export_plot_data(records, args.kind)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(table)
        print(f"{args.kind} table written to {args.out}")
    else:
        sys.stdout.write(table)
    return 0


def _cmd_selftest(_args: argparse.Namespace) -> int:
    return 0 if selftest(verbose=True) else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="stegolink",
                                     description="Token-keyed invertible-diffusion steganography simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run a single hide/transmit/recover trial")
    _add_run_flags(run_p)
    run_p.set_defaults(func=_cmd_run)

    sweep_p = sub.add_parser("sweep", help="run a deterministic sweep from a sweep config")
    sweep_p.add_argument("--config", required=True, help="sweep JSON file with base/axes/trials_per_point")
    sweep_p.add_argument("--out", default=".", help="output directory for records.jsonl and aggregates.csv")
    sweep_p.set_defaults(func=_cmd_sweep)

    export_p = sub.add_parser("export", help="render recorded trials into a plot-ready CSV")
    export_p.add_argument("--records", required=True, help="records.jsonl produced by sweep")
    export_p.add_argument("--kind", required=True, choices=EXPORT_KINDS)
    export_p.add_argument("--out", help="output CSV path (stdout when omitted)")
    export_p.set_defaults(func=_cmd_export)

    selftest_p = sub.add_parser("selftest", help="run the built-in invariant battery")
    selftest_p.set_defaults(func=_cmd_selftest)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    except FileNotFoundError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    except Exception as e:  # noqa: BLE001 - single CLI boundary
        print(f"runtime error: {type(e).__name__}: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
