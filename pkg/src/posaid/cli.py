"""Command-line entry point: ``posaid --experiment NAME --out DIR ...``."""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .errors import ConfigurationError
from .experiments import EXPERIMENTS, ExperimentSpec, run, spec_from_manifest
from .params import SystemParams, load_config


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="posaid", description="Position-aided channel estimation experiments.")
    ap.add_argument("--experiment", choices=EXPERIMENTS, help="experiment to run")
    ap.add_argument("--config", type=Path, help="key = value parameter file")
    ap.add_argument("--out", type=Path, help="output directory")
    ap.add_argument("--seed", type=int, help="base seed (unsigned 64-bit)")
    ap.add_argument("--trials", type=int, help="Monte Carlo trials per point")
    ap.add_argument("--mode", choices=("physical", "idealized"), default="physical",
                    help="ground-truth field law for estimator checks")
    ap.add_argument("--threads", type=int, default=1, help="worker processes for sweep points")
    ap.add_argument("--replay", type=Path, metavar="MANIFEST",
                    help="re-run the experiment recorded in a manifest.json and compare CSV hashes")
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        if args.replay is not None:
            spec = spec_from_manifest(args.replay, out=args.out, threads=args.threads)
            import json

            expected = json.loads(args.replay.read_text(encoding="utf-8"))["csv_sha256"]
        else:
            if args.experiment is None or args.out is None:
                ap.error("--experiment and --out are required unless --replay is given")
            params, run_opts = (load_config(args.config) if args.config else (SystemParams(), {}))
            seed = args.seed if args.seed is not None else run_opts.get("seed", 0)
            trials = args.trials if args.trials is not None else run_opts.get("trials", 500)
            spec = ExperimentSpec(args.experiment, params, args.out, seed, trials, args.mode, args.threads,
                                  str(args.config) if args.config else None)
            expected = None
    except ConfigurationError as exc:
        ap.error(str(exc))
    try:
        result, manifest = run(spec)
    except ConfigurationError as exc:
        ap.error(str(exc))
    print(f"{spec.experiment}: wrote {', '.join(manifest['outputs'])} to {spec.out}")
    if result.report:
        print(result.report, end="")
    status = 0 if result.passed else 1
    if expected is not None:
        same = manifest["csv_sha256"] == expected
        print(f"replay: CSV {'identical' if same else 'DIFFERS'} (sha256 {manifest['csv_sha256'][:16]})")
        status = status or (0 if same else 1)
    return status


if __name__ == "__main__":
    sys.exit(main())
