"""Command-line entry point.

Subcommands: run, list-experiments, stability-report, gamma-report.
Exit status: 0 success, 1 validation/usage error, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from .errors import NumericalError, ValidationError
from .harness import (gamma_report, resolve_run_target, run_experiment,
                      stability_report, umax_convergence_study)
from .manifest import BUILTIN_IDS


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="chemotax",
        description="Volume-filling chemotaxis laboratory: lattice model, "
                    "generalised PKS solver and cross-validation harness.")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an experiment manifest (built-in id or JSON file)")
    run.add_argument("target", help="built-in experiment id or path to a manifest file")
    run.add_argument("--out-dir", default="results", help="output root (default: results)")
    run.add_argument("--seed", type=int, default=None, help="override the base seed")
    run.add_argument("--realizations", type=int, default=None,
                     help="override the realization count of every case")
    run.add_argument("--threads", type=int, default=None,
                     help="parallel realizations (fallback: CHEMOTAX_THREADS, then 1)")
    run.add_argument("--snapshot-times", default=None,
                     help="comma-separated snapshot times overriding the manifest")
    run.add_argument("--paper-scale", action="store_true",
                     help="built-in targets: use published realization counts and 2D t_end")
    run.add_argument("--umax-study", action="store_true",
                     help="additionally run the PDE-only u_max ladder study")

    sub.add_parser("list-experiments", help="print the built-in experiment ids")

    for name, help_text in (("stability-report", "dispersion curve and chi threshold"),
                            ("gamma-report", "Gamma(c) profile and root census")):
        rep = sub.add_parser(name, help=help_text)
        rep.add_argument("target", help="built-in experiment id or path to a manifest file")
        rep.add_argument("--out-dir", default="results")
        rep.add_argument("--paper-scale", action="store_true")
    return parser


def _thread_count(args) -> int:
    if args.threads is not None:
        return max(args.threads, 1)
    env = os.environ.get("CHEMOTAX_THREADS")
    if env:
        try:
            return max(int(env), 1)
        except ValueError:
            raise ValidationError(f"CHEMOTAX_THREADS is not an integer: {env!r}")
    return 1


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse exits 2 on usage errors; contract says 1
        return 0 if exc.code == 0 else 1

    try:
        if args.command == "list-experiments":
            for exp_id in BUILTIN_IDS:
                print(exp_id)
            return 0

        manifest = resolve_run_target(args.target, paper_scale=getattr(args, "paper_scale", False))
        if args.command == "run":
            if args.seed is not None:
                manifest.base_seed = args.seed
            if args.realizations is not None:
                manifest.n_realizations = args.realizations
                for case in manifest.cases:
                    case.n_realizations = None
            if args.snapshot_times is not None:
                times = [float(t) for t in args.snapshot_times.split(",") if t.strip()]
                manifest.snapshot_times = times
                for case in manifest.cases:
                    case.snapshot_times = None
            metrics = run_experiment(manifest, args.out_dir, threads=_thread_count(args))
            if args.umax_study:
                metrics["umax_study"] = umax_convergence_study(manifest, args.out_dir)
            print(json.dumps({"experiment_id": manifest.experiment_id,
                              "out_dir": args.out_dir, "status": "ok"}))
            return 0
        if args.command == "stability-report":
            print(json.dumps(stability_report(manifest, args.out_dir), indent=2))
            return 0
        if args.command == "gamma-report":
            print(json.dumps(gamma_report(manifest, args.out_dir), indent=2))
            return 0
        parser.print_usage()
        return 1
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"i/o failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
