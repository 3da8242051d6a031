"""chemotax-figures command line: render experiment panels from disk output."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .panels import FigureSpec, render


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="chemotax-figures",
        description="Render paper-style panels from a chemotax results directory.")
    sub = parser.add_subparsers(dest="command", required=True)
    r = sub.add_parser("render", help="render one experiment's panel set")
    r.add_argument("--experiment", required=True, help="experiment id (directory name)")
    r.add_argument("--results", default="results", help="harness output root")
    r.add_argument("--out", required=True, help="directory for the images")
    r.add_argument("--format", choices=("png", "svg"), default="png")
    r.add_argument("--snapshots", default=None,
                   help="comma-separated t labels; empty string renders nothing")
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 1

    snapshots = None
    if args.snapshots is not None:
        snapshots = [t for t in args.snapshots.split(",") if t.strip()]
    spec = FigureSpec(
        experiment_id=args.experiment,
        results_dir=Path(args.results),
        out_dir=Path(args.out),
        fmt=args.format,
        snapshots=snapshots,
    )
    try:
        written = render(spec)
    except FileNotFoundError as exc:
        print(f"missing input file: {exc}", file=sys.stderr)
        return 1
    except (KeyError, ValueError) as exc:
        print(f"malformed experiment output: {exc}", file=sys.stderr)
        return 1
    for path in written:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
