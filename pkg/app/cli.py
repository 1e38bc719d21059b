"""
app/cli.py

Command-line surface: one subcommand per pipeline, each writing a CSV or JSON
report (stdout unless --out-path is given).

Usage:
    python -m app spectrum --weight alpha-tau:1,0.1 --trunc 128 --out csv
    python -m app scan --weight alpha-tau:5,0.01 --grid=-3:3:0.25 --trunc 256
    python -m app s0

Exit codes: 0 success, 2 validation error, 3 numerical rejection.
"""
from __future__ import annotations

import argparse
import logging
import sys
from typing import Optional, Sequence

from dotenv import load_dotenv
from pydantic import ValidationError

from app import __version__
from app.schemas.run_schema import RunConfig
from app.services.run_service import CSV_COLUMNS, execute
from app.services.weight_service import WEIGHT_GRAMMAR

EPILOG = f"""\
weight specs:
{WEIGHT_GRAMMAR}
csv headers:
""" + "\n".join(f"    {name:<15} {', '.join(cols)}" for name, cols in CSV_COLUMNS.items())


def _common(parser: argparse.ArgumentParser, weight: bool = True) -> None:
    if weight:
        parser.add_argument("--weight", default="constant", help="weight spec (see the list below)")
    parser.add_argument("--trunc", type=int, default=None, help="truncation order N (default $STEKLOV_DEFAULT_TRUNC or 128)")
    parser.add_argument("--out", dest="out_format", choices=["csv", "json"], default="json")
    parser.add_argument("--out-path", default=None, help="report file (default stdout)")
    parser.add_argument("--max-workers", type=int, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="python -m app",
        description="Steklov spectra and zeta differences of weighted Dirichlet-to-Neumann operators on the circle.",
        epilog=EPILOG,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name: str, help_text: str, weight: bool = True) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help_text, epilog=EPILOG, formatter_class=argparse.RawDescriptionHelpFormatter)
        _common(p, weight)
        return p

    p = add("spectrum", "eigenvalues against the disk spectrum")
    p.add_argument("--dump-matrix", default=None, help="write Lambda_a as raw little-endian float64")

    p = add("zeta", "(d/ds)^m (zeta_a - 2 zeta_R)(s)")
    p.add_argument("--s", type=float, default=1.0)
    p.add_argument("--m", type=int, default=0)
    p.add_argument("--trace-form", action="store_true", help="also evaluate through the phi_n trace")

    p = add("scan", "diff, diff' and diff'' over an s grid")
    p.add_argument("--grid", default="-3:3:0.25", help="start:stop:step (use --grid=-3:3:0.25 for negative starts)")

    p = add("variation", "second variation closed forms against spectral finite differences", weight=False)
    p.add_argument("--r", type=int, default=1, help="single-mode family 2cos((2r+1) theta)")
    p.add_argument("--z", type=float, nargs="+", default=[-1.0, 0.5, 2.0])
    p.add_argument("--s", type=float, default=1.0, help="point of the z-derivative consistency check")
    p.add_argument("--tau-step", type=float, default=1e-3)
    p.add_argument("--tau", type=float, default=0.01, help="tau of the log-diagonal check")
    p.add_argument("--log-diag-m", type=int, default=None)

    p = add("counterexample", "single-mode witness of non-convexity on (0, 2)", weight=False)
    p.add_argument("--s", type=float, default=1.0)
    p.add_argument("--tau", type=float, default=0.01)
    p.add_argument("--r-max", type=int, default=40)

    p = add("flow", "integrate the deformation flow towards the disk weight")
    p.add_argument("--tau-end", type=float, default=10.0)
    p.add_argument("--dt", type=float, default=0.01)
    p.add_argument("--monitor-every", type=int, default=None, help="accepted steps between monitored states")
    p.add_argument("--trajectory", dest="trajectory_path", default=None, help="JSON lines trajectory log")

    add("s0", "root of zeta_R(s-1) + s zeta_R'(s-1) above 2", weight=False)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    load_dotenv()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as ex:
        return int(ex.code or 0)

    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s: %(message)s",
        stream=sys.stderr,
    )
    options = {k: v for k, v in vars(args).items() if k != "verbose" and v is not None}
    try:
        config = RunConfig(**options)
    except ValidationError as ex:
        logging.error("invalid configuration: %s", ex)
        return 2
    return execute(config)


if __name__ == "__main__":
    sys.exit(main())
