"""Script interface: ``plotkit INPUT KIND OUTPUT [--title ...]``."""

from __future__ import annotations

import argparse
import sys

from .jobs import KINDS, FigureJob, SchemaError
from .render import render


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="plotkit",
        description="Render a qtransfer CSV into a static figure.",
    )
    parser.add_argument("input", help="input CSV path")
    parser.add_argument("kind", choices=KINDS, help="figure kind")
    parser.add_argument("output", help="output image path (extension picks the format)")
    parser.add_argument("--title", default=None)
    parser.add_argument("--xlabel", default=None)
    parser.add_argument("--ylabel", default=None)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        job = FigureJob(
            input_path=args.input,
            kind=args.kind,
            output_path=args.output,
            title=args.title,
            xlabel=args.xlabel,
            ylabel=args.ylabel,
        )
        written = render(job)
    except (SchemaError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(written)
    return 0


if __name__ == "__main__":
    sys.exit(main())
