"""Standalone command: render one chart from an aggregate CSV.

Exit codes: 0 success, 2 bad input (schema mismatch, empty input, unknown
options), 3 i/o failure while writing the image.
"""

from __future__ import annotations

import argparse
import os
import sys

from .render import FACET_KEYS, FIGURE_KINDS, EmptyInputError, FigureSpec, SchemaError, render


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nkdelib-figures",
        description="Render charts from nkdelib aggregate CSV output.",
    )
    parser.add_argument("--input", required=True, help="aggregate CSV path")
    parser.add_argument("--kind", required=True, choices=FIGURE_KINDS)
    parser.add_argument("--facet", default="k", choices=FACET_KEYS)
    parser.add_argument("--output", required=True, help="image path (.png/.svg/.pdf)")
    parser.add_argument("--format", dest="image_format", default=None)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else 0
    if not os.path.isfile(args.input):
        print(f"nkdelib-figures: input file not found: {args.input}", file=sys.stderr)
        return 2
    spec = FigureSpec(
        input_path=args.input,
        kind=args.kind,
        facet=args.facet,
        output_path=args.output,
        image_format=args.image_format,
    )
    try:
        render(spec)
    except (SchemaError, EmptyInputError) as exc:
        print(f"nkdelib-figures: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"nkdelib-figures: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"nkdelib-figures: i/o error: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
