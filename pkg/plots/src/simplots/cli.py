"""``plot`` command: one figure per invocation.

    plot --kind latency_cdf --in run_a/frames.csv run_b/frames.csv --out cdf.png
"""

from __future__ import annotations

import argparse
import sys

from .figures import KINDS, FigureSpec, SchemaError, render


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="plot")
    parser.add_argument("--kind", required=True, choices=KINDS)
    parser.add_argument("--in", dest="inputs", required=True, nargs="+",
                        metavar="CSV", help="input CSV file(s)")
    parser.add_argument("--out", required=True, help="output image path")
    parser.add_argument("--label", action="append", default=[],
                        help="legend label, repeatable, one per input")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        spec = FigureSpec(kind=args.kind, inputs=args.inputs,
                          output=args.out, labels=args.label)
        render(spec)
    except SchemaError as exc:
        print(f"plot: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"plot: {exc}", file=sys.stderr)
        return 1
    print(args.out)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
