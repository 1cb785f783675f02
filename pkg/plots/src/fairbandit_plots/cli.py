"""Command line for figure rendering.

Exits nonzero with a message on missing files, header mismatches, or
empty CSVs, without leaving a partial output file behind.
"""

import argparse
import sys

from .render import KINDS, REFERENCES, InputError, PlotJob, render


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fairbandit-plot",
        description="Render figures from fairbandit CSV outputs",
    )
    parser.add_argument("inputs", nargs="+", help="input CSV paths")
    parser.add_argument("--out", required=True, help="output image path")
    parser.add_argument("--kind", default="regret_curve", choices=KINDS)
    parser.add_argument("--scale", default="linear", choices=("linear", "loglog"))
    parser.add_argument("--refs", default="",
                        help=f"comma list from {REFERENCES}")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    refs = tuple(r for r in args.refs.split(",") if r)
    try:
        meta = render(PlotJob(inputs=args.inputs, out=args.out, kind=args.kind,
                              reference_curves=refs, scale=args.scale))
    except InputError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    if "slope" in meta:
        print(f"{meta['out']} slope={meta['slope']!r}")
    else:
        print(meta["out"])
    return 0


if __name__ == "__main__":
    sys.exit(main())
