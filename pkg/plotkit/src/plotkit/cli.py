"""Command line for rendering figures from simulator CSV files."""

from __future__ import annotations

import argparse
import sys

from .render import KINDS, PlotSpec, SchemaError, WindowRangeError, render

__all__ = ["main"]


def _parse_window(text):
    if text is None:
        return None
    try:
        lo, hi = (float(part) for part in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"window must be 'start:end', got {text!r}")
    return (lo, hi)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="plotkit", description="Render figures from qsync CSV output"
    )
    parser.add_argument("input", help="input CSV path")
    parser.add_argument("--kind", choices=KINDS, required=True)
    parser.add_argument("--out", required=True, help="output image path")
    parser.add_argument("--window", type=_parse_window, default=None, metavar="T0:T1")
    parser.add_argument(
        "--window2", type=_parse_window, default=None, metavar="T0:T1",
        help="late window (trajectories kind)",
    )
    parser.add_argument("--linear", action="store_true", help="linear y axis for bounds")
    parser.add_argument("--x", default="", help="sweep-heatmap x column")
    parser.add_argument("--y", default="", help="sweep-heatmap y column")
    parser.add_argument("--value", default="var_minus", help="sweep-heatmap value column")
    parser.add_argument("--dpi", type=int, default=150)
    args = parser.parse_args(argv)

    try:
        spec = PlotSpec(
            input_csv=args.input,
            kind=args.kind,
            output=args.out,
            window=args.window,
            window2=args.window2,
            logy=not args.linear,
            x=args.x,
            y=args.y,
            value=args.value,
            dpi=args.dpi,
        )
        out = render(spec)
    except (SchemaError, WindowRangeError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(out)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
