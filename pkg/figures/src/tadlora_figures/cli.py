"""Command-line entry: figures --kind <k> --in <csv> --out <file> [...]"""

from __future__ import annotations

import argparse
import sys

from tadlora_figures.render import FIGURE_KINDS, FigureSpec, render
from tadlora_figures.results import METRIC_COLUMNS, ResultsError


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="figures",
        description="Render figures from simulator sweep results CSVs",
    )
    parser.add_argument("--kind", required=True, choices=FIGURE_KINDS)
    parser.add_argument("--in", dest="input_csv", required=True)
    parser.add_argument("--out", required=True)
    parser.add_argument("--metric", default="final_mean_client_loss", choices=METRIC_COLUMNS)
    parser.add_argument("--method", default="tad_lora")
    parser.add_argument("--baseline", default="vanilla_lora")
    parser.add_argument("--title", default=None)
    parser.add_argument("--linear-x", action="store_true")
    parser.add_argument(
        "--filter", action="append", default=[], metavar="KEY=VALUE",
        help="restrict rows, e.g. --filter method=tad_lora --filter p=0.1",
    )
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    filters = {}
    for item in args.filter:
        if "=" not in item:
            print(f"error: bad --filter {item!r}, expected KEY=VALUE", file=sys.stderr)
            return 2
        key, value = item.split("=", 1)
        filters[key] = value
    spec = FigureSpec(
        input_csv=args.input_csv,
        figure_kind=args.kind,
        output_path=args.out,
        metric=args.metric,
        method=args.method,
        baseline=args.baseline,
        filters=filters,
        log_x=not args.linear_x,
        title=args.title,
    )
    try:
        out = render(spec)
    except ResultsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
