"""Batch figure rendering.

Two call shapes:

    plotkit <kind> <input>... <output.svg> [--title T] [--xlabel X] ...
    plotkit --spec figures.json

A spec file holds one figure object or a list of them, with the same
fields as the positional form: kind, inputs, output, title, xlabel,
ylabel, labels.
"""

import argparse
import json
import sys

from .figures import FIGURE_KINDS, FigureSpec, render
from .tables import SchemaError


def _spec_from_obj(obj, source) -> FigureSpec:
    if not isinstance(obj, dict):
        raise SchemaError(f"{source}: each figure must be a JSON object")
    unknown = set(obj) - {"kind", "inputs", "output", "title", "xlabel",
                          "ylabel", "labels"}
    if unknown:
        raise SchemaError(f"{source}: unknown figure fields {sorted(unknown)}")
    missing = [k for k in ("kind", "inputs", "output") if k not in obj]
    if missing:
        raise SchemaError(f"{source}: figure object missing {missing}")
    inputs = obj["inputs"]
    if isinstance(inputs, str):
        inputs = [inputs]
    return FigureSpec(
        kind=obj["kind"], inputs=list(inputs), output=obj["output"],
        title=obj.get("title", ""), xlabel=obj.get("xlabel", ""),
        ylabel=obj.get("ylabel", ""), labels=list(obj.get("labels", [])),
    )


def load_spec_file(path) -> list[FigureSpec]:
    with open(path) as f:
        try:
            data = json.load(f)
        except json.JSONDecodeError as e:
            raise SchemaError(f"{path}: invalid JSON: {e}") from e
    if isinstance(data, dict):
        data = [data]
    if not isinstance(data, list) or not data:
        raise SchemaError(f"{path}: expected a figure object or a list of them")
    return [_spec_from_obj(obj, path) for obj in data]


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="plotkit",
        description="Render exported analysis tables to SVG figures.",
    )
    p.add_argument("--spec", help="JSON figure spec file (overrides positionals)")
    p.add_argument("kind", nargs="?", choices=FIGURE_KINDS)
    p.add_argument("paths", nargs="*",
                   help="input table(s) followed by the output .svg path")
    p.add_argument("--title", default="")
    p.add_argument("--xlabel", default="")
    p.add_argument("--ylabel", default="")
    p.add_argument("--labels", default="",
                   help="comma-separated legend labels for line_scan inputs")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.spec:
            specs = load_spec_file(args.spec)
        else:
            if args.kind is None or len(args.paths) < 2:
                print("error: need either --spec or: <kind> <input>... <output>",
                      file=sys.stderr)
                return 2
            labels = [s for s in args.labels.split(",") if s]
            specs = [FigureSpec(
                kind=args.kind, inputs=args.paths[:-1], output=args.paths[-1],
                title=args.title, xlabel=args.xlabel, ylabel=args.ylabel,
                labels=labels,
            )]
        for spec in specs:
            print(f"{spec.kind} -> {render(spec)}")
        return 0
    except (SchemaError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
