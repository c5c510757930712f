"""figkit command line: `figkit render --spec <file.json>`."""

from __future__ import annotations

import argparse
import sys

from .render import FigureSpec, render
from .schema import SchemaError


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="figkit")
    sub = ap.add_subparsers(dest="command", required=True)
    r = sub.add_parser("render", help="render one figure from a spec file")
    r.add_argument("--spec", required=True, help="JSON figure spec")
    args = ap.parse_args(argv)

    try:
        out = render(FigureSpec.from_json(args.spec))
        print(f"wrote {out}")
        return 0
    except SchemaError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
