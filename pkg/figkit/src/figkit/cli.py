"""figkit command line: render figures from JSON specs."""

import argparse
import sys

from .render import render
from .spec import SchemaError, load_spec


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="figkit")
    sub = parser.add_subparsers(dest="command", required=True)
    rend = sub.add_parser("render", help="render one figure from a JSON spec")
    rend.add_argument("--spec", required=True)
    args = parser.parse_args(argv)

    try:
        out = render(load_spec(args.spec))
    except SchemaError as exc:
        print(f"schema error: {exc}", file=sys.stderr)
        return 2
    print(out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
