"""Command line entry: python -m qpme_figs panel --spec <json> --out <png|pdf>."""

import argparse
import sys

from .panels import PanelError, render_panel


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="qpme_figs", description="Render qpme figure panels")
    sub = parser.add_subparsers(dest="command", required=True)
    panel = sub.add_parser("panel", help="render one panel from a JSON spec")
    panel.add_argument("--spec", required=True, help="panel spec JSON path")
    panel.add_argument("--out", required=True, help="output image path (.png or .pdf)")
    args = parser.parse_args(argv)
    try:
        render_panel(args.spec, args.out)
    except PanelError as exc:
        print(f"panel error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
