"""report: render figures and an index page from simulation outputs."""

import argparse
import logging
import sys

from .report import render_report


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="report",
        description="Render figures from sweep/summary/holder/moments files "
        "and path series; writes an index.html alongside them.",
    )
    parser.add_argument("--in", dest="in_dir", required=True,
                        help="directory holding the simulation outputs")
    parser.add_argument("--out", dest="out_dir", required=True,
                        help="directory the figures are written to")
    parser.add_argument("--format", dest="fmt", choices=("svg", "png"),
                        default="svg")
    parser.add_argument("--dpi", type=int, default=150)
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO, format="%(message)s")
    try:
        return render_report(
            in_dir=args.in_dir, out_dir=args.out_dir, fmt=args.fmt, dpi=args.dpi
        )
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
