"""CLI: render a results directory into figures."""

import argparse
import sys

from . import plotting


def main(argv=None):
    parser = argparse.ArgumentParser(prog="isacfigs")
    sub = parser.add_subparsers(dest="command", required=True)
    p_plot = sub.add_parser("plot", help="render sweep CSVs and design traces")
    p_plot.add_argument("--in", dest="in_dir", required=True)
    p_plot.add_argument("--out", dest="out_dir", required=True)
    p_plot.add_argument("--format", choices=("svg", "png"), default="svg")
    args = parser.parse_args(argv)
    try:
        for path in plotting.render_directory(args.in_dir, args.out_dir,
                                              args.format):
            print(f"wrote {path}")
    except (plotting.SchemaError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
