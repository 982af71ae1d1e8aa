"""Command-line interface for designs, sweeps and config validation."""

import argparse
import logging
import os
import sys

from . import harness


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="isacpart",
        description="Dynamic array partitioning and beamforming designs "
                    "with BCRB/RMSE campaigns.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_design = sub.add_parser("design", help="design one scenario")
    p_design.add_argument("--config", required=True)
    p_design.add_argument("--strategy", default="prop",
                          choices=harness.STRATEGIES)
    p_design.add_argument("--out", required=True, help="output directory")
    p_design.add_argument("--seed", type=int, default=0)

    p_sweep = sub.add_parser("sweep", help="run a parameter sweep campaign")
    p_sweep.add_argument("--spec", required=True)
    p_sweep.add_argument("--out", required=True)

    p_et = sub.add_parser("et", help="extended-target power campaign")
    p_et.add_argument("--config", required=True)
    p_et.add_argument("--out", required=True)
    p_et.add_argument("--trials", type=int, default=100)
    p_et.add_argument("--seed", type=int, default=0)

    p_val = sub.add_parser("validate", help="check a scenario config")
    p_val.add_argument("--config", required=True)
    return parser


def main(argv=None):
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "design":
            out = os.path.join(args.out, f"design_{args.strategy}.json")
            artifact = harness.run_design(args.config, args.strategy, out,
                                          design_seed=args.seed)
            print(f"wrote {out} (root-BCRB {artifact['root_bcrb_deg']:.6g} deg)")
        elif args.command == "sweep":
            spec = harness.load_sweep(args.spec)
            for path in harness.run_sweep(spec, args.out):
                print(f"wrote {path}")
        elif args.command == "et":
            for path in harness.run_et_campaign(args.config, args.out,
                                                trials=args.trials,
                                                master_seed=args.seed):
                print(f"wrote {path}")
        elif args.command == "validate":
            problems = harness.validate(args.config)
            if problems:
                for p in problems:
                    print(f"violation: {p}", file=sys.stderr)
                return 1
            print("config ok")
    except Exception as exc:                     # surfaced as exit status
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
