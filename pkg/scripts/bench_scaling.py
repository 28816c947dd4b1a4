"""Runtime and mIoU against image side length (binary segmentation, sigma^2 = side/100).

    python scripts/bench_scaling.py --sides 100 200 400 800 -o scaling.csv
"""

import argparse
import math
import sys

from sparsencut.cli import main as cli_main


def parse_args(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--sides", type=int, nargs="*", default=[100, 200, 400, 800])
    p.add_argument("--mu", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output", default=None)
    return p.parse_args(argv)


def main(argv=None) -> int:
    args = parse_args(argv)
    argv = ["bench", "--sides", *map(str, args.sides), "--mu", str(args.mu),
            "--seed", str(args.seed), "--energy-threshold", str(math.inf), "--max-depth", "1"]
    if args.output:
        argv += ["-o", args.output]
    return cli_main(argv)


if __name__ == "__main__":
    sys.exit(main())
