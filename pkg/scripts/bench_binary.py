"""Paired comparison of every binary learner on an imbalanced stream.

Uses a seeded synthetic stream by default; pass --data to use a file. Each
learner's primary hyperparameter is tuned on the validation prefix first
unless --no-tune is given.

    python scripts/bench_binary.py --out-dir results/binary
"""

import argparse
import sys

from onlineids.binary import BINARY_LEARNERS
from onlineids.cli import main


def parse():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--data", help="csv or sparse file (default: synthetic 1:4 stream)")
    p.add_argument("--trials", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n", type=int, default=20000)
    p.add_argument("--no-tune", action="store_true")
    p.add_argument("--out-dir", default="results/binary")
    return p.parse_args()


def run(args) -> int:
    argv = ["bench", "--algo", ",".join(sorted(BINARY_LEARNERS)), "--trials", str(args.trials),
            "--seed", str(args.seed), "--out-dir", args.out_dir]
    if args.data:
        argv += ["--data", args.data]
    else:
        argv += ["--syn-n", str(args.n), "--syn-dim", "17", "--syn-priors", "0.78,0.22",
                 "--syn-noise", "2.0", "--syn-flip", "0.02", "--syn-seed", "1"]
    if not args.no_tune:
        argv.append("--tune")
    code = main(argv)
    if code == 0:
        print(f"wrote {args.out_dir}/bench.csv and bench.json")
    return code


if __name__ == "__main__":
    sys.exit(run(parse()))
