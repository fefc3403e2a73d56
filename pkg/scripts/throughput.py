"""Time full prequential passes at the two testbed scales.

Binary: 274,628 samples x 17 features with each first-order learner.
Multiclass: 78,377 samples x 128 features with diagonal ARCSMC (k=3).
Features are random; only the wall-clock time matters here.
"""

import argparse
import time

import numpy as np

from onlineids.data import Dataset
from onlineids.evaluation import LearnerConfig, prequential_run

FIRST_ORDER = ("perceptron", "pa", "pa1", "ogd", "csogd", "alma", "romma")


def timed(config, data):
    start = time.perf_counter()
    try:
        run = prequential_run(config.build(data), data)
    except ArithmeticError as exc:
        return time.perf_counter() - start, None, str(exc)
    return time.perf_counter() - start, run.seconds, None


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--second-order", action="store_true", help="also time the binary covariance learners")
    args = p.parse_args()
    rng = np.random.default_rng(args.seed)

    n, d = 274_628, 17
    binary = Dataset(rng.standard_normal((n, d)), np.where(rng.random(n) < 0.22, 1, -1), "binary")
    names = FIRST_ORDER + (("arow", "cw", "scw", "arcsogd") if args.second_order else ())
    print(f"binary stream {n} x {d}")
    for name in names:
        wall, learner_s, err = timed(LearnerConfig(name), binary)
        tail = f"failed: {err}" if err else f"learner {learner_s:.2f} s"
        print(f"  {name:>10}: wall {wall:6.2f} s  {tail}")

    n, d = 78_377, 128
    y = rng.choice([1, 2, 3], size=n, p=[0.71, 0.23, 0.06])
    multi = Dataset(rng.standard_normal((n, d)), y, "multiclass", k=3)
    print(f"multiclass stream {n} x {d}")
    for name in ("arcsmc", "arow", "pa1"):
        wall, learner_s, err = timed(LearnerConfig(name, "multiclass"), multi)
        tail = f"failed: {err}" if err else f"learner {learner_s:.2f} s"
        print(f"  {name:>10}: wall {wall:6.2f} s  {tail}")


if __name__ == "__main__":
    main()
