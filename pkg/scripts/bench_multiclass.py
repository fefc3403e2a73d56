"""ARCSMC against the multiclass baselines on a 3-class imbalanced stream.

Class priors default to (0.71, 0.23, 0.06). After the bench the script prints
each learner's minority-class weighted sum and how many paired trials ARCSMC
won against unit-cost AROW.

    python scripts/bench_multiclass.py --out-dir results/multiclass
"""

import argparse
import json
import sys
from pathlib import Path

from onlineids.cli import main
from onlineids.multiclass import MULTICLASS_LEARNERS


def parse():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--data", help="csv or sparse multiclass file (default: synthetic)")
    p.add_argument("--trials", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n", type=int, default=10000)
    p.add_argument("--dim", type=int, default=20)
    p.add_argument("--cov", choices=("diag", "full"), default="diag")
    p.add_argument("--out-dir", default="results/multiclass")
    return p.parse_args()


def minority_report(path: Path, k: int) -> None:
    algos = json.loads(path.read_text(encoding="utf-8"))["algorithms"]
    key = f"class{k}_sum"
    for name, doc in sorted(algos.items()):
        if "failure" in doc:
            print(f"{name:>10}: failed ({doc['failure']})")
        else:
            print(f"{name:>10}: minority sum {doc['mean'][key]:.4f} +/- {doc['std'][key]:.4f}")
    if "arcsmc" in algos and "arow" in algos and "finals" in algos["arow"]:
        pairs = zip(algos["arcsmc"]["finals"], algos["arow"]["finals"])
        wins = sum(a[key] > b[key] for a, b in pairs)
        print(f"arcsmc beats arow on class {k} in {wins}/{len(algos['arow']['finals'])} trials")


def run(args) -> int:
    argv = ["bench", "--algo", ",".join(sorted(MULTICLASS_LEARNERS)), "--trials", str(args.trials),
            "--seed", str(args.seed), "--cov", args.cov, "--task", "multiclass",
            "--out-dir", args.out_dir]
    if args.data:
        argv += ["--data", args.data]
    else:
        argv += ["--syn-k", "3", "--syn-priors", "0.71,0.23,0.06", "--syn-n", str(args.n),
                 "--syn-dim", str(args.dim), "--syn-noise", "2.0", "--syn-seed", "1"]
    code = main(argv)
    if code == 0:
        bench = Path(args.out_dir) / "bench.json"
        meta = json.loads(bench.read_text(encoding="utf-8"))["config"]["meta"]
        minority_report(bench, len(meta["counts"]))
    return code


if __name__ == "__main__":
    sys.exit(run(parse()))
