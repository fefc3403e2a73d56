"""Command-line front end: ``run``, ``bench``, ``tune`` and ``gen``.

Every artifact embeds the resolved configuration and master seed. Summary
JSON files hold only deterministic content; learner timings go to a
separate ``timing.json`` (run) or the ``time_*`` columns (bench).
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from pathlib import Path

from .core import PARAM_GRID, ConfigurationError, Hyperparams, NumericalError
from .data import (
    DataFormatError,
    Dataset,
    MinMaxScaler,
    SyntheticSpec,
    generate_synthetic,
    load_csv,
    load_sparse,
    write_sparse,
)
from .evaluation import (
    LearnerConfig,
    TrialReport,
    grid_search,
    population_stats,
    trial_suite,
    validation_prefix,
)

log = logging.getLogger("onlineids")

SEED_ENV = "ONLINEIDS_SEED"
PARAM_NAMES = ("C", "gamma", "lam", "rho", "phi", "alpha")


def _floats(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v.strip()]


def _param(text: str) -> tuple[str, float]:
    name, sep, value = text.partition("=")
    if not sep or name not in PARAM_NAMES:
        raise argparse.ArgumentTypeError(f"expected NAME=VALUE with NAME in {PARAM_NAMES}")
    return name, float(value)


def _add_data_args(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("dataset")
    g.add_argument("--data", help="dataset file; omit to use a synthetic stream")
    g.add_argument("--format", choices=("csv", "sparse"), help="default: from file extension")
    g.add_argument("--label-col", default="label")
    g.add_argument("--positive", default="attack", help="comma-separated positive label tokens (csv, binary)")
    g.add_argument("--class-map", help="JSON object mapping label tokens to 1..k (csv, multiclass)")
    g.add_argument("--dim", type=int, help="declared dimension for sparse files")
    g.add_argument("--task", choices=("binary", "multiclass"))
    g.add_argument("--scale", action="store_true", help="min-max scale, fitted on the validation prefix")
    s = p.add_argument_group("synthetic stream")
    s.add_argument("--synthetic", help="SyntheticSpec as a JSON document or a path to one")
    s.add_argument("--syn-n", type=int)
    s.add_argument("--syn-k", type=int)
    s.add_argument("--syn-dim", type=int)
    s.add_argument("--syn-priors", type=_floats)
    s.add_argument("--syn-noise", type=float)
    s.add_argument("--syn-flip", type=float)
    s.add_argument("--syn-seed", type=int)
    s.add_argument("--syn-mean-scale", type=float)


def _add_learner_args(p: argparse.ArgumentParser, many: bool = False) -> None:
    g = p.add_argument_group("learner")
    if many:
        g.add_argument("--algo", required=True, help="comma-separated algorithm names")
    else:
        g.add_argument("--algo", required=True)
    g.add_argument("--param", type=_param, action="append", default=[], metavar="NAME=VALUE")
    g.add_argument("--cov", choices=("diag", "full"), default="diag")
    g.add_argument("--cost", choices=("unit", "inverse-count", "file"), default="inverse-count")
    g.add_argument("--cost-file", help="JSON k x k matrix for --cost file")
    g.add_argument("--literal-label-scaling", action="store_true",
                   help="ARCSMC: multiply the step by the class index")
    e = p.add_argument_group("evaluation")
    e.add_argument("--trials", type=int, default=10)
    e.add_argument("--seed", type=int, help=f"master seed (fallback: ${SEED_ENV}, then 0)")
    e.add_argument("--stride", type=int, default=100)
    e.add_argument("--eta-p", type=float, default=0.5)
    e.add_argument("--grid", type=_floats, default=list(PARAM_GRID))
    e.add_argument("--tune-param", help="parameter to tune (default: the algorithm's primary one)")
    e.add_argument("--val-frac", type=float, default=0.2)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="onlineids", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="repeated shuffled prequential runs of one algorithm")
    _add_data_args(run)
    _add_learner_args(run)
    run.add_argument("--tune", action="store_true", help="grid-search the primary parameter first")
    run.add_argument("--out-dir", default="out")

    bench = sub.add_parser("bench", help="paired comparison of several algorithms")
    _add_data_args(bench)
    _add_learner_args(bench, many=True)
    bench.add_argument("--tune", action="store_true")
    bench.add_argument("--out-dir", default="out")

    tune = sub.add_parser("tune", help="grid search on the validation prefix")
    _add_data_args(tune)
    _add_learner_args(tune)
    tune.add_argument("--out-dir", default="out")

    gen = sub.add_parser("gen", help="write a synthetic stream in sparse format")
    _add_data_args(gen)
    gen.add_argument("--out", required=True)
    return parser


def resolve_seed(args) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get(SEED_ENV)
    if env:
        try:
            return int(env)
        except ValueError:
            raise ConfigurationError(f"${SEED_ENV} must be an integer, got {env!r}") from None
    return 0


def synthetic_spec(args) -> SyntheticSpec:
    doc = {}
    if args.synthetic:
        text = args.synthetic
        if not text.lstrip().startswith("{"):
            text = Path(text).read_text(encoding="utf-8")
        doc = json.loads(text)
    inline = {
        "n": args.syn_n, "k": args.syn_k, "dim": args.syn_dim, "priors": args.syn_priors,
        "noise": args.syn_noise, "flip": args.syn_flip, "seed": args.syn_seed,
        "mean_scale": args.syn_mean_scale,
    }
    doc.update({k: v for k, v in inline.items() if v is not None})
    if "k" in doc and "priors" not in doc:
        doc["priors"] = [1.0 / doc["k"]] * doc["k"]
    return SyntheticSpec.from_dict(doc)


def load_dataset(args) -> tuple[Dataset, dict]:
    if not args.data:
        spec = synthetic_spec(args)
        data = generate_synthetic(spec)
        source = {"synthetic": spec.to_dict()}
    else:
        path = Path(args.data)
        if not path.exists():
            raise ConfigurationError(f"dataset {path} does not exist")
        fmt = args.format or ("csv" if path.suffix.lower() == ".csv" else "sparse")
        if fmt == "csv":
            class_map = json.loads(args.class_map) if args.class_map else None
            data = load_csv(path, args.label_col, args.task or "binary",
                            [t for t in args.positive.split(",")], class_map)
        else:
            data = load_sparse(path, args.dim, args.task)
        source = {"path": str(path), "format": fmt, "label_col": args.label_col}
    if args.task and data.task != args.task:
        raise ConfigurationError(f"--task {args.task} but the dataset is {data.task}")
    if getattr(args, "scale", False):
        prefix = validation_prefix(data)
        data = MinMaxScaler().fit(prefix.X).transform(data)
        source["scaled"] = "minmax"
    return data, source


def learner_config(args, algorithm: str, data: Dataset) -> LearnerConfig:
    params = Hyperparams(cov_mode=args.cov, literal_label_scaling=args.literal_label_scaling,
                         **dict(args.param))
    cost, matrix = args.cost, None
    if cost == "file":
        if not args.cost_file:
            raise ConfigurationError("--cost file needs --cost-file")
        matrix = json.loads(Path(args.cost_file).read_text(encoding="utf-8"))
        cost = "matrix"
    return LearnerConfig(algorithm, data.task, params, cost, matrix)


def resolved_config(args, seed: int, source: dict, data: Dataset) -> dict:
    keys = ("algo", "param", "cov", "cost", "cost_file", "literal_label_scaling", "trials",
            "stride", "eta_p", "grid", "tune_param", "val_frac", "tune")
    cfg = {k: getattr(args, k) for k in keys if hasattr(args, k)}
    cfg["param"] = dict(cfg.get("param", []))
    cfg["command"] = args.command
    cfg["master_seed"] = seed
    cfg["dataset"] = source
    cfg["meta"] = data.meta.to_dict()
    return cfg


def dump_json(path: Path, doc) -> None:
    path.write_text(json.dumps(doc, indent=2, sort_keys=True, allow_nan=False) + "\n", encoding="utf-8")


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(float(v))
    return str(v)


def write_table(path: Path, rows: list, config: dict) -> None:
    columns = list(rows[0]) if rows else []
    for row in rows[1:]:
        for key in row:
            if key not in columns:
                columns.append(key)
    with path.open("w", newline="", encoding="utf-8") as fh:
        fh.write("# config: " + json.dumps(config, sort_keys=True) + "\n")
        w = csv.writer(fh)
        w.writerow(columns)
        for row in rows:
            w.writerow([_cell(row.get(c)) for c in columns])


def read_table(path) -> tuple[dict, list]:
    """Inverse of ``write_table``: returns (config, rows as dicts of strings)."""
    with Path(path).open(newline="", encoding="utf-8") as fh:
        first = fh.readline()
        config = json.loads(first[len("# config: "):])
        rows = list(csv.DictReader(fh))
    return config, rows


def _tune(config: LearnerConfig, data: Dataset, args) -> tuple[LearnerConfig, dict]:
    result = grid_search(config, data, args.grid, args.tune_param, args.val_frac,
                         args.stride, args.eta_p)
    doc = {
        "param": result.param,
        "best": result.best,
        "criterion": result.criterion,
        "scores": [{"value": v, "score": s} for v, s in result.scores],
        "failures": [{"value": v, "error": e} for v, e in result.failures],
    }
    tuned = LearnerConfig(config.algorithm, config.task, result.params, config.cost,
                          config.cost_matrix)
    return tuned, doc


def _run_suite(config: LearnerConfig, data: Dataset, args, seed: int) -> TrialReport:
    return trial_suite(config, data, args.trials, seed, args.stride, args.eta_p)


def cmd_run(args) -> int:
    seed = resolve_seed(args)
    data, source = load_dataset(args)
    config = learner_config(args, args.algo, data)
    tuning = None
    if args.tune:
        config, tuning = _tune(config, data, args)
    report = _run_suite(config, data, args, seed)
    resolved = resolved_config(args, seed, source, data)
    resolved["learner"] = config.to_dict()
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    summary = {"config": resolved, **report.summary(), "final": report.curve[-1]}
    if tuning is not None:
        summary["tuning"] = tuning
    dump_json(out / "summary.json", summary)
    write_table(out / "curve.csv", report.curve, resolved)
    mean, std = population_stats(report.seconds)
    dump_json(out / "timing.json", {"config": resolved, "seconds": report.seconds,
                                    "mean": mean, "std": std})
    log.info("wrote %s", out)
    return 0


def bench_row(report: TrialReport) -> dict:
    row = {"algorithm": report.algorithm, "status": "ok"}
    for key in report.mean:
        if key == "cumulative_loss":
            continue
        row[f"{key}_mean"] = report.mean[key]
        row[f"{key}_std"] = report.std[key]
    row["time_mean"], row["time_std"] = population_stats(report.seconds)
    return row


def cmd_bench(args) -> int:
    seed = resolve_seed(args)
    data, source = load_dataset(args)
    algorithms = [a.strip() for a in args.algo.split(",") if a.strip()]
    if not algorithms:
        raise ConfigurationError("--algo needs at least one algorithm")
    resolved = resolved_config(args, seed, source, data)
    rows, summaries = [], {}
    for name in algorithms:
        try:
            config = learner_config(args, name, data)
            tuning = None
            if args.tune:
                config, tuning = _tune(config, data, args)
            report = _run_suite(config, data, args, seed)
        except (ConfigurationError, NumericalError, FloatingPointError) as exc:
            log.warning("%s failed: %s", name, exc)
            rows.append({"algorithm": name, "status": f"failed: {exc}"})
            summaries[name] = {"failure": str(exc)}
            continue
        rows.append(bench_row(report))
        summaries[name] = {"learner": config.to_dict(), **report.summary()}
        if tuning is not None:
            summaries[name]["tuning"] = tuning
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_table(out / "bench.csv", rows, resolved)
    dump_json(out / "bench.json", {"config": resolved, "algorithms": summaries})
    return 0


def cmd_tune(args) -> int:
    seed = resolve_seed(args)
    data, source = load_dataset(args)
    config = learner_config(args, args.algo, data)
    tuned, doc = _tune(config, data, args)
    resolved = resolved_config(args, seed, source, data)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    dump_json(out / "tune.json", {"config": resolved, **doc, "params": tuned.params.to_dict()})
    return 0


def cmd_gen(args) -> int:
    spec = synthetic_spec(args)
    data = generate_synthetic(spec)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_sparse(out, data)
    meta = {"spec": spec.to_dict(), "meta": data.meta.to_dict()}
    dump_json(out.with_name(out.name + ".json"), meta)
    return 0


COMMANDS = {"run": cmd_run, "bench": cmd_bench, "tune": cmd_tune, "gen": cmd_gen}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (ConfigurationError, DataFormatError, ValueError) as exc:
        print(f"onlineids {args.command}: configuration error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"onlineids {args.command}: numerical error: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"onlineids {args.command}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
