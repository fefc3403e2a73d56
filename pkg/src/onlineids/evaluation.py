"""Prequential (test-then-train) evaluation, imbalance-aware metrics and trials.

Sensitivity and specificity over an empty class are reported as ``None``
and skipped when averaging, never coerced to 0 or 1.
"""

from __future__ import annotations

import hashlib
import math
import time
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .binary import BINARY_LEARNERS, make_binary_learner
from .core import PARAM_GRID, ConfigurationError, CostMatrix, Hyperparams, NumericalError
from .data import Dataset, cost_matrix_from_counts
from .multiclass import MULTICLASS_LEARNERS, make_multiclass_learner

COST_SENSITIVE = {"csogd", "arcsogd", "arcsmc"}


@dataclass
class BinaryCounts:
    tp: int = 0
    tn: int = 0
    fp: int = 0
    fn: int = 0

    @property
    def total(self) -> int:
        return self.tp + self.tn + self.fp + self.fn

    def add(self, truth: int, predicted: int) -> None:
        if truth == 1:
            if predicted == 1:
                self.tp += 1
            else:
                self.fn += 1
        elif predicted == 1:
            self.fp += 1
        else:
            self.tn += 1


def sensitivity(counts: BinaryCounts) -> float | None:
    pos = counts.tp + counts.fn
    return counts.tp / pos if pos else None


def specificity(counts: BinaryCounts) -> float | None:
    neg = counts.tn + counts.fp
    return counts.tn / neg if neg else None


def weighted_sum(sens: float | None, spec: float | None, eta_p: float = 0.5,
                 eta_n: float | None = None) -> float | None:
    if eta_n is None:
        eta_n = 1.0 - eta_p
    if not (0.0 <= eta_p <= 1.0 and 0.0 <= eta_n <= 1.0) or abs(eta_p + eta_n - 1.0) > 1e-12:
        raise ConfigurationError(f"weights must lie in [0, 1] and sum to 1, got {eta_p}, {eta_n}")
    if sens is None or spec is None:
        return None
    if eta_p == 1.0:
        return sens
    if eta_n == 1.0:
        return spec
    if eta_p == eta_n:
        return (sens + spec) / 2
    return eta_p * sens + eta_n * spec


def collapse_one_vs_rest(matrix: np.ndarray, target_class: int) -> BinaryCounts:
    """Binary counts for ``target_class`` (1-based) against all other classes.

    ``matrix[i, j]`` counts samples of class i+1 predicted as class j+1.
    """
    m = np.asarray(matrix)
    k = m.shape[0]
    if not 1 <= target_class <= k:
        raise ValueError(f"class index {target_class} outside 1..{k}")
    c = target_class - 1
    tp = int(m[c, c])
    fn = int(m[c].sum()) - tp
    fp = int(m[:, c].sum()) - tp
    tn = int(m.sum()) - tp - fn - fp
    return BinaryCounts(tp, tn, fp, fn)


def one_vs_rest_metrics(matrix: np.ndarray, target_class: int, eta_p: float = 0.5):
    counts = collapse_one_vs_rest(matrix, target_class)
    sens, spec = sensitivity(counts), specificity(counts)
    return sens, spec, weighted_sum(sens, spec, eta_p)


def _mean_defined(values) -> float | None:
    vals = [v for v in values if v is not None]
    return math.fsum(vals) / len(vals) if vals else None


@dataclass
class MetricSnapshot:
    t: int
    error_rate: float
    sensitivity: float | None
    specificity: float | None
    sum: float | None
    cumulative_loss: float
    per_class: list | None = None

    def as_row(self) -> dict:
        row = {
            "round": self.t,
            "error_rate": self.error_rate,
            "sensitivity": self.sensitivity,
            "specificity": self.specificity,
            "sum": self.sum,
        }
        for c, (sens, spec, s) in enumerate(self.per_class or (), start=1):
            row[f"class{c}_sensitivity"] = sens
            row[f"class{c}_specificity"] = spec
            row[f"class{c}_sum"] = s
        return row


def binary_snapshot(t: int, counts: BinaryCounts, loss: float, eta_p: float) -> MetricSnapshot:
    sens, spec = sensitivity(counts), specificity(counts)
    return MetricSnapshot(t, (counts.fp + counts.fn) / t, sens, spec,
                          weighted_sum(sens, spec, eta_p), loss)


def multiclass_snapshot(t: int, matrix: np.ndarray, loss: float, eta_p: float) -> MetricSnapshot:
    per_class = [one_vs_rest_metrics(matrix, c, eta_p) for c in range(1, matrix.shape[0] + 1)]
    err = 1.0 - int(np.trace(matrix)) / t
    return MetricSnapshot(
        t, err,
        _mean_defined(p[0] for p in per_class),
        _mean_defined(p[1] for p in per_class),
        _mean_defined(p[2] for p in per_class),
        loss, per_class,
    )


@dataclass
class RunResult:
    snapshots: list
    counts: object
    cumulative_loss: float
    seconds: float
    learner: object

    @property
    def final(self) -> MetricSnapshot:
        return self.snapshots[-1]


def prequential_run(learner, data: Dataset, stride: int = 100, eta_p: float = 0.5,
                    order: np.ndarray | None = None) -> RunResult:
    """Predict each sample, score the prediction, then learn from it.

    Snapshots are taken every ``stride`` rounds and at the end of the stream.
    ``seconds`` covers only the learner's predict+update calls.
    """
    if len(data) == 0:
        raise ConfigurationError("empty stream")
    if stride < 1:
        raise ConfigurationError("stride must be positive")
    if data.dim != learner.dim:
        raise ConfigurationError(f"learner dim {learner.dim} != data dim {data.dim}")
    X = data.X if order is None else data.X[order]
    labels = (data.y if order is None else data.y[order]).tolist()
    multiclass = learner.task == "multiclass"
    if multiclass != (data.task == "multiclass"):
        raise ConfigurationError(f"{learner.task} learner on {data.task} data")
    if multiclass and data.k > learner.k:
        raise ConfigurationError(f"data has {data.k} classes, learner {learner.k}")

    n = len(labels)
    step = learner.step
    clock = time.perf_counter
    snapshots = []
    total_loss = 0.0
    elapsed = 0.0
    if multiclass:
        matrix = np.zeros((learner.k, learner.k), dtype=np.int64)
        snap = multiclass_snapshot
        counts = matrix
    else:
        counts = BinaryCounts()
        snap = binary_snapshot
    for i in range(n):
        y = labels[i]
        start = clock()
        out = step(X[i], y)
        elapsed += clock() - start
        total_loss += out.loss
        if multiclass:
            matrix[y - 1, out.label - 1] += 1
        else:
            counts.add(y, out.label)
        t = i + 1
        if t % stride == 0 or t == n:
            snapshots.append(snap(t, counts, total_loss, eta_p))
    return RunResult(snapshots, counts, total_loss, elapsed, learner)


@dataclass
class LearnerConfig:
    """Everything needed to build a fresh learner for a dataset.

    ``cost`` applies to ARCSMC only: ``"inverse-count"`` derives the matrix
    from the dataset's class counts, ``"unit"`` uses all-ones off-diagonal
    costs and ``"matrix"`` uses ``cost_matrix`` verbatim.
    """

    algorithm: str
    task: str = "binary"
    params: Hyperparams = field(default_factory=Hyperparams)
    cost: str = "inverse-count"
    cost_matrix: list | None = None

    def __post_init__(self):
        self.algorithm = self.algorithm.lower()
        table = BINARY_LEARNERS if self.task == "binary" else MULTICLASS_LEARNERS
        if self.task not in ("binary", "multiclass"):
            raise ConfigurationError(f"task must be 'binary' or 'multiclass', got {self.task!r}")
        if self.algorithm not in table:
            raise ConfigurationError(
                f"unknown {self.task} algorithm {self.algorithm!r}; choose from {sorted(table)}"
            )
        if self.cost not in ("unit", "inverse-count", "matrix"):
            raise ConfigurationError(f"unknown cost scheme {self.cost!r}")

    @property
    def cost_sensitive(self) -> bool:
        return self.algorithm in COST_SENSITIVE

    def costs_for(self, data: Dataset) -> CostMatrix:
        if self.cost == "unit":
            return CostMatrix.unit(data.k)
        if self.cost == "matrix":
            if self.cost_matrix is None:
                raise ConfigurationError("cost scheme 'matrix' needs cost_matrix")
            return CostMatrix(self.cost_matrix)
        return cost_matrix_from_counts(data.class_counts())

    def build(self, data: Dataset, costs: CostMatrix | None = None):
        if self.task != data.task:
            raise ConfigurationError(f"{self.task} configuration on {data.task} data")
        if self.task == "binary":
            return make_binary_learner(self.algorithm, data.dim, self.params)
        if self.algorithm == "arcsmc" and costs is None:
            costs = self.costs_for(data)
        return make_multiclass_learner(self.algorithm, data.k, data.dim, self.params, costs)

    def with_params(self, **changes) -> "LearnerConfig":
        return LearnerConfig(self.algorithm, self.task, self.params.replace(**changes),
                             self.cost, self.cost_matrix)

    def to_dict(self) -> dict:
        return {
            "algorithm": self.algorithm,
            "task": self.task,
            "params": self.params.to_dict(),
            "cost": self.cost,
            "cost_matrix": self.cost_matrix,
        }


METRICS = ("error_rate", "sensitivity", "specificity", "sum", "cumulative_loss")


def final_metrics(snapshot: MetricSnapshot) -> dict:
    out = {m: getattr(snapshot, m) for m in METRICS}
    if snapshot.per_class is not None:
        for c, (sens, spec, s) in enumerate(snapshot.per_class, start=1):
            out[f"class{c}_sensitivity"] = sens
            out[f"class{c}_specificity"] = spec
            out[f"class{c}_sum"] = s
    return out


def population_stats(values: Sequence[float | None]) -> tuple[float | None, float | None]:
    """Mean and population standard deviation over the defined values."""
    vals = [v for v in values if v is not None]
    if not vals:
        return None, None
    mean = _mean_defined(vals)
    return mean, math.sqrt(math.fsum((v - mean) ** 2 for v in vals) / len(vals))


def trial_order(n: int, seed: int) -> np.ndarray:
    return np.random.default_rng(seed).permutation(n)


def stream_checksum(data: Dataset, order: np.ndarray) -> str:
    h = hashlib.sha256(data.checksum().encode())
    h.update(np.ascontiguousarray(order, dtype=np.int64).tobytes())
    return h.hexdigest()


@dataclass
class TrialReport:
    algorithm: str
    trials: int
    master_seed: int
    mean: dict
    std: dict
    finals: list
    curve: list
    seconds: list
    checksums: list
    failure: str | None = None

    def summary(self) -> dict:
        """Deterministic part of the report (no timings)."""
        return {
            "algorithm": self.algorithm,
            "trials": self.trials,
            "master_seed": self.master_seed,
            "mean": self.mean,
            "std": self.std,
            "finals": self.finals,
            "stream_checksums": self.checksums,
        }


def _average_curves(runs: list) -> list:
    rounds = [s.t for s in runs[0].snapshots]
    curve = []
    for idx, t in enumerate(rounds):
        rows = [r.snapshots[idx].as_row() for r in runs]
        avg = {"round": t}
        for key in rows[0]:
            if key != "round":
                avg[key] = _mean_defined(row[key] for row in rows)
        curve.append(avg)
    return curve


def trial_suite(config: LearnerConfig, data: Dataset, trials: int = 10, master_seed: int = 0,
                stride: int = 100, eta_p: float = 0.5) -> TrialReport:
    """Run ``trials`` prequential passes, trial i shuffled with seed ``master_seed + i``."""
    if trials < 1:
        raise ConfigurationError("trials must be >= 1")
    if len(data) == 0:
        raise ConfigurationError("empty dataset")
    costs = config.costs_for(data) if config.algorithm == "arcsmc" else None
    runs, checksums = [], []
    for i in range(trials):
        order = trial_order(len(data), master_seed + i)
        checksums.append(stream_checksum(data, order))
        runs.append(prequential_run(config.build(data, costs), data, stride, eta_p, order))
    finals = [final_metrics(r.final) for r in runs]
    mean, std = {}, {}
    for key in finals[0]:
        mean[key], std[key] = population_stats([f[key] for f in finals])
    return TrialReport(
        algorithm=config.algorithm,
        trials=trials,
        master_seed=master_seed,
        mean=mean,
        std=std,
        finals=finals,
        curve=_average_curves(runs),
        seconds=[r.seconds for r in runs],
        checksums=checksums,
    )


@dataclass
class GridResult:
    param: str | None
    best: float | None
    params: Hyperparams
    criterion: str
    scores: list
    failures: list


def validation_prefix(data: Dataset, fraction: float = 0.2) -> Dataset:
    """First ``fraction`` of a fixed seed-0 shuffle."""
    if not 0.0 < fraction < 1.0:
        raise ConfigurationError("validation fraction must lie in (0, 1)")
    order = trial_order(len(data), 0)
    size = max(1, int(math.floor(fraction * len(data))))
    return data.subset(order[:size])


def selection_key(criterion: str, snapshot: MetricSnapshot) -> float:
    """Lower is better; an undefined weighted sum ranks last."""
    if criterion == "sum":
        return -snapshot.sum if snapshot.sum is not None else math.inf
    return snapshot.error_rate


def grid_search(config: LearnerConfig, data: Dataset, grid: Sequence[float] = PARAM_GRID,
                param: str | None = None, validation_fraction: float = 0.2,
                stride: int = 100, eta_p: float = 0.5) -> GridResult:
    """Tune one hyperparameter on the validation prefix.

    Cost-sensitive learners are selected by weighted sum, the rest by error
    rate; ties go to the smaller parameter value.
    """
    if len(grid) == 0:
        raise ConfigurationError("empty grid")
    criterion = "sum" if config.cost_sensitive else "error_rate"
    valid = validation_prefix(data, validation_fraction)
    costs = config.costs_for(data) if config.algorithm == "arcsmc" else None
    if param is None:
        param = config.build(valid, costs).tuned_param
    if param is None:
        run = prequential_run(config.build(valid, costs), valid, stride, eta_p)
        score = run.final.sum if criterion == "sum" else run.final.error_rate
        return GridResult(None, None, config.params, criterion, [(None, score)], [])

    scores, failures = [], []
    best_value, best_key = None, math.inf
    for value in sorted(set(float(v) for v in grid)):
        try:
            candidate = config.with_params(**{param: value})
            run = prequential_run(candidate.build(valid, costs), valid, stride, eta_p)
        except (ConfigurationError, NumericalError, FloatingPointError) as exc:
            failures.append((value, str(exc)))
            continue
        key = selection_key(criterion, run.final)
        scores.append((value, run.final.sum if criterion == "sum" else run.final.error_rate))
        if key < best_key:
            best_value, best_key = value, key
    if best_value is None:
        if scores:
            best_value = scores[0][0]
        else:
            detail = "; ".join(f"{v}: {msg}" for v, msg in failures)
            raise ConfigurationError(f"every grid point failed: {detail}")
    return GridResult(param, best_value, config.params.replace(**{param: best_value}),
                      criterion, scores, failures)
