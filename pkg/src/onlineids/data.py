"""Dataset ingestion, synthetic imbalanced streams and cost matrices."""

from __future__ import annotations

import csv
import hashlib
import json
from collections import Counter
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterator, Mapping, Sequence

import numpy as np

from .core import ConfigurationError, CostMatrix, FeatureVector, LabeledExample


class DataFormatError(ValueError):
    pass


@dataclass(frozen=True)
class DatasetMeta:
    n_samples: int
    dim: int
    counts: dict
    source: str = ""

    def __post_init__(self):
        if self.dim <= 0:
            raise DataFormatError(f"dimension must be positive, got {self.dim}")
        if sum(self.counts.values()) != self.n_samples:
            raise DataFormatError("class counts do not sum to the sample count")

    def to_dict(self) -> dict:
        return {
            "n_samples": self.n_samples,
            "dim": self.dim,
            "counts": {str(k): v for k, v in sorted(self.counts.items())},
            "source": self.source,
        }


@dataclass
class Dataset:
    """Dense feature matrix plus labels.

    Binary datasets carry labels in {-1, +1}; multiclass ones in 1..k.
    """

    X: np.ndarray
    y: np.ndarray
    task: str
    source: str = ""
    k: int | None = None

    def __post_init__(self):
        self.X = np.ascontiguousarray(self.X, dtype=np.float64)
        self.y = np.asarray(self.y, dtype=np.int64)
        if self.X.ndim != 2 or self.X.shape[0] != self.y.shape[0]:
            raise DataFormatError(f"X has shape {self.X.shape}, y has {self.y.shape[0]} labels")
        if not np.all(np.isfinite(self.X)):
            raise DataFormatError("features must be finite")
        if self.task == "binary":
            if not np.all(np.isin(self.y, (-1, 1))):
                raise DataFormatError("binary labels must be -1 or +1")
            self.k = 2
        elif self.task == "multiclass":
            if self.y.size and self.y.min() < 1:
                raise DataFormatError("multiclass labels must be >= 1")
            top = int(self.y.max()) if self.y.size else 0
            self.k = max(self.k or 0, top)
        else:
            raise ConfigurationError(f"task must be 'binary' or 'multiclass', got {self.task!r}")
        self.X.flags.writeable = False
        self.y.flags.writeable = False

    def __len__(self) -> int:
        return self.X.shape[0]

    @property
    def dim(self) -> int:
        return self.X.shape[1]

    @property
    def meta(self) -> DatasetMeta:
        counts = Counter(self.y.tolist())
        if self.task == "multiclass":
            for c in range(1, self.k + 1):
                counts.setdefault(c, 0)
        return DatasetMeta(len(self), self.dim, dict(sorted(counts.items())), self.source)

    def class_counts(self) -> list[int]:
        """Counts ordered by class index; for binary data the order is (-1, +1)."""
        if self.task == "binary":
            return [int(np.sum(self.y == -1)), int(np.sum(self.y == 1))]
        return np.bincount(self.y, minlength=self.k + 1)[1:].tolist()

    def examples(self) -> Iterator[LabeledExample]:
        for row, label in zip(self.X, self.y.tolist()):
            yield LabeledExample(FeatureVector.from_dense(row), label)

    def subset(self, indices) -> "Dataset":
        return Dataset(self.X[indices], self.y[indices], self.task, self.source, self.k)

    def checksum(self, order: np.ndarray | None = None) -> str:
        h = hashlib.sha256()
        if order is None:
            h.update(self.X.tobytes())
            h.update(self.y.tobytes())
        else:
            h.update(np.ascontiguousarray(self.X[order]).tobytes())
            h.update(np.ascontiguousarray(self.y[order]).tobytes())
        return h.hexdigest()


def _parse_float(text: str, where: str) -> float:
    cell = text.strip()
    if not cell:
        raise DataFormatError(f"empty feature cell at {where}")
    try:
        value = float(cell)
    except ValueError:
        raise DataFormatError(f"non-numeric feature cell {cell!r} at {where}") from None
    if not np.isfinite(value):
        raise DataFormatError(f"non-finite feature cell {cell!r} at {where}")
    return value


def load_csv(
    path,
    label_col: str = "label",
    task: str = "binary",
    positive: Sequence[str] = ("attack",),
    class_map: Mapping[str, int] | None = None,
) -> Dataset:
    """Read a headed CSV where one named column holds the label.

    Binary mode maps tokens in ``positive`` to +1 and everything else to -1.
    Multiclass mode maps tokens through ``class_map``; without a map the
    sorted distinct tokens are numbered 1..k.
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DataFormatError(f"{path}: missing header row") from None
        if label_col not in header:
            raise DataFormatError(f"{path}: label column {label_col!r} not in header")
        li = header.index(label_col)
        feature_cols = [i for i in range(len(header)) if i != li]
        if not feature_cols:
            raise DataFormatError(f"{path}: no feature columns")
        rows, tokens = [], []
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise DataFormatError(
                    f"{path}: row {line_no} has {len(row)} columns, header has {len(header)}"
                )
            rows.append(
                [_parse_float(row[i], f"row {line_no}, column {header[i]!r}") for i in feature_cols]
            )
            tokens.append(row[li].strip())
    if not rows:
        raise DataFormatError(f"{path}: no data rows")

    if task == "binary":
        pos = {t.strip() for t in positive}
        y = [1 if t in pos else -1 for t in tokens]
        k = None
    elif task == "multiclass":
        if class_map is None:
            class_map = {t: i + 1 for i, t in enumerate(sorted(set(tokens)))}
        y = []
        for line_no, t in enumerate(tokens, start=2):
            if t not in class_map:
                raise DataFormatError(f"{path}: unmapped label token {t!r} at row {line_no}")
            y.append(int(class_map[t]))
        k = max(class_map.values())
    else:
        raise ConfigurationError(f"task must be 'binary' or 'multiclass', got {task!r}")
    return Dataset(np.array(rows, dtype=np.float64), np.array(y), task, str(path), k)


def write_csv(path, data: Dataset, label_col: str = "label",
              positive_token: str = "attack", negative_token: str = "normal") -> None:
    header = [f"f{j}" for j in range(data.dim)] + [label_col]
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row, label in zip(data.X.tolist(), data.y.tolist()):
            if data.task == "binary":
                token = positive_token if label == 1 else negative_token
            else:
                token = str(label)
            w.writerow([repr(v) for v in row] + [token])


def _parse_label(token: str, where: str) -> int:
    try:
        return int(token.replace("−", "-"))
    except ValueError:
        try:
            value = float(token)
        except ValueError:
            raise DataFormatError(f"unparseable label {token!r} at {where}") from None
        if value != int(value):
            raise DataFormatError(f"non-integer label {token!r} at {where}")
        return int(value)


def load_sparse(path, dim: int | None = None, task: str | None = None) -> Dataset:
    """Read ``label idx:val ...`` lines with 1-based, strictly increasing indices.

    A ``# dim=<d>`` comment fixes the dimension when ``dim`` is not given;
    otherwise it is the largest index in the file.
    """
    path = Path(path)
    labels, entries = [], []
    declared = None
    max_index = 0
    with path.open(encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if body.startswith("dim="):
                    declared = int(body[4:])
                continue
            parts = line.split()
            where = f"line {line_no}"
            labels.append(_parse_label(parts[0], where))
            idx, val = [], []
            prev = 0
            for tok in parts[1:]:
                head, sep, tail = tok.partition(":")
                if not sep:
                    raise DataFormatError(f"{path}: unparseable token {tok!r} at {where}")
                try:
                    i = int(head)
                    v = float(tail)
                except ValueError:
                    raise DataFormatError(f"{path}: unparseable token {tok!r} at {where}") from None
                if i <= prev:
                    raise DataFormatError(f"{path}: indices not strictly increasing at {where}")
                if not np.isfinite(v):
                    raise DataFormatError(f"{path}: non-finite value at {where}")
                prev = i
                idx.append(i - 1)
                val.append(v)
            max_index = max(max_index, prev)
            entries.append((idx, val))
    if not labels:
        raise DataFormatError(f"{path}: no samples")
    d = dim or declared or max_index
    if d < max_index:
        raise DataFormatError(f"{path}: index {max_index} exceeds declared dimension {d}")
    if d <= 0:
        raise DataFormatError(f"{path}: cannot infer a positive dimension")
    X = np.zeros((len(labels), d))
    for r, (idx, val) in enumerate(entries):
        X[r, idx] = val
    y = np.array(labels, dtype=np.int64)
    if task is None:
        task = "binary" if set(labels) <= {-1, 1} else "multiclass"
    return Dataset(X, y, task, str(path))


def write_sparse(path, data: Dataset) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        fh.write(f"# dim={data.dim}\n")
        for row, label in zip(data.X, data.y.tolist()):
            head = f"{label:+d}" if data.task == "binary" else str(label)
            values = row.tolist()
            feats = " ".join(f"{i + 1}:{values[i]!r}" for i in np.flatnonzero(row).tolist())
            fh.write(f"{head} {feats}".rstrip() + "\n")


def cost_matrix_from_counts(counts: Sequence[int]) -> CostMatrix:
    """Costs inversely proportional to class counts, majority class anchored at 1.

    ``c(i, j) = n_max / n_i`` for every ``j != i``.
    """
    n = np.asarray(counts, dtype=np.float64)
    if n.ndim != 1 or n.size < 2:
        raise ConfigurationError("need counts for at least two classes")
    if np.any(n < 1):
        raise ConfigurationError(f"every class needs a positive count, got {list(counts)}")
    row = n.max() / n
    costs = np.repeat(row[:, None], n.size, axis=1)
    np.fill_diagonal(costs, 0.0)
    return CostMatrix(costs)


@dataclass
class SyntheticSpec:
    """Gaussian class-conditional stream; ``means=None`` draws them from ``seed``.

    With ``k == 2`` the first class becomes label -1 and the second +1.
    """

    k: int = 2
    dim: int = 10
    priors: list = field(default_factory=lambda: [0.8, 0.2])
    means: list | None = None
    noise: float = 1.0
    flip: float = 0.0
    n: int = 1000
    seed: int = 0
    mean_scale: float = 1.0

    def __post_init__(self):
        self.priors = [float(p) for p in self.priors]
        if self.k < 2:
            raise ConfigurationError("k must be at least 2")
        if self.dim <= 0:
            raise ConfigurationError("dim must be positive")
        if self.n <= 0:
            raise ConfigurationError("sample count must be positive")
        if len(self.priors) != self.k or any(p <= 0 for p in self.priors):
            raise ConfigurationError("need k positive priors")
        if abs(sum(self.priors) - 1.0) > 1e-9:
            raise ConfigurationError(f"priors must sum to 1, got {sum(self.priors)}")
        if self.noise < 0:
            raise ConfigurationError("noise scale must be non-negative")
        if not 0 <= self.flip < 0.5:
            raise ConfigurationError("flip probability must lie in [0, 0.5)")
        if self.means is not None:
            m = np.asarray(self.means, dtype=np.float64)
            if m.shape != (self.k, self.dim):
                raise ConfigurationError(f"means must have shape ({self.k}, {self.dim})")
            self.means = m.tolist()

    @property
    def task(self) -> str:
        return "binary" if self.k == 2 else "multiclass"

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, doc: Mapping) -> "SyntheticSpec":
        known = set(cls.__dataclass_fields__)
        unknown = set(doc) - known
        if unknown:
            raise ConfigurationError(f"unknown synthetic spec fields: {sorted(unknown)}")
        return cls(**doc)

    @classmethod
    def from_json(cls, text: str) -> "SyntheticSpec":
        return cls.from_dict(json.loads(text))


def generate_synthetic(spec: SyntheticSpec) -> Dataset:
    rng = np.random.default_rng(spec.seed)
    if spec.means is None:
        means = spec.mean_scale * rng.standard_normal((spec.k, spec.dim))
    else:
        means = np.asarray(spec.means, dtype=np.float64)
    cls = rng.choice(spec.k, size=spec.n, p=np.asarray(spec.priors))
    X = means[cls] + spec.noise * rng.standard_normal((spec.n, spec.dim))
    if spec.flip > 0:
        flipped = rng.random(spec.n) < spec.flip
        shift = rng.integers(1, spec.k, size=spec.n)
        cls = np.where(flipped, (cls + shift) % spec.k, cls)
    if spec.k == 2:
        y = np.where(cls == 1, 1, -1)
    else:
        y = cls + 1
    source = "synthetic:" + json.dumps(spec.to_dict(), sort_keys=True)
    return Dataset(X, y, spec.task, source, spec.k)


class MinMaxScaler:
    """Per-feature min-max scaling fitted on a prefix; constant features map to 0."""

    def fit(self, X: np.ndarray) -> "MinMaxScaler":
        self.lo = X.min(axis=0)
        span = X.max(axis=0) - self.lo
        self.span = np.where(span > 0, span, 1.0)
        return self

    def transform(self, data: Dataset) -> Dataset:
        X = (data.X - self.lo) / self.span
        return Dataset(X, data.y, data.task, data.source, data.k)
