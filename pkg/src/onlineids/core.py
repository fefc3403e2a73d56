"""Shared numeric types, model containers and scoring primitives.

Every learner in the package scores with ``dot`` and predicts binary labels
with ``sign`` where a zero score maps to -1 (the "normal" class).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields
from typing import Mapping, NamedTuple, Sequence, Union

import numpy as np

PARAM_GRID = (0.001, 0.01, 0.1, 1.0, 10.0, 100.0, 1000.0)


class DimensionError(ValueError):
    pass


class ConfigurationError(ValueError):
    pass


class NumericalError(ArithmeticError):
    def __init__(self, message: str, round_index: int | None = None):
        if round_index is not None:
            message = f"round {round_index}: {message}"
        super().__init__(message)
        self.round_index = round_index


class FeatureVector:
    """Immutable real vector of dimension ``dim`` stored as sorted (index, value) pairs."""

    __slots__ = ("indices", "values", "dim", "_dense")

    def __init__(self, indices: Sequence[int], values: Sequence[float], dim: int):
        idx = np.asarray(indices, dtype=np.int64).reshape(-1)
        val = np.asarray(values, dtype=np.float64).reshape(-1)
        if dim <= 0:
            raise DimensionError(f"dim must be positive, got {dim}")
        if idx.shape != val.shape:
            raise ValueError("indices and values differ in length")
        if idx.size:
            if idx.min() < 0 or idx.max() >= dim:
                raise DimensionError(f"index out of range for dim {dim}")
            order = np.argsort(idx, kind="stable")
            idx, val = idx[order], val[order]
            if np.any(np.diff(idx) == 0):
                raise ValueError("duplicate indices")
        if not np.all(np.isfinite(val)):
            raise ValueError("feature values must be finite")
        idx.flags.writeable = False
        val.flags.writeable = False
        self.indices = idx
        self.values = val
        self.dim = int(dim)
        self._dense = None

    @classmethod
    def from_dense(cls, x: Sequence[float]) -> "FeatureVector":
        arr = np.asarray(x, dtype=np.float64).reshape(-1)
        nz = np.flatnonzero(arr)
        return cls(nz, arr[nz], arr.size)

    @classmethod
    def from_dict(cls, entries: Mapping[int, float], dim: int) -> "FeatureVector":
        keys = list(entries)
        return cls(keys, [entries[k] for k in keys], dim)

    def dense(self) -> np.ndarray:
        if self._dense is None:
            out = np.zeros(self.dim)
            out[self.indices] = self.values
            out.flags.writeable = False
            self._dense = out
        return self._dense

    def squared_norm(self) -> float:
        return float(self.values @ self.values)

    def __len__(self) -> int:
        return self.dim

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, FeatureVector):
            return NotImplemented
        return (
            self.dim == other.dim
            and np.array_equal(self.indices, other.indices)
            and np.array_equal(self.values, other.values)
        )

    def __repr__(self) -> str:
        entries = ", ".join(f"{i}: {v:g}" for i, v in zip(self.indices, self.values))
        return f"FeatureVector({{{entries}}}, dim={self.dim})"


Vector = Union[np.ndarray, FeatureVector, Sequence[float]]


class LabeledExample(NamedTuple):
    x: FeatureVector
    y: int


def as_array(x: Vector) -> np.ndarray:
    """Dense float64 view of ``x``; arrays are passed through without copying."""
    if isinstance(x, np.ndarray):
        return x if x.dtype == np.float64 else x.astype(np.float64)
    if isinstance(x, FeatureVector):
        return x.dense()
    return np.asarray(x, dtype=np.float64)


def dot(w: Vector, x: Vector) -> float:
    w = as_array(w)
    if isinstance(x, FeatureVector):
        if w.shape[0] != x.dim:
            raise DimensionError(f"weights have length {w.shape[0]}, vector has dim {x.dim}")
        # touches only stored entries
        return float(w[x.indices] @ x.values)
    x = as_array(x)
    if w.shape[0] != x.shape[0]:
        raise DimensionError(f"weights have length {w.shape[0]}, vector has dim {x.shape[0]}")
    return float(w @ x)


def sign(score: float) -> int:
    return 1 if score > 0 else -1


def predict_binary(w, x: Vector) -> tuple[int, float]:
    """Return ``(label, score)``; Gaussian models predict with their mean."""
    if isinstance(w, GaussianLinearModel):
        w = w.mean
    elif isinstance(w, LinearModel):
        w = w.weights
    score = dot(w, x)
    return sign(score), score


def margin(w: Vector, x: Vector, y: int) -> float:
    check_binary_label(y)
    return y * dot(w, x)


def hinge_loss(w: Vector, x: Vector, y: int) -> float:
    return max(0.0, 1.0 - margin(w, x, y))


def check_binary_label(y: int) -> int:
    if y != 1 and y != -1:
        raise ValueError(f"binary label must be -1 or +1, got {y!r}")
    return y


def check_class_label(y: int, k: int) -> int:
    if not 1 <= y <= k:
        raise ValueError(f"class label must lie in 1..{k}, got {y!r}")
    return y


@dataclass
class LinearModel:
    weights: np.ndarray

    @classmethod
    def zeros(cls, dim: int) -> "LinearModel":
        return cls(np.zeros(dim))

    @property
    def dim(self) -> int:
        return self.weights.shape[0]


@dataclass
class GaussianLinearModel:
    """Gaussian over weights. ``cov`` is d x d in full mode, a length-d vector in diag mode."""

    mean: np.ndarray
    cov: np.ndarray
    mode: str = "diag"

    @classmethod
    def initial(cls, dim: int, mode: str = "diag") -> "GaussianLinearModel":
        return cls(np.zeros(dim), initial_covariance(dim, mode), mode)

    @property
    def dim(self) -> int:
        return self.mean.shape[0]

    def full_cov(self) -> np.ndarray:
        return np.diag(self.cov) if self.mode == "diag" else self.cov


@dataclass
class MulticlassModel:
    """k x d weight matrix (row i scores class i+1) with an optional shared covariance."""

    W: np.ndarray
    cov: np.ndarray | None = None
    mode: str = "diag"

    @classmethod
    def zeros(cls, k: int, dim: int, covariance: bool = False, mode: str = "diag") -> "MulticlassModel":
        cov = initial_covariance(dim, mode) if covariance else None
        return cls(np.zeros((k, dim)), cov, mode)

    @property
    def k(self) -> int:
        return self.W.shape[0]

    @property
    def dim(self) -> int:
        return self.W.shape[1]


def initial_covariance(dim: int, mode: str) -> np.ndarray:
    if mode == "diag":
        return np.ones(dim)
    if mode == "full":
        return np.eye(dim)
    raise ConfigurationError(f"covariance mode must be 'diag' or 'full', got {mode!r}")


class CostMatrix:
    """k x k misclassification costs: zero diagonal, positive finite off-diagonal."""

    def __init__(self, costs):
        c = np.array(costs, dtype=np.float64)
        if c.ndim != 2 or c.shape[0] != c.shape[1] or c.shape[0] < 2:
            raise ConfigurationError(f"cost matrix must be square with k >= 2, got shape {c.shape}")
        if np.any(np.diag(c) != 0.0):
            raise ConfigurationError("cost matrix diagonal must be exactly zero")
        off = c[~np.eye(c.shape[0], dtype=bool)]
        if not np.all(np.isfinite(off)) or np.any(off <= 0):
            raise ConfigurationError("off-diagonal costs must be positive and finite")
        c.flags.writeable = False
        self.costs = c

    @classmethod
    def unit(cls, k: int) -> "CostMatrix":
        return cls(np.ones((k, k)) - np.eye(k))

    @property
    def k(self) -> int:
        return self.costs.shape[0]

    def __call__(self, true_class: int, predicted_class: int) -> float:
        """Cost of predicting ``predicted_class`` for a sample of ``true_class`` (1-based)."""
        return float(self.costs[true_class - 1, predicted_class - 1])

    def tolist(self) -> list[list[float]]:
        return self.costs.tolist()

    def __repr__(self) -> str:
        return f"CostMatrix({self.tolist()})"


@dataclass
class Hyperparams:
    """Learner knobs.

    ``phi`` is the confidence quantile used by CW and SCW, i.e. the inverse
    normal CDF of the confidence level. ``rho=None`` makes the cost-sensitive
    binary learners track the running negative/positive ratio.
    """

    C: float = 1.0
    gamma: float = 1.0
    lam: float = 0.1
    rho: float | None = None
    phi: float = 1.0
    alpha: float = 0.9
    cov_mode: str = "diag"
    literal_label_scaling: bool = False

    def __post_init__(self):
        for name in ("C", "gamma", "lam", "phi"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ConfigurationError(f"{name} must be positive and finite, got {value!r}")
        if self.rho is not None and not (math.isfinite(self.rho) and self.rho > 0):
            raise ConfigurationError(f"rho must be positive, got {self.rho!r}")
        if not 0 < self.alpha <= 1:
            raise ConfigurationError(f"alpha must lie in (0, 1], got {self.alpha!r}")
        initial_covariance(1, self.cov_mode)

    def replace(self, **changes) -> "Hyperparams":
        current = {f.name: getattr(self, f.name) for f in fields(self)}
        current.update(changes)
        return Hyperparams(**current)

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}
