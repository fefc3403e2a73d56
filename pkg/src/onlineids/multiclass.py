"""Multiclass online learners over a k x d weight matrix.

Class labels are 1-based; row ``i - 1`` of ``W`` scores class ``i``. Ties in
both prediction and rival selection resolve to the smallest class index.
Every learner moves exactly two rows per update, the true class up and the
most confused rival down, so the sum of the rows never changes.
"""

from __future__ import annotations

import math

import numpy as np

from .binary import StepOutcome, scw_coefficients
from .core import (
    ConfigurationError,
    CostMatrix,
    DimensionError,
    Hyperparams,
    MulticlassModel,
    NumericalError,
    as_array,
    check_class_label,
    initial_covariance,
)


def _weights(model) -> np.ndarray:
    if isinstance(model, np.ndarray):
        return model
    return model.W


def class_scores(model, x) -> np.ndarray:
    W = _weights(model)
    x = as_array(x)
    if x.shape[0] != W.shape[1]:
        raise DimensionError(f"model has dim {W.shape[1]}, vector has dim {x.shape[0]}")
    return W @ x


def mc_predict(model, x) -> tuple[int, np.ndarray]:
    """Return ``(label, scores)`` with label = 1 + argmax of the class scores."""
    scores = class_scores(model, x)
    return int(np.argmax(scores)) + 1, scores


def rival_of(scores: np.ndarray, y: int) -> int:
    """Highest-scoring class other than ``y`` (1-based, smallest index on ties)."""
    best, best_score = 0, -math.inf
    for i, s in enumerate(scores.tolist()):
        if i != y - 1 and s > best_score:
            best, best_score = i, s
    return best + 1


def most_confused_class(model, x, y: int) -> int:
    W = _weights(model)
    if W.shape[0] < 2:
        raise ConfigurationError("need at least two classes")
    check_class_label(y, W.shape[0])
    return rival_of(class_scores(W, x), y)


def mc_hinge_loss(model, x, y: int) -> float:
    scores = class_scores(model, x)
    check_class_label(y, scores.shape[0])
    p = rival_of(scores, y)
    return max(0.0, 1.0 - (scores[y - 1] - scores[p - 1]))


def cs_mc_loss(model, x, y: int, costs: CostMatrix | None) -> float:
    """Cost-sensitive multiclass hinge loss against the most confused rival."""
    if costs is None:
        raise ConfigurationError("cost-sensitive loss needs a cost matrix")
    scores = class_scores(model, x)
    check_class_label(y, scores.shape[0])
    p = rival_of(scores, y)
    return max(0.0, costs(y, p) - (scores[y - 1] - scores[p - 1]))


class MulticlassLearner:
    name = "base"
    task = "multiclass"
    second_order = False
    cost_sensitive = False
    tuned_param: str | None = None

    def __init__(self, k: int, dim: int, params: Hyperparams | None = None):
        if k < 2:
            raise ConfigurationError(f"need k >= 2 classes, got {k}")
        if dim <= 0:
            raise DimensionError(f"dim must be positive, got {dim}")
        self.k = int(k)
        self.dim = int(dim)
        self.params = params or Hyperparams()
        self.t = 0
        self.degenerate = 0
        self.W = np.zeros((self.k, self.dim))

    @property
    def model(self) -> MulticlassModel:
        return MulticlassModel(self.W, getattr(self, "cov", None), getattr(self, "mode", "diag"))

    def state(self) -> dict:
        return {"W": self.W.copy()}

    def predict(self, x) -> tuple[int, np.ndarray]:
        return mc_predict(self.W, x)

    def step(self, x, y: int) -> StepOutcome:
        x = as_array(x)
        if x.shape[0] != self.dim:
            raise DimensionError(f"round {self.t + 1}: expected dim {self.dim}, got {x.shape[0]}")
        if not 1 <= y <= self.k:
            raise ValueError(f"round {self.t + 1}: class label must lie in 1..{self.k}, got {y!r}")
        self.t += 1
        scores = self.W @ x
        label = int(np.argmax(scores)) + 1
        p = rival_of(scores, y)
        loss, updated = self._learn(x, y, scores, label, p)
        return StepOutcome(label, float(scores[label - 1]), loss, updated)

    def _learn(self, x, y, scores, label, p) -> tuple[float, bool]:
        raise NotImplementedError

    def _move(self, y: int, p: int, delta: np.ndarray) -> None:
        self.W[y - 1] += delta
        self.W[p - 1] -= delta


class MCPerceptron(MulticlassLearner):
    name = "perceptron"

    def _learn(self, x, y, scores, label, p):
        if label == y:
            return 0.0, False
        self._move(y, p, x)
        return 1.0, True


class MCOGD(MulticlassLearner):
    name = "ogd"
    tuned_param = "lam"

    def _learn(self, x, y, scores, label, p):
        loss = 1.0 - (scores[y - 1] - scores[p - 1])
        if loss <= 0.0:
            return 0.0, False
        self._move(y, p, (self.params.lam / math.sqrt(self.t)) * x)
        return float(loss), True


class MCPassiveAggressive(MulticlassLearner):
    """PA-I on the joint feature difference, whose squared norm is 2 * ||x||^2."""

    name = "pa1"
    tuned_param = "C"

    def _learn(self, x, y, scores, label, p):
        loss = float(1.0 - (scores[y - 1] - scores[p - 1]))
        if loss <= 0.0:
            return 0.0, False
        sq = 2.0 * float(x @ x)
        if sq == 0.0:
            self.degenerate += 1
            return loss, False
        tau = min(self.params.C, loss / sq)
        self._move(y, p, tau * x)
        return loss, True


class MCROMMA(MulticlassLearner):
    """Mistake-driven ROMMA on the flattened weight matrix."""

    name = "romma"

    def _learn(self, x, y, scores, label, p):
        if label == y:
            return 0.0, False
        ff = 2.0 * float(x @ x)
        if ff == 0.0:
            self.degenerate += 1
            return 1.0, False
        m = float(scores[y - 1] - scores[p - 1])
        with np.errstate(over="ignore", invalid="ignore"):
            ww = float(np.vdot(self.W, self.W))
        denom = ff * ww - m * m
        if not math.isfinite(denom):
            raise NumericalError(f"{self.name}: weight norm overflow", self.t)
        if ww == 0.0 or denom <= 1e-12 * ff * ww:
            self.W[:] = 0.0
            self._move(y, p, x / ff)
            return 1.0, True
        c = (ff * ww - m) / denom
        d = ww * (1.0 - m) / denom
        with np.errstate(over="ignore", invalid="ignore"):
            W = c * self.W
            W[y - 1] += d * x
            W[p - 1] -= d * x
            wn = float(np.vdot(W, W))
        if not math.isfinite(wn):
            raise NumericalError(f"{self.name}: weight norm overflow", self.t)
        self.W = W
        return 1.0, True


class _MCConfidence(MulticlassLearner):
    """Shared-covariance learners: one covariance over features for all k rows."""

    second_order = True

    def __init__(self, k, dim, params=None):
        super().__init__(k, dim, params)
        self.mode = self.params.cov_mode
        self.cov = initial_covariance(self.dim, self.mode)

    def state(self):
        return {"W": self.W.copy(), "cov": self.cov.copy()}

    def _sigma_x(self, x):
        sx = self.cov * x if self.mode == "diag" else self.cov @ x
        return sx, float(x @ sx)

    def _downdate(self, sx, beta):
        if self.mode == "diag":
            self.cov -= beta * (sx * sx)
        else:
            self.cov -= beta * np.outer(sx, sx)


class ARCSMC(_MCConfidence):
    """Adaptive regularized cost-sensitive multiclass learner.

    With ``costs=None`` the loss falls back to the plain multiclass hinge loss,
    which gives the unit-cost AROW baseline. ``literal_label_scaling`` in the
    hyperparameters multiplies the step by the class index ``y`` as a
    compatibility switch; it is off by default.
    """

    name = "arcsmc"
    tuned_param = "gamma"
    cost_sensitive = True

    def __init__(self, k, dim, params=None, costs: CostMatrix | None = None):
        super().__init__(k, dim, params)
        if costs is not None and costs.k != self.k:
            raise ConfigurationError(f"cost matrix is {costs.k}x{costs.k}, expected k={self.k}")
        self.costs = costs

    def _target(self, y: int, p: int) -> float:
        if self.costs is None:
            return 1.0
        return float(self.costs.costs[y - 1, p - 1])

    def _learn(self, x, y, scores, label, p):
        loss = float(self._target(y, p) - (scores[y - 1] - scores[p - 1]))
        if loss <= 0.0:
            return 0.0, False
        sx, v = self._sigma_x(x)
        beta = 1.0 / (v + self.params.gamma)
        alpha = loss * beta
        if not (math.isfinite(alpha) and math.isfinite(beta)):
            raise NumericalError(f"{self.name}: non-finite update coefficients", self.t)
        if self.params.literal_label_scaling:
            alpha *= y
        self._move(y, p, alpha * sx)
        self._downdate(sx, beta)
        return loss, True


class MCAROW(ARCSMC):
    """Unit-cost AROW: the same update driven by the multiclass hinge loss."""

    name = "arow"
    cost_sensitive = False

    def __init__(self, k, dim, params=None, costs=None):
        super().__init__(k, dim, params, costs=None)


class MCSCW(_MCConfidence):
    name = "scw"
    tuned_param = "C"

    def _learn(self, x, y, scores, label, p):
        phi = self.params.phi
        sx, v = self._sigma_x(x)
        m = float(scores[y - 1] - scores[p - 1])
        loss = phi * math.sqrt(max(v, 0.0)) - m
        if loss <= 0.0:
            return 0.0, False
        if v <= 0.0:
            self.degenerate += 1
            return loss, False
        alpha, beta = scw_coefficients(m, v, phi, self.params.C)
        if not (math.isfinite(alpha) and math.isfinite(beta)):
            raise NumericalError(f"{self.name}: non-finite update coefficients", self.t)
        if alpha == 0.0:
            return loss, False
        self._move(y, p, alpha * sx)
        self._downdate(sx, beta)
        return loss, True


MULTICLASS_LEARNERS = {
    "perceptron": MCPerceptron,
    "romma": MCROMMA,
    "ogd": MCOGD,
    "pa1": MCPassiveAggressive,
    "arow": MCAROW,
    "scw": MCSCW,
    "arcsmc": ARCSMC,
}


def make_multiclass_learner(
    name: str,
    k: int,
    dim: int,
    params: Hyperparams | None = None,
    costs: CostMatrix | None = None,
) -> MulticlassLearner:
    key = name.lower()
    if key not in MULTICLASS_LEARNERS:
        raise ConfigurationError(
            f"unknown multiclass algorithm {name!r}; choose from {sorted(MULTICLASS_LEARNERS)}"
        )
    if key == "arcsmc":
        if costs is None:
            raise ConfigurationError("arcsmc needs a cost matrix")
        return ARCSMC(k, dim, params, costs)
    return MULTICLASS_LEARNERS[key](k, dim, params)
