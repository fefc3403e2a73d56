"""Binary online learners with a uniform predict-then-learn ``step``.

Each learner owns its model and a round counter ``t``. ``step(x, y)``
predicts with the current model, computes the learner's own instantaneous
loss and updates only when that loss is positive, so a zero-loss round
leaves the model untouched.
"""

from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np

from .core import (
    ConfigurationError,
    DimensionError,
    GaussianLinearModel,
    Hyperparams,
    LinearModel,
    NumericalError,
    as_array,
    check_binary_label,
    initial_covariance,
)


class StepOutcome(NamedTuple):
    label: int
    score: float
    loss: float
    updated: bool


class BinaryLearner:
    name = "base"
    task = "binary"
    second_order = False
    cost_sensitive = False
    tuned_param: str | None = None

    def __init__(self, dim: int, params: Hyperparams | None = None):
        if dim <= 0:
            raise DimensionError(f"dim must be positive, got {dim}")
        self.dim = int(dim)
        self.params = params or Hyperparams()
        self.t = 0
        self.degenerate = 0
        self.w = np.zeros(self.dim)

    @property
    def model(self) -> LinearModel:
        return LinearModel(self.w)

    def _check(self, x) -> np.ndarray:
        x = as_array(x)
        if x.shape[0] != self.dim:
            raise DimensionError(f"round {self.t + 1}: expected dim {self.dim}, got {x.shape[0]}")
        return x

    def score(self, x) -> float:
        return float(self.w @ self._check(x))

    def predict(self, x) -> tuple[int, float]:
        s = self.score(x)
        return (1 if s > 0 else -1), s

    def step(self, x, y: int) -> StepOutcome:
        x = self._check(x)
        check_binary_label(y)
        self.t += 1
        s = float(self.w @ x)
        label = 1 if s > 0 else -1
        loss, updated = self._learn(x, y, s, label)
        return StepOutcome(label, s, loss, updated)

    def _learn(self, x: np.ndarray, y: int, s: float, label: int) -> tuple[float, bool]:
        raise NotImplementedError

    def state(self) -> dict:
        """Snapshot of every mutable array, used to check passivity."""
        return {"w": self.w.copy()}

    def _fail(self, what: str):
        raise NumericalError(f"{self.name}: non-finite {what}", self.t)


class Perceptron(BinaryLearner):
    name = "perceptron"

    def _learn(self, x, y, s, label):
        if label == y:
            return 0.0, False
        self.w += y * x
        return 1.0, True


class PassiveAggressive(BinaryLearner):
    """PA with ``variant='hard'`` or the soft-margin ``variant='I'`` capped by C."""

    def __init__(self, dim, params=None, variant: str = "I"):
        super().__init__(dim, params)
        if variant not in ("hard", "I"):
            raise ConfigurationError(f"PA variant must be 'hard' or 'I', got {variant!r}")
        self.variant = variant
        self.name = "pa" if variant == "hard" else "pa1"
        self.tuned_param = None if variant == "hard" else "C"

    def _learn(self, x, y, s, label):
        loss = 1.0 - y * s
        if loss <= 0.0:
            return 0.0, False
        sq = float(x @ x)
        if sq == 0.0:
            self.degenerate += 1
            return loss, False
        tau = loss / sq
        if self.variant == "I":
            tau = min(self.params.C, tau)
        self.w += (tau * y) * x
        return loss, True


class OGD(BinaryLearner):
    """Hinge-loss online gradient descent with step ``lam / sqrt(t)``."""

    name = "ogd"
    tuned_param = "lam"

    def _margin_target(self, y: int) -> float:
        return 1.0

    def _learn(self, x, y, s, label):
        loss = self._margin_target(y) - y * s
        if loss <= 0.0:
            return 0.0, False
        self.w += (self.params.lam / math.sqrt(self.t) * y) * x
        return loss, True


class _RunningRatio:
    """Negative/positive count ratio over the labels revealed so far."""

    def __init__(self, fixed: float | None):
        self.fixed = fixed
        self.n_pos = 0
        self.n_neg = 0

    def observe(self, y: int) -> None:
        if y == 1:
            self.n_pos += 1
        else:
            self.n_neg += 1

    def value(self) -> float:
        if self.fixed is not None:
            return self.fixed
        return max(self.n_neg, 1) / max(self.n_pos, 1)


def cs_hinge_loss(w, x, y: int, rho: float) -> float:
    """Hinge loss whose margin target is ``rho`` for positives and 1 for negatives."""
    target = rho if y == 1 else 1.0
    return max(0.0, target - y * float(np.asarray(w) @ as_array(x)))


class CSOGD(OGD):
    """OGD on the cost-sensitive hinge loss: positives must clear a margin of rho."""

    name = "csogd"
    cost_sensitive = True

    def __init__(self, dim, params=None):
        super().__init__(dim, params)
        self.ratio = _RunningRatio(self.params.rho)

    def _margin_target(self, y):
        self.ratio.observe(y)
        return self.ratio.value() if y == 1 else 1.0


class ALMA(BinaryLearner):
    """ALMA_2 on unit-normalised inputs; ``k`` counts corrections made so far."""

    name = "alma"
    tuned_param = "alpha"

    def __init__(self, dim, params=None):
        super().__init__(dim, params)
        self.k = 1
        self.B = 1.0 / self.params.alpha
        self.C = math.sqrt(2.0)

    def _learn(self, x, y, s, label):
        nrm = math.sqrt(float(x @ x))
        threshold = (1.0 - self.params.alpha) * self.B / math.sqrt(self.k)
        # 0/1 loss: the normalised margin failed to clear the current threshold
        if nrm > 0.0 and y * s / nrm > threshold:
            return 0.0, False
        if nrm == 0.0:
            self.degenerate += 1
            return 1.0, False
        eta = self.C / math.sqrt(self.k)
        self.w += (eta * y / nrm) * x
        wn = math.sqrt(float(self.w @ self.w))
        if wn > 1.0:
            self.w /= wn
        self.k += 1
        return 1.0, True

    def state(self):
        return {"w": self.w.copy(), "k": self.k}


class ROMMA(BinaryLearner):
    """Mistake-driven relaxed online maximum margin algorithm."""

    name = "romma"

    def _learn(self, x, y, s, label):
        if label == y:
            return 0.0, False
        xx = float(x @ x)
        if xx == 0.0:
            self.degenerate += 1
            return 1.0, False
        with np.errstate(over="ignore", invalid="ignore"):
            ww = float(self.w @ self.w)
        denom = xx * ww - s * s
        if not math.isfinite(denom):
            # the norm grows without bound on non-separable streams
            self._fail("weight norm (overflow)")
        if ww == 0.0 or denom <= 1e-12 * xx * ww:
            # first mistake, or x parallel to w: restart from the single constraint
            self.w = (y / xx) * x
            return 1.0, True
        c = (xx * ww - y * s) / denom
        d = ww * (y - s) / denom
        with np.errstate(over="ignore", invalid="ignore"):
            w = c * self.w + d * x
            wn = float(w @ w)
        if not math.isfinite(wn):
            self._fail("weight norm (overflow)")
        self.w = w
        return 1.0, True


class _Gaussian(BinaryLearner):
    second_order = True

    def __init__(self, dim, params=None):
        super().__init__(dim, params)
        self.mode = self.params.cov_mode
        self.cov = initial_covariance(self.dim, self.mode)

    @property
    def model(self) -> GaussianLinearModel:
        return GaussianLinearModel(self.w, self.cov, self.mode)

    @property
    def mean(self) -> np.ndarray:
        return self.w

    def state(self):
        return {"w": self.w.copy(), "cov": self.cov.copy()}

    def _sigma_x(self, x: np.ndarray) -> tuple[np.ndarray, float]:
        if self.mode == "diag":
            sx = self.cov * x
        else:
            sx = self.cov @ x
        return sx, float(x @ sx)

    def _rank_one_downdate(self, sx: np.ndarray, beta: float) -> None:
        if self.mode == "diag":
            self.cov -= beta * (sx * sx)
        else:
            self.cov -= beta * np.outer(sx, sx)

    def _arow_update(self, x, y, loss):
        sx, v = self._sigma_x(x)
        beta = 1.0 / (v + self.params.gamma)
        alpha = loss * beta
        if not (math.isfinite(alpha) and math.isfinite(beta)):
            self._fail("AROW coefficients")
        self.w += (alpha * y) * sx
        self._rank_one_downdate(sx, beta)


class AROW(_Gaussian):
    name = "arow"
    tuned_param = "gamma"

    def _learn(self, x, y, s, label):
        loss = 1.0 - y * s
        if loss <= 0.0:
            return 0.0, False
        self._arow_update(x, y, loss)
        return loss, True


class ARCSOGD(_Gaussian):
    """AROW-style confidence update driven by the cost-sensitive hinge loss."""

    name = "arcsogd"
    tuned_param = "gamma"
    cost_sensitive = True

    def __init__(self, dim, params=None):
        super().__init__(dim, params)
        self.ratio = _RunningRatio(self.params.rho)

    def _learn(self, x, y, s, label):
        self.ratio.observe(y)
        target = self.ratio.value() if y == 1 else 1.0
        loss = target - y * s
        if loss <= 0.0:
            return 0.0, False
        self._arow_update(x, y, loss)
        return loss, True


class CW(_Gaussian):
    """Confidence-weighted learning, variance form of the margin constraint."""

    name = "cw"
    tuned_param = "phi"

    def _learn(self, x, y, s, label):
        phi = self.params.phi
        sx, v = self._sigma_x(x)
        m = y * s
        loss = phi * v - m
        if loss <= 0.0:
            return 0.0, False
        if v == 0.0:
            self.degenerate += 1
            return loss, False
        b = 1.0 + 2.0 * phi * m
        alpha = (-b + math.sqrt(b * b - 8.0 * phi * (m - phi * v))) / (4.0 * phi * v)
        if not math.isfinite(alpha):
            self._fail("CW step size")
        if alpha <= 0.0:
            return loss, False
        self.w += (alpha * y) * sx
        if self.mode == "diag":
            self.cov = 1.0 / (1.0 / self.cov + (2.0 * alpha * phi) * (x * x))
        else:
            self.cov -= (2.0 * alpha * phi / (1.0 + 2.0 * alpha * phi * v)) * np.outer(sx, sx)
        return loss, True


def scw_coefficients(m: float, v: float, phi: float, C: float) -> tuple[float, float]:
    """Step size ``alpha`` and covariance shrink ``beta`` of SCW-I."""
    psi = 1.0 + phi * phi / 2.0
    zeta = 1.0 + phi * phi
    alpha = (-m * psi + math.sqrt(m * m * phi ** 4 / 4.0 + v * phi * phi * zeta)) / (v * zeta)
    alpha = min(C, max(0.0, alpha))
    u = 0.25 * (-alpha * v * phi + math.sqrt(alpha * alpha * v * v * phi * phi + 4.0 * v)) ** 2
    beta = alpha * phi / (math.sqrt(u) + v * alpha * phi)
    return alpha, beta


class SCW(_Gaussian):
    """Soft confidence-weighted learning (SCW-I)."""

    name = "scw"
    tuned_param = "C"

    def _learn(self, x, y, s, label):
        phi = self.params.phi
        sx, v = self._sigma_x(x)
        m = y * s
        loss = phi * math.sqrt(max(v, 0.0)) - m
        if loss <= 0.0:
            return 0.0, False
        if v <= 0.0:
            self.degenerate += 1
            return loss, False
        alpha, beta = scw_coefficients(m, v, phi, self.params.C)
        if not (math.isfinite(alpha) and math.isfinite(beta)):
            self._fail("SCW coefficients")
        if alpha == 0.0:
            return loss, False
        self.w += (alpha * y) * sx
        self._rank_one_downdate(sx, beta)
        return loss, True


BINARY_LEARNERS = {
    "perceptron": Perceptron,
    "pa": lambda dim, params=None: PassiveAggressive(dim, params, variant="hard"),
    "pa1": lambda dim, params=None: PassiveAggressive(dim, params, variant="I"),
    "alma": ALMA,
    "romma": ROMMA,
    "ogd": OGD,
    "csogd": CSOGD,
    "cw": CW,
    "arow": AROW,
    "scw": SCW,
    "arcsogd": ARCSOGD,
}

def make_binary_learner(name: str, dim: int, params: Hyperparams | None = None) -> BinaryLearner:
    try:
        factory = BINARY_LEARNERS[name.lower()]
    except KeyError:
        raise ConfigurationError(
            f"unknown binary algorithm {name!r}; choose from {sorted(BINARY_LEARNERS)}"
        ) from None
    return factory(dim, params)
