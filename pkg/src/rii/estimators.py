"""Ad hoc predictors: least squares, Huber regression, optional feature map.

Fitting functions only ever see a training ``Dataset``; predictions for the
test inputs are produced afterwards from the frozen fit, which keeps the
predictions independent of the test targets.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import DimensionMismatchError, InvalidArgumentError, RankDeficientError
from .region import Dataset, PredictionSet

SIN_FREQUENCY = 8.0 * math.pi
HUBER_DELTA = 1.345


@dataclass(frozen=True)
class FeatureMap:
    """``identity`` or ``sin_norm``: ``x -> (x, sin(frequency * ||x||_2))``."""

    kind: str = "identity"
    frequency: float = SIN_FREQUENCY

    def __post_init__(self):
        if self.kind not in ("identity", "sin_norm"):
            raise InvalidArgumentError(f"unknown feature map {self.kind!r}")

    def output_dim(self, d: int) -> int:
        return d + 1 if self.kind == "sin_norm" else d

    def __call__(self, x: ArrayLike) -> NDArray[np.float64]:
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        if self.kind == "identity":
            return x
        extra = np.sin(self.frequency * np.linalg.norm(x, axis=1))
        return np.column_stack([x, extra])


IDENTITY = FeatureMap()


@dataclass(frozen=True)
class LinearFit:
    coefficients: NDArray[np.float64]
    intercept_included: bool = False
    feature_map: FeatureMap = field(default=IDENTITY)
    converged: bool = True
    n_iter: int = 0

    def __post_init__(self):
        coef = np.array(self.coefficients, dtype=np.float64).ravel()
        coef.setflags(write=False)
        object.__setattr__(self, "coefficients", coef)

    @property
    def input_dim(self) -> int:
        """Dimension of the mapped features (intercept excluded)."""
        return self.coefficients.shape[0] - int(self.intercept_included)

    def to_json(self) -> str:
        return json.dumps({
            "coefficients": [float(v) for v in self.coefficients],
            "intercept_included": self.intercept_included,
            "map_kind": self.feature_map.kind,
            "frequency": self.feature_map.frequency,
        })

    @classmethod
    def from_json(cls, text: str) -> "LinearFit":
        doc = json.loads(text)
        return cls(np.array(doc["coefficients"]), bool(doc.get("intercept_included", False)),
                   FeatureMap(doc.get("map_kind", "identity"),
                              float(doc.get("frequency", SIN_FREQUENCY))))


def _design(x: NDArray[np.float64], feature_map: FeatureMap, intercept: bool) -> NDArray[np.float64]:
    z = feature_map(x)
    if intercept:
        z = np.column_stack([z, np.ones(z.shape[0])])
    return z


def _lstsq(z: NDArray[np.float64], y: NDArray[np.float64]) -> NDArray[np.float64]:
    if z.shape[0] < z.shape[1]:
        raise RankDeficientError(
            f"{z.shape[0]} training points cannot determine {z.shape[1]} coefficients"
        )
    coef, _, rank, _ = np.linalg.lstsq(z, y, rcond=None)
    if rank < z.shape[1]:
        raise RankDeficientError(f"design matrix has rank {rank} < {z.shape[1]}")
    return coef


def fit_ols(train: Dataset, feature_map: FeatureMap = IDENTITY, intercept: bool = False) -> LinearFit:
    """Least squares via the SVD-based solver (no normal equations)."""
    z = _design(train.x, feature_map, intercept)
    return LinearFit(_lstsq(z, train.y), intercept, feature_map)


def huber_loss(residuals: ArrayLike, delta: float) -> float:
    r = np.abs(np.asarray(residuals, dtype=np.float64))
    return float(np.sum(np.where(r <= delta, 0.5 * r**2, delta * (r - 0.5 * delta))))


def fit_huber(
    train: Dataset,
    delta: float = HUBER_DELTA,
    max_iter: int = 100,
    tol: float = 1e-8,
    feature_map: FeatureMap = IDENTITY,
    intercept: bool = False,
    history: list | None = None,
) -> LinearFit:
    """Huber regression by iteratively reweighted least squares.

    Starts from the least-squares fit; each step solves a weighted least
    squares problem with weights ``min(1, delta / |r_i|)``. Each step is a
    majorize-minimize update, so the Huber objective never increases.
    Stops when the coefficient change drops below ``tol`` (sup norm); if
    ``max_iter`` is reached first the fit is returned with ``converged=False``.
    Objective values per iterate are appended to ``history`` when given.
    """
    if not delta > 0:
        raise InvalidArgumentError(f"delta must be positive, got {delta}")
    z = _design(train.x, feature_map, intercept)
    y = train.y
    coef = _lstsq(z, y)
    if history is not None:
        history.append(huber_loss(y - z @ coef, delta))
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        r = np.abs(y - z @ coef)
        w = np.where(r <= delta, 1.0, delta / np.maximum(r, np.finfo(float).tiny))
        sw = np.sqrt(w)
        new = _lstsq(z * sw[:, None], y * sw)
        step = float(np.max(np.abs(new - coef)))
        coef = new
        if history is not None:
            history.append(huber_loss(y - z @ coef, delta))
        if step < tol:
            converged = True
            break
    return LinearFit(coef, intercept, feature_map, converged, it)


def predict(fit: LinearFit, x_te: ArrayLike, feature_map: FeatureMap | None = None) -> PredictionSet:
    """``y_hat_i = coef @ phi(x_i)`` (plus intercept when fitted with one)."""
    fmap = fit.feature_map if feature_map is None else feature_map
    x = np.atleast_2d(np.asarray(x_te, dtype=np.float64))
    z = _design(x, fmap, fit.intercept_included)
    if z.shape[1] != fit.coefficients.shape[0]:
        raise DimensionMismatchError(
            f"fit has {fit.coefficients.shape[0]} coefficients, features have {z.shape[1]} columns"
        )
    return PredictionSet(z @ fit.coefficients)


PREDICTORS = ("ols", "huber", "feature_map_ols")


def fit_predictor(name: str, train: Dataset, *, huber_delta: float = HUBER_DELTA,
                  intercept: bool = False) -> LinearFit:
    """Fit one of the named predictors used by the experiments and the CLI."""
    if name == "ols":
        return fit_ols(train, intercept=intercept)
    if name == "huber":
        return fit_huber(train, delta=huber_delta, intercept=intercept)
    if name == "feature_map_ols":
        return fit_ols(train, FeatureMap("sin_norm"), intercept=intercept)
    raise InvalidArgumentError(f"unknown predictor {name!r}; choose from {PREDICTORS}")
