"""Residual intervals, the hit count and the confidence region.

A region is the set of parameters ``theta`` whose predictions ``theta @ x_i``
land inside at least ``k`` of the residual intervals
``[min(y_i, yhat_i), max(y_i, yhat_i)]`` built on a held-out test split.
"""

from __future__ import annotations

import csv
import enum
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .coverage import binomial_tail, k_alpha
from .errors import DimensionMismatchError, InvalidArgumentError, NoValidThresholdError

DEFAULT_BIG_M = 50.0


def _frozen(a: ArrayLike, ndim: int, name: str) -> NDArray[np.float64]:
    arr = np.array(a, dtype=np.float64)
    if arr.ndim != ndim:
        raise InvalidArgumentError(f"{name} must be {ndim}-dimensional, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidArgumentError(f"{name} contains non-finite values")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Dataset:
    """Inputs ``x`` (n x d) and targets ``y`` (n,)."""

    x: NDArray[np.float64]
    y: NDArray[np.float64]

    def __post_init__(self):
        x = np.asarray(self.x, dtype=np.float64)
        if x.ndim == 2 and x.shape[0] == 0:
            x = x.reshape(0, x.shape[1])
        object.__setattr__(self, "x", _frozen(x, 2, "x"))
        object.__setattr__(self, "y", _frozen(self.y, 1, "y"))
        if self.x.shape[0] != self.y.shape[0]:
            raise DimensionMismatchError(
                f"x has {self.x.shape[0]} rows but y has {self.y.shape[0]} entries"
            )

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def d(self) -> int:
        return self.x.shape[1]

    def subset(self, idx) -> "Dataset":
        idx = np.asarray(idx, dtype=np.intp)
        return Dataset(self.x[idx].reshape(len(idx), self.d), self.y[idx])

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow([f"x{j + 1}" for j in range(self.d)] + ["y"])
            for row, target in zip(self.x, self.y):
                writer.writerow([repr(float(v)) for v in row] + [repr(float(target))])

    @classmethod
    def from_csv(cls, path: str | Path) -> "Dataset":
        """Read a ``x1,...,xd,y`` CSV with a mandatory header row."""
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        if not rows:
            raise InvalidArgumentError(f"{path}: empty file")
        header = [h.strip() for h in rows[0]]
        if len(header) < 2 or header[-1] != "y" or any(
            h != f"x{j + 1}" for j, h in enumerate(header[:-1])
        ):
            raise InvalidArgumentError(f"{path}: header must be x1,...,xd,y, got {header}")
        body = [r for r in rows[1:] if r]
        try:
            values = np.array([[float(v) for v in r] for r in body], dtype=np.float64)
        except ValueError as exc:
            raise InvalidArgumentError(f"{path}: {exc}") from None
        if values.size == 0:
            raise InvalidArgumentError(f"{path}: no data rows")
        if values.ndim != 2 or values.shape[1] != len(header):
            raise InvalidArgumentError(f"{path}: ragged rows")
        return cls(values[:, :-1], values[:, -1])


@dataclass(frozen=True)
class PredictionSet:
    """Predictions for a test split, made without seeing its targets."""

    y_hat: NDArray[np.float64]

    def __post_init__(self):
        object.__setattr__(self, "y_hat", _frozen(self.y_hat, 1, "y_hat"))

    def __len__(self) -> int:
        return self.y_hat.shape[0]


@dataclass(frozen=True)
class ResidualIntervalSet:
    """Closed intervals ``[lo_i, hi_i]`` paired with the test inputs ``x_te``."""

    x_te: NDArray[np.float64]
    lo: NDArray[np.float64]
    hi: NDArray[np.float64]

    def __post_init__(self):
        object.__setattr__(self, "x_te", _frozen(self.x_te, 2, "x_te"))
        object.__setattr__(self, "lo", _frozen(self.lo, 1, "lo"))
        object.__setattr__(self, "hi", _frozen(self.hi, 1, "hi"))
        n = self.x_te.shape[0]
        if self.lo.shape[0] != n or self.hi.shape[0] != n:
            raise DimensionMismatchError("x_te, lo and hi must have the same length")
        if np.any(self.lo > self.hi):
            raise InvalidArgumentError("interval with lo > hi")

    @property
    def n_te(self) -> int:
        return self.x_te.shape[0]

    @property
    def d(self) -> int:
        return self.x_te.shape[1]


def split_dataset(data: Dataset, n_te: int, seed: int) -> tuple[Dataset, Dataset]:
    """Uniform random split into ``(test, train)`` with ``n_te`` test rows."""
    if not 1 <= n_te <= data.n:
        raise InvalidArgumentError(f"n_te={n_te} must lie in [1, {data.n}]")
    perm = np.random.default_rng(seed).permutation(data.n)
    return data.subset(perm[:n_te]), data.subset(perm[n_te:])


def residual_intervals(test: Dataset, preds: PredictionSet) -> ResidualIntervalSet:
    if len(preds) != test.n:
        raise DimensionMismatchError(
            f"{len(preds)} predictions for a test split of {test.n} points"
        )
    return ResidualIntervalSet(
        test.x, np.minimum(test.y, preds.y_hat), np.maximum(test.y, preds.y_hat)
    )


def _theta(theta: ArrayLike, d: int) -> NDArray[np.float64]:
    t = np.asarray(theta, dtype=np.float64)
    if t.ndim != 1 or t.shape[0] != d:
        raise DimensionMismatchError(f"theta must have length {d}, got shape {t.shape}")
    return t


def hit_mask(
    intervals: ResidualIntervalSet, theta: ArrayLike, atol: float = 0.0
) -> NDArray[np.bool_]:
    """Per-interval containment of ``theta @ x_i``, closed on both ends.

    ``atol`` widens every interval symmetrically; it is 0 for the exact
    definition and is only used to absorb solver round-off.
    """
    pred = intervals.x_te @ _theta(theta, intervals.d)
    return (pred >= intervals.lo - atol) & (pred <= intervals.hi + atol)


def count_hits(intervals: ResidualIntervalSet, theta: ArrayLike, atol: float = 0.0) -> int:
    """Number of residual intervals containing ``theta @ x_i``."""
    return int(np.count_nonzero(hit_mask(intervals, theta, atol)))


def default_big_m(intervals: ResidualIntervalSet) -> float:
    """50 for targets of order one, ten times the data scale otherwise."""
    scale = max(float(np.max(np.abs(intervals.lo), initial=0.0)),
                float(np.max(np.abs(intervals.hi), initial=0.0)), 1.0)
    return max(DEFAULT_BIG_M, 10.0 * scale)


@dataclass(frozen=True)
class RegionSpec:
    """The confidence region ``{theta : C(theta) >= k}``."""

    intervals: ResidualIntervalSet
    k: int
    alpha: float
    b: float
    big_m: float = DEFAULT_BIG_M

    def __post_init__(self):
        if not 1 <= self.k <= self.intervals.n_te:
            raise InvalidArgumentError(f"k={self.k} must lie in [1, {self.intervals.n_te}]")
        if not 0.0 < self.alpha < 1.0:
            raise InvalidArgumentError(f"alpha must lie in (0, 1), got {self.alpha}")
        if not 0.0 <= self.b <= 0.5:
            raise InvalidArgumentError(f"b must lie in [0, 0.5], got {self.b}")
        scale = max(float(np.max(np.abs(self.intervals.lo))),
                    float(np.max(np.abs(self.intervals.hi))))
        if not np.isfinite(self.big_m) or self.big_m <= scale:
            raise InvalidArgumentError(
                f"big_m={self.big_m} must exceed the largest interval endpoint {scale}"
            )

    @property
    def n_te(self) -> int:
        return self.intervals.n_te

    @property
    def d(self) -> int:
        return self.intervals.d

    @property
    def guaranteed_coverage(self) -> float:
        return binomial_tail(self.n_te, self.k, self.b)

    def with_big_m(self, big_m: float) -> "RegionSpec":
        return RegionSpec(self.intervals, self.k, self.alpha, self.b, big_m)

    def to_dict(self) -> dict[str, Any]:
        iv = self.intervals
        return {
            "d": self.d,
            "n_te": self.n_te,
            "k": self.k,
            "alpha": self.alpha,
            "b": self.b,
            "big_m": self.big_m,
            "points": [
                {"x": [float(v) for v in iv.x_te[i]], "lo": float(iv.lo[i]), "hi": float(iv.hi[i])}
                for i in range(iv.n_te)
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1)

    @classmethod
    def from_dict(cls, doc: dict[str, Any]) -> "RegionSpec":
        try:
            points = doc["points"]
            d = int(doc["d"])
            x = np.array([p["x"] for p in points], dtype=np.float64).reshape(len(points), d)
            intervals = ResidualIntervalSet(
                x, [p["lo"] for p in points], [p["hi"] for p in points]
            )
            if int(doc["n_te"]) != intervals.n_te:
                raise InvalidArgumentError("n_te does not match the number of points")
            return cls(intervals, int(doc["k"]), float(doc["alpha"]), float(doc["b"]),
                       float(doc["big_m"]))
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, InvalidArgumentError):
                raise
            raise InvalidArgumentError(f"malformed region document: {exc}") from None

    @classmethod
    def from_json(cls, text: str) -> "RegionSpec":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise InvalidArgumentError(f"region is not valid JSON: {exc}") from None
        return cls.from_dict(doc)

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json() + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "RegionSpec":
        return cls.from_json(Path(path).read_text())


def build_region(
    intervals: ResidualIntervalSet,
    alpha: float,
    b: float,
    k: int | None = None,
    big_m: float | None = None,
) -> RegionSpec:
    """Assemble a region, picking ``k`` from ``(alpha, b)`` unless given.

    Raises
    ------
    NoValidThresholdError
        If no ``k`` reaches coverage ``1 - alpha`` for this test size.
    """
    if k is None:
        k = k_alpha(intervals.n_te, alpha, b)
        if k is None:
            raise NoValidThresholdError(
                f"n_te={intervals.n_te} is too small for coverage {1 - alpha:g} at b={b:g}"
            )
    if big_m is None:
        big_m = default_big_m(intervals)
    return RegionSpec(intervals, int(k), float(alpha), float(b), float(big_m))


def membership(region: RegionSpec, theta: ArrayLike, atol: float = 0.0) -> bool:
    """Whether ``theta`` lies in the region. No optimization involved."""
    return count_hits(region.intervals, theta, atol) >= region.k


class Boundedness(enum.Enum):
    SURELY_UNBOUNDED_OR_EMPTY = "surely_unbounded_or_empty"
    UNDETERMINED = "undetermined"


def boundedness_necessary_check(region: RegionSpec) -> Boundedness:
    """Cheap necessary condition for a bounded region.

    With fewer than ``d`` required hits, or test inputs spanning less than
    ``d`` dimensions, some direction leaves every active constraint
    untouched, so the region is empty or unbounded. Passing the check proves
    nothing; the sufficient condition ranges over all ``k``-subsets.
    """
    if region.k < region.d:
        return Boundedness.SURELY_UNBOUNDED_OR_EMPTY
    if np.linalg.matrix_rank(region.intervals.x_te) < region.d:
        return Boundedness.SURELY_UNBOUNDED_OR_EMPTY
    return Boundedness.UNDETERMINED
