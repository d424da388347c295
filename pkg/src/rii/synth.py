"""Synthetic data: linear models under three noise types, plus a sin-perturbed model.

Randomness comes from numpy's PCG64 generator. Every stream is keyed by
``(seed, trial, purpose)`` through ``numpy.random.SeedSequence``, so trial
``t`` draws the same numbers no matter which worker runs it or in what order.
"""

from __future__ import annotations

import json
import math
import zlib
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.stats import norm

from .errors import InvalidArgumentError, UnsupportedInputError
from .region import Dataset

NOISE_KINDS = ("additive_gaussian", "multiplicative_gaussian", "outliers")
SIN_FREQUENCY = 8.0 * math.pi


def rng_stream(seed: int, trial: int = 0, purpose: str = "") -> np.random.Generator:
    """Independent PCG64 stream for one ``(seed, trial, purpose)`` triple."""
    tag = zlib.crc32(purpose.encode())
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed), int(trial), tag])))


@dataclass(frozen=True)
class NoiseSpec:
    """Noise model; all scales are standard deviations.

    ``additive_gaussian``: N(0, sigma). ``multiplicative_gaussian``:
    N(0, |theta @ x|). ``outliers``: with probability ``p`` N(0, sigma_hi),
    otherwise N(0, sigma_lo).
    """

    kind: str = "additive_gaussian"
    sigma: float = 0.5
    p: float = 0.1
    sigma_hi: float = 10.0
    sigma_lo: float = 0.05

    def __post_init__(self):
        if self.kind not in NOISE_KINDS:
            raise InvalidArgumentError(f"unknown noise kind {self.kind!r}")
        if self.kind == "additive_gaussian" and not self.sigma >= 0:
            raise InvalidArgumentError("sigma must be nonnegative")
        if self.kind == "outliers":
            if not 0.0 < self.p < 1.0:
                raise InvalidArgumentError("outlier probability must lie in (0, 1)")
            if not (self.sigma_hi > 0 and self.sigma_lo > 0):
                raise InvalidArgumentError("outlier scales must be positive")

    def sample(self, mean: NDArray[np.float64], rng: np.random.Generator) -> NDArray[np.float64]:
        n = mean.shape[0]
        if self.kind == "additive_gaussian":
            return self.sigma * rng.standard_normal(n)
        if self.kind == "multiplicative_gaussian":
            return np.abs(mean) * rng.standard_normal(n)
        wild = rng.random(n) < self.p
        z = rng.standard_normal(n)
        return np.where(wild, self.sigma_hi, self.sigma_lo) * z

    def to_dict(self) -> dict:
        return {"kind": self.kind, "sigma": self.sigma, "p": self.p,
                "sigma_hi": self.sigma_hi, "sigma_lo": self.sigma_lo}

    @classmethod
    def from_dict(cls, doc: dict) -> "NoiseSpec":
        return cls(**doc)


@dataclass(frozen=True)
class GroundTruth:
    """``y = theta_star @ x + v_star * sin(frequency * ||x||) + noise``."""

    theta_star: NDArray[np.float64]
    v_star: float = 0.0
    noise: NoiseSpec = field(default_factory=NoiseSpec)
    frequency: float = SIN_FREQUENCY

    def __post_init__(self):
        theta = np.array(self.theta_star, dtype=np.float64).ravel()
        if theta.size < 1 or not np.all(np.isfinite(theta)):
            raise InvalidArgumentError("theta_star must be a nonempty finite vector")
        theta.setflags(write=False)
        object.__setattr__(self, "theta_star", theta)

    @property
    def d(self) -> int:
        return self.theta_star.shape[0]

    def nonlinear_part(self, x: NDArray[np.float64]) -> NDArray[np.float64]:
        if self.v_star == 0.0:
            return np.zeros(x.shape[0])
        return self.v_star * np.sin(self.frequency * np.linalg.norm(x, axis=1))

    def to_json(self) -> str:
        return json.dumps({"theta_star": [float(v) for v in self.theta_star],
                           "v_star": self.v_star, "noise": self.noise.to_dict(),
                           "frequency": self.frequency})

    @classmethod
    def from_json(cls, text: str) -> "GroundTruth":
        doc = json.loads(text)
        return cls(np.array(doc["theta_star"]), float(doc.get("v_star", 0.0)),
                   NoiseSpec.from_dict(doc["noise"]), float(doc.get("frequency", SIN_FREQUENCY)))


def nonlinear_truth(theta_star: ArrayLike, v_star: float) -> GroundTruth:
    """The sin-perturbed model with unit-variance additive Gaussian noise."""
    return GroundTruth(np.asarray(theta_star), v_star, NoiseSpec("additive_gaussian", sigma=1.0))


def sample_dataset(truth: GroundTruth, n: int, seed: int, trial: int = 0) -> Dataset:
    """``n`` points with inputs uniform on ``[0, 1]^d``."""
    if n < 1:
        raise InvalidArgumentError("n must be >= 1")
    rng = rng_stream(seed, trial, "data")
    x = rng.random((n, truth.d))
    mean = x @ truth.theta_star
    y = mean + truth.nonlinear_part(x) + truth.noise.sample(mean, rng)
    return Dataset(x, y)


def sample_theta_star(d: int, seed: int, trial: int = 0) -> NDArray[np.float64]:
    """Coordinates drawn independently from N(0, 1)."""
    if d < 1:
        raise InvalidArgumentError("d must be >= 1")
    return rng_stream(seed, trial, "theta").standard_normal(d)


class BBarEstimate(NamedTuple):
    value: float
    stderr: float


def estimate_b_bar(truth: GroundTruth, n_mc: int = 100_000, seed: int = 0) -> BBarEstimate:
    """Monte-Carlo estimate of ``E_X[min(P(eps >= 0 | X), P(eps <= 0 | X))]``.

    For the sin-perturbed model with N(0, sigma) noise the inner quantity is
    ``Phi(-|m(X)| / sigma)`` with ``m(X) = v_star * sin(frequency * ||X||)``;
    only the outer expectation over ``X ~ U[0, 1]^d`` is sampled.
    """
    if n_mc < 10_000:
        raise InvalidArgumentError("n_mc must be at least 10^4")
    if truth.v_star == 0.0:
        # Every supported noise kind is symmetric around zero.
        return BBarEstimate(0.5, 0.0)
    if truth.noise.kind != "additive_gaussian":
        raise UnsupportedInputError("the sin-perturbed model is defined with additive Gaussian noise")
    sigma = truth.noise.sigma
    rng = rng_stream(seed, 0, "b_bar")
    x = rng.random((n_mc, truth.d))
    m = np.abs(truth.nonlinear_part(x))
    if sigma == 0.0:
        vals = np.where(m == 0.0, 1.0, 0.0)
    else:
        vals = norm.cdf(-m / sigma)
    return BBarEstimate(float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(n_mc)))
