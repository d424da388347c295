"""Binomial-tail arithmetic behind the coverage guarantee.

``binomial_tail(n, k, b)`` is the probability that a Binomial(n, b) variable
is at least ``k``. It lower-bounds the probability that the true parameter
falls inside at least ``k`` of ``n`` residual intervals, each of which holds
it with probability at least ``b``. ``k_alpha`` picks the largest threshold
that still guarantees coverage ``1 - alpha``.
"""

from __future__ import annotations

import csv
import io
import math
import operator
from dataclasses import dataclass
from typing import Iterable, Sequence

from scipy.stats import binom

from .errors import InvalidArgumentError

# Terms below this fraction of the largest term cannot move the sum.
_NEGLIGIBLE = 1e-18


@dataclass(frozen=True)
class CoverageParams:
    """A validated ``(n_te, k, b, alpha)`` tuple."""

    n_te: int
    k: int
    b: float
    alpha: float

    def __post_init__(self):
        _check_count(self.n_te, "n_te", minimum=1)
        _check_count(self.k, "k", minimum=0)
        if self.k > self.n_te:
            raise InvalidArgumentError(f"k={self.k} exceeds n_te={self.n_te}")
        if not 0.0 <= self.b <= 0.5:
            raise InvalidArgumentError(f"b must lie in [0, 0.5], got {self.b}")
        if not 0.0 < self.alpha < 1.0:
            raise InvalidArgumentError(f"alpha must lie in (0, 1), got {self.alpha}")

    @property
    def guaranteed_coverage(self) -> float:
        return binomial_tail(self.n_te, self.k, self.b)

    @property
    def is_valid(self) -> bool:
        """Whether this threshold actually delivers coverage ``1 - alpha``."""
        return self.guaranteed_coverage >= 1.0 - self.alpha


def _check_count(value, name: str, minimum: int) -> int:
    if isinstance(value, bool):
        raise InvalidArgumentError(f"{name} must be an integer, got {value!r}")
    try:
        value = operator.index(value)
    except TypeError:
        raise InvalidArgumentError(f"{name} must be an integer, got {value!r}") from None
    if value < minimum:
        raise InvalidArgumentError(f"{name} must be >= {minimum}, got {value}")
    return value


def _pmf(n: int, j: int, b: float) -> float:
    try:
        return float(binom.pmf(j, n, b))
    except OverflowError:
        # Boost overflows for subnormal b; log-gamma is exact enough there.
        return math.exp(math.lgamma(n + 1) - math.lgamma(j + 1) - math.lgamma(n - j + 1)
                        + j * math.log(b) + (n - j) * math.log1p(-b))


def _range_sum(n: int, lo: int, hi: int, b: float) -> float:
    """``sum_{j=lo}^{hi} pmf(j)`` by the ratio recurrence, seeded at the range's mode."""
    odds = b / (1.0 - b)
    start = min(max(int(math.floor((n + 1) * b)), lo), hi)
    seed = _pmf(n, start, b)
    if seed == 0.0:
        # Whole range lies in a tail too thin for doubles.
        return 0.0
    terms = [seed]
    term = seed
    for j in range(start, hi):
        # pmf(j+1) = pmf(j) * (n-j)/(j+1) * odds
        term *= (n - j) / (j + 1) * odds
        if term < _NEGLIGIBLE * seed:
            break
        terms.append(term)
    term = seed
    for j in range(start, lo, -1):
        # pmf(j-1) = pmf(j) * j / (n-j+1) / odds
        term *= j / ((n - j + 1) * odds)
        if term < _NEGLIGIBLE * seed:
            break
        terms.append(term)
    return math.fsum(terms)


def binomial_tail(n_te: int, k: int, b: float) -> float:
    """Upper tail ``P[Binomial(n_te, b) >= k]``.

    Sums whichever side of the distribution is lighter: the upper tail
    ``[k, n_te]`` directly, or ``1`` minus the lower tail ``[0, k-1]`` when
    ``k`` lies below the mean, so results near 1 keep full absolute
    precision. Each sum starts from the pmf at the mode of its range
    (scipy's Boost kernel, with a log-gamma fallback) and walks outward with the ratio
    ``pmf(j+1)/pmf(j) = (n-j)/(j+1) * b/(1-b)``; no factorials are formed.

    Parameters
    ----------
    n_te : int
        Number of trials, ``>= 0``.
    k : int
        Threshold, ``0 <= k <= n_te``.
    b : float
        Success probability in ``[0, 1]``.

    Returns
    -------
    float
        The tail probability, clipped to ``[0, 1]``.
    """
    n = _check_count(n_te, "n_te", minimum=0)
    k = _check_count(k, "k", minimum=0)
    if k > n:
        raise InvalidArgumentError(f"k={k} exceeds n_te={n}")
    b = float(b)
    if not 0.0 <= b <= 1.0 or math.isnan(b):
        raise InvalidArgumentError(f"b must lie in [0, 1], got {b}")

    if k == 0:
        return 1.0
    if b == 0.0:
        return 0.0
    if b == 1.0:
        return 1.0
    if k <= n * b:
        value = 1.0 - _range_sum(n, 0, k - 1, b)
    else:
        value = _range_sum(n, k, n, b)
    return min(1.0, max(0.0, value))


def k_alpha(n_te: int, alpha: float, b: float) -> int | None:
    """Largest ``k`` in ``1..n_te`` with ``binomial_tail(n_te, k, b) >= 1 - alpha``.

    Returns ``None`` when even ``k = 1`` misses the target, i.e. ``n_te`` is
    too small for the requested confidence.
    """
    n = _check_count(n_te, "n_te", minimum=1)
    if not 0.0 < alpha < 1.0:
        raise InvalidArgumentError(f"alpha must lie in (0, 1), got {alpha}")
    if not 0.0 < b <= 0.5:
        raise InvalidArgumentError(f"b must lie in (0, 0.5], got {b}")
    target = 1.0 - alpha
    if binomial_tail(n, 1, b) < target:
        return None
    # The tail is nonincreasing in k: bisect for the last k meeting the target.
    lo, hi = 1, n
    while lo < hi:
        mid = (lo + hi + 1) // 2
        if binomial_tail(n, mid, b) >= target:
            lo = mid
        else:
            hi = mid - 1
    return lo


def coverage_curve(
    n_te: int, k_list: Sequence[int], b_grid: Iterable[float]
) -> list[tuple[int, float, float]]:
    """Rows ``(k, b, S)`` over the product of ``k_list`` and ``b_grid``."""
    b_values = [float(b) for b in b_grid]
    for b in b_values:
        if not 0.0 <= b <= 0.5:
            raise InvalidArgumentError(f"b grid values must lie in [0, 0.5], got {b}")
    rows = []
    for k in k_list:
        for b in b_values:
            rows.append((int(k), b, binomial_tail(n_te, k, b)))
    return rows


def b_grid(points: int = 51, upper: float = 0.5) -> list[float]:
    """Evenly spaced grid on ``[0, upper]`` with exact endpoints."""
    if points < 2:
        raise InvalidArgumentError("grid needs at least two points")
    return [upper * i / (points - 1) for i in range(points)]


def curve_to_csv(rows: Iterable[tuple[int, float, float]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["k", "b", "coverage"])
    for k, b, s in rows:
        writer.writerow([k, f"{b:.10g}", f"{s:.10g}"])
    return buf.getvalue()
