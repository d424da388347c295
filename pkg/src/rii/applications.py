"""Coordinate confidence intervals, hypothesis testing, and box-robust optimization."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from numpy.typing import ArrayLike, NDArray

from . import arrangement
from .errors import (
    DimensionMismatchError,
    EmptyRegionError,
    InvalidArgumentError,
    NodeLimitError,
    UnsupportedInputError,
)
from .milp.encode import RegionSolve, solve_region
from .milp.model import FEAS_TOL, MilpModel, Sense, Status
from .milp.simplex import simplex_solve
from .region import RegionSpec, membership

DEFAULT_NODE_LIMIT = 200_000


def _fmt(v: float) -> str:
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return f"{v:.10g}"


@dataclass(frozen=True)
class CoordinateIntervals:
    """Per-coordinate bounds of the region (its bounding box).

    ``unbounded_flags[i]`` is ``(lower is -inf, upper is +inf)``.
    ``complete`` is False when some solve hit the node limit; the affected
    ends are then NaN.
    """

    lower: NDArray[np.float64]
    upper: NDArray[np.float64]
    unbounded_flags: tuple[tuple[bool, bool], ...]
    complete: bool = True
    nodes: int = 0

    def __post_init__(self):
        lo = np.array(self.lower, dtype=np.float64).ravel()
        hi = np.array(self.upper, dtype=np.float64).ravel()
        if lo.shape != hi.shape:
            raise DimensionMismatchError("lower and upper must have the same length")
        both = np.isfinite(lo) & np.isfinite(hi)
        if np.any(lo[both] > hi[both] + 1e-9 * (1.0 + np.abs(hi[both]))):
            raise InvalidArgumentError("lower bound above upper bound")
        lo.setflags(write=False)
        hi.setflags(write=False)
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @classmethod
    def from_bounds(cls, lower: ArrayLike, upper: ArrayLike, complete: bool = True,
                    nodes: int = 0) -> "CoordinateIntervals":
        lo = np.asarray(lower, dtype=np.float64)
        hi = np.asarray(upper, dtype=np.float64)
        flags = tuple((bool(a == -np.inf), bool(b == np.inf)) for a, b in zip(lo, hi))
        return cls(lo, hi, flags, complete, nodes)

    @property
    def d(self) -> int:
        return self.lower.shape[0]

    @property
    def widths(self) -> NDArray[np.float64]:
        return self.upper - self.lower

    @property
    def is_bounded(self) -> bool:
        return bool(np.all(np.isfinite(self.lower)) and np.all(np.isfinite(self.upper)))

    def contains(self, theta: ArrayLike, atol: float = 0.0) -> bool:
        t = np.asarray(theta, dtype=np.float64)
        return bool(np.all(t >= self.lower - atol) and np.all(t <= self.upper + atol))

    def to_csv(self) -> str:
        out = io.StringIO()
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(["coord", "lower", "upper"])
        for i, (a, b) in enumerate(zip(self.lower, self.upper)):
            writer.writerow([i, _fmt(a), _fmt(b)])
        if not self.complete:
            writer.writerow(["incomplete", "", ""])
        return out.getvalue()

    def to_json(self) -> str:
        return json.dumps({
            "lower": [_fmt(v) for v in self.lower],
            "upper": [_fmt(v) for v in self.upper],
            "unbounded_flags": [list(f) for f in self.unbounded_flags],
            "complete": self.complete,
        })

    @classmethod
    def from_json(cls, text: str) -> "CoordinateIntervals":
        doc = json.loads(text)
        return cls(np.array([float(v) for v in doc["lower"]]),
                   np.array([float(v) for v in doc["upper"]]),
                   tuple(tuple(f) for f in doc["unbounded_flags"]), bool(doc["complete"]))


def _extreme(solve: RegionSolve, sign: float) -> float:
    """Map a finished solve to a bound; ``sign`` is -1 for a minimum, +1 for a maximum."""
    status = solve.outcome.status
    if status is Status.UNBOUNDED:
        return sign * np.inf
    if not solve.big_m_verified:
        # Even the largest M still binds: the region reaches past every band tried.
        return sign * np.inf
    return float(solve.outcome.objective_value)


def _coordinate_solves(region, coord, node_limit, method, vertices):
    c = np.zeros(region.d)
    c[coord] = 1.0
    out = []
    for sense in (Sense.MINIMIZE, Sense.MAXIMIZE):
        solve = solve_region(region, c, sense, node_limit, method=method, vertices=vertices)
        status = solve.outcome.status
        if status is Status.INFEASIBLE:
            raise EmptyRegionError(
                f"region empty: null hypothesis rejected at alpha={region.alpha}",
                alpha=region.alpha, nodes=solve.outcome.nodes_explored,
            )
        out.append(solve)
    return out


def coordinate_interval(region: RegionSpec, coord: int, node_limit: int = DEFAULT_NODE_LIMIT,
                        method: str = "auto") -> tuple[float, float]:
    """Smallest and largest value of ``theta[coord]`` over the region.

    Raises
    ------
    EmptyRegionError
        The region contains no parameter.
    NodeLimitError
        A solve stopped at the node limit; ``partial`` holds the best bounds
        found (NaN where nothing is known).
    """
    if not 0 <= coord < region.d:
        raise InvalidArgumentError(f"coord must be in [0, {region.d}), got {coord}")
    vertices = arrangement.member_vertices(region) if method != "branch_and_bound" else None
    lo_s, hi_s = _coordinate_solves(region, coord, node_limit, method, vertices)
    if Status.NODE_LIMIT in (lo_s.outcome.status, hi_s.outcome.status):
        partial = tuple(
            np.nan if s.outcome.status is Status.NODE_LIMIT else _extreme(s, sign)
            for s, sign in ((lo_s, -1.0), (hi_s, 1.0))
        )
        raise NodeLimitError(f"node limit reached on coordinate {coord}", partial=partial)
    return _extreme(lo_s, -1.0), _extreme(hi_s, 1.0)


def all_coordinate_intervals(region: RegionSpec, node_limit: int = DEFAULT_NODE_LIMIT,
                             method: str = "auto") -> CoordinateIntervals:
    """Bounding box of the region from ``2 d`` solves.

    Stops at the first solve that proves the region empty
    (``EmptyRegionError``). Node-limited solves do not stop the loop; they
    leave NaN ends, and a ``NodeLimitError`` carrying the incomplete box is
    raised at the end.
    """
    vertices = arrangement.member_vertices(region) if method != "branch_and_bound" else None
    lower = np.full(region.d, np.nan)
    upper = np.full(region.d, np.nan)
    nodes = 0
    complete = True
    for i in range(region.d):
        lo_s, hi_s = _coordinate_solves(region, i, node_limit, method, vertices)
        nodes += lo_s.outcome.nodes_explored + hi_s.outcome.nodes_explored
        for s, sign, target in ((lo_s, -1.0, lower), (hi_s, 1.0, upper)):
            if s.outcome.status is Status.NODE_LIMIT:
                complete = False
            else:
                target[i] = _extreme(s, sign)
    box = CoordinateIntervals.from_bounds(lower, upper, complete, nodes)
    if not complete:
        raise NodeLimitError("node limit reached while computing coordinate intervals",
                             partial=box)
    return box


@dataclass(frozen=True)
class TestVerdict:
    """Result of testing the linear-model hypothesis via region emptiness.

    ``rejected`` is True only when emptiness was proven; a node-limited
    search gives ``inconclusive=True`` and ``rejected=False``.
    """

    __test__ = False  # not a pytest class

    rejected: bool
    alpha: float
    b: float
    witness: NDArray[np.float64] | None = None
    inconclusive: bool = False
    nodes: int = 0

    @property
    def p_value(self) -> float | None:
        return self.alpha if self.rejected else None

    def to_json(self) -> str:
        return json.dumps({
            "rejected": self.rejected,
            "inconclusive": self.inconclusive,
            "alpha": self.alpha,
            "b": self.b,
            "witness": None if self.witness is None else [float(v) for v in self.witness],
        })


def hypothesis_test(region: RegionSpec, node_limit: int = DEFAULT_NODE_LIMIT,
                    method: str = "auto") -> TestVerdict:
    """Reject "linear model with b-valid noise" at level ``alpha`` iff the region is empty."""
    solve = solve_region(region, np.zeros(region.d), Sense.MINIMIZE, node_limit, method=method)
    status = solve.outcome.status
    nodes = solve.outcome.nodes_explored
    if status is Status.INFEASIBLE:
        return TestVerdict(True, region.alpha, region.b, nodes=nodes)
    if status is Status.NODE_LIMIT and solve.outcome.solution is None:
        return TestVerdict(False, region.alpha, region.b, inconclusive=True, nodes=nodes)
    if status is Status.UNBOUNDED:
        # Only a feasible MILP is reported unbounded, but it carries no point.
        return TestVerdict(False, region.alpha, region.b, nodes=nodes)
    theta = solve.theta
    iv = region.intervals
    atol = FEAS_TOL * (1.0 + float(np.max(np.abs(np.concatenate([iv.lo, iv.hi])))))
    if not membership(region, theta, atol=atol):
        raise AssertionError("solver witness fails the membership re-check")
    return TestVerdict(False, region.alpha, region.b, witness=np.array(theta), nodes=nodes)


class RobustSolution(NamedTuple):
    w: NDArray[np.float64]
    worst_value: float


def robust_minimax_box(box: CoordinateIntervals, cost_matrix: ArrayLike,
                       w_bounds: tuple[ArrayLike, ArrayLike]) -> RobustSolution:
    """``min_w max_{theta in box} w @ C @ theta`` with ``w`` in a box.

    The inner maximum is separable: with ``u = C.T @ w`` it equals
    ``sum_j max(lower_j u_j, upper_j u_j)``. The outer problem is the LP
    ``min sum(t)`` subject to ``t_j >= lower_j u_j`` and ``t_j >= upper_j u_j``.
    """
    C = np.atleast_2d(np.asarray(cost_matrix, dtype=np.float64))
    if C.shape[1] != box.d:
        raise DimensionMismatchError(f"cost matrix needs {box.d} columns, got {C.shape[1]}")
    if not box.is_bounded or not box.complete:
        raise UnsupportedInputError("robust optimization needs a finite box in every coordinate")
    p, d = C.shape
    w_lo = np.broadcast_to(np.asarray(w_bounds[0], dtype=np.float64), (p,))
    w_hi = np.broadcast_to(np.asarray(w_bounds[1], dtype=np.float64), (p,))
    if np.any(w_lo > w_hi):
        raise InvalidArgumentError("w lower bounds exceed upper bounds")
    # Variables (w, t); rows: end_j * (C.T w)_j - t_j <= 0 for both ends.
    rows = []
    for ends in (box.lower, box.upper):
        block = np.hstack([ends[:, None] * C.T, -np.eye(d)])
        rows.append(block)
    A = np.vstack(rows)
    model = MilpModel(
        objective=np.concatenate([np.zeros(p), np.ones(d)]),
        A=A,
        relations=("<=",) * (2 * d),
        rhs=np.zeros(2 * d),
        lower=np.concatenate([w_lo, np.full(d, -np.inf)]),
        upper=np.concatenate([w_hi, np.full(d, np.inf)]),
        binary_mask=np.zeros(p + d, dtype=bool),
        sense=Sense.MINIMIZE,
    )
    out = simplex_solve(model)
    if out.status is not Status.OPTIMAL:
        raise UnsupportedInputError(f"robust LP ended with status {out.status.value}")
    w = out.solution[:p]
    u = C.T @ w
    worst = float(np.sum(np.maximum(box.lower * u, box.upper * u)))
    return RobustSolution(w, worst)
