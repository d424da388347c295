"""Big-M encoding of a confidence region as a MILP feasible set.

Variables are ``theta_1..theta_d`` (free) followed by one binary ``a_i`` per
test point. Row 0 is ``sum(a) >= k``; then, for each point, the pair

    theta @ x_i - M a_i >= lo_i - M
    theta @ x_i + M a_i <= hi_i + M

which forces ``theta @ x_i`` into ``[lo_i, hi_i]`` when ``a_i = 1`` and only
into the band ``[lo_i - M, hi_i + M]`` when ``a_i = 0``.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .. import arrangement
from ..errors import DimensionMismatchError, InvalidArgumentError
from ..region import RegionSpec, hit_mask
from .branch_bound import branch_and_bound
from .model import FEAS_TOL, MilpModel, Sense, SolveOutcome, Status

log = logging.getLogger(__name__)

BIG_M_MARGIN = 1e-6
ESCALATION_FACTOR = 10.0
MAX_ESCALATIONS = 3
METHODS = ("auto", "branch_and_bound", "arrangement")


def encode_region(region: RegionSpec, objective: ArrayLike, sense: Sense | str = Sense.MINIMIZE,
                  big_m: float | None = None) -> MilpModel:
    """MILP over ``(theta, a)`` whose ``theta``-projection is the region."""
    c_theta = np.asarray(objective, dtype=np.float64).ravel()
    d, n = region.d, region.n_te
    if c_theta.shape[0] != d:
        raise DimensionMismatchError(f"objective must have length {d}, got {c_theta.shape[0]}")
    M = region.big_m if big_m is None else float(big_m)
    iv = region.intervals
    A = np.zeros((1 + 2 * n, d + n))
    rhs = np.empty(1 + 2 * n)
    rels = [">="]
    A[0, d:] = 1.0
    rhs[0] = region.k
    for i in range(n):
        lo_row, hi_row = 1 + 2 * i, 2 + 2 * i
        A[lo_row, :d] = iv.x_te[i]
        A[lo_row, d + i] = -M
        rhs[lo_row] = iv.lo[i] - M
        A[hi_row, :d] = iv.x_te[i]
        A[hi_row, d + i] = M
        rhs[hi_row] = iv.hi[i] + M
        rels += [">=", "<="]
    c = np.concatenate([c_theta, np.zeros(n)])
    lower = np.concatenate([np.full(d, -np.inf), np.zeros(n)])
    upper = np.concatenate([np.full(d, np.inf), np.ones(n)])
    binary = np.concatenate([np.zeros(d, dtype=bool), np.ones(n, dtype=bool)])
    names = tuple(f"theta{j + 1}" for j in range(d)) + tuple(f"a{i + 1}" for i in range(n))
    return MilpModel(c, A, tuple(rels), rhs, lower, upper, binary, Sense(sense), names)


def verify_big_m(model: MilpModel, outcome: SolveOutcome, region: RegionSpec,
                 big_m: float | None = None, margin: float = BIG_M_MARGIN) -> bool:
    """Whether every point switched off (``a_i = 0``) sits strictly inside its band.

    A point touching ``lo_i - M`` or ``hi_i + M`` means the constant is what
    stops the optimizer, so the solution may be an artefact of ``M``.
    """
    if outcome.solution is None:
        return True
    M = region.big_m if big_m is None else float(big_m)
    d = region.d
    theta = outcome.solution[:d]
    a = outcome.solution[d:]
    iv = region.intervals
    off = a < 0.5
    if not np.any(off):
        return True
    pred = iv.x_te[off] @ theta
    slack = margin * M
    return bool(np.all(pred > iv.lo[off] - M + slack) and np.all(pred < iv.hi[off] + M - slack))


def rounding_heuristic(region: RegionSpec):
    """Turn a node LP solution into a candidate by switching on every hit."""
    d = region.d
    tol = FEAS_TOL

    def propose(model: MilpModel, x: NDArray[np.float64]):
        theta = x[:d]
        hits = hit_mask(region.intervals, theta)
        if hits.sum() < region.k:
            return None
        cand = np.empty_like(x)
        cand[:d] = theta
        cand[d:] = hits.astype(np.float64)
        # Keep the node's fixings: a candidate contradicting them is useless.
        if np.any(cand[d:] < model.lower[d:] - tol) or np.any(cand[d:] > model.upper[d:] + tol):
            return None
        return cand

    return propose


@dataclass
class RegionSolve:
    """Outcome of optimizing over a region, after any ``M`` escalation."""

    outcome: SolveOutcome
    big_m: float
    escalations: int
    big_m_verified: bool
    model: MilpModel
    method: str = "branch_and_bound"

    @property
    def theta(self) -> NDArray[np.float64] | None:
        sol = self.outcome.solution
        return None if sol is None else sol[: self.model.n_vars - int(self.model.binary_mask.sum())]


def _escalate(region, objective, sense, outcome, M, max_escalations, factor):
    """Grow ``M`` until a fixed solution passes ``verify_big_m``; no re-solve."""
    escalations = 0
    while True:
        model = encode_region(region, objective, sense, big_m=M)
        ok = verify_big_m(model, outcome, region, big_m=M)
        if ok or escalations >= max_escalations:
            return model, M, escalations, ok
        escalations += 1
        M *= factor


def _arrangement_solve(region, objective, sense, vertices, max_escalations, factor) -> RegionSolve:
    start = time.perf_counter()
    c = np.asarray(objective, dtype=np.float64).ravel()
    if vertices.shape[0] == 0:
        outcome = SolveOutcome(Status.INFEASIBLE, proven_optimal=True,
                               extra={"candidates": 0})
        model = encode_region(region, c, sense)
        outcome.wall_time = time.perf_counter() - start
        return RegionSolve(outcome, region.big_m, 0, True, model, "arrangement")
    vals = vertices @ c
    j = int(np.argmin(vals) if Sense(sense) is Sense.MINIMIZE else np.argmax(vals))
    theta = vertices[j]
    tol = 1e-9 * (1.0 + float(np.max(np.abs(np.concatenate([region.intervals.lo, region.intervals.hi])))))
    hits = hit_mask(region.intervals, theta, atol=tol)
    sol = np.concatenate([theta, hits.astype(np.float64)])
    outcome = SolveOutcome(Status.OPTIMAL, objective_value=float(vals[j]), solution=sol,
                           proven_optimal=True, extra={"candidates": int(vertices.shape[0])})
    model, M, escalations, ok = _escalate(region, c, sense, outcome, region.big_m,
                                          max_escalations, factor)
    outcome.wall_time = time.perf_counter() - start
    return RegionSolve(outcome, M, escalations, ok, model, "arrangement")


def solve_region(
    region: RegionSpec,
    objective: ArrayLike,
    sense: Sense | str = Sense.MINIMIZE,
    node_limit: int = 200_000,
    *,
    method: str = "auto",
    max_escalations: int = MAX_ESCALATIONS,
    factor: float = ESCALATION_FACTOR,
    time_limit: float | None = None,
    vertices: NDArray[np.float64] | None = None,
) -> RegionSolve:
    """Optimize a linear objective over the region.

    Parameters
    ----------
    method : {"auto", "branch_and_bound", "arrangement"}
        ``branch_and_bound`` solves the Big-M MILP. After each optimal solve
        the solution is checked with ``verify_big_m``; on failure ``M`` is
        multiplied by ``factor`` and the problem re-solved, at most
        ``max_escalations`` times. ``arrangement`` enumerates the region's
        candidate vertices (exact, see :mod:`rii.arrangement`) and reports
        the ``M`` at which its optimum is also an optimum of the MILP.
        ``auto`` uses the arrangement when it is exact and small enough and
        falls back to branch-and-bound otherwise.
    vertices : array, optional
        Precomputed ``member_vertices(region)``, shared across the solves of
        one region.
    """
    if method not in METHODS:
        raise InvalidArgumentError(f"unknown method {method!r}; choose from {METHODS}")
    if method != "branch_and_bound":
        if vertices is None:
            vertices = arrangement.member_vertices(region)
        if vertices is not None:
            return _arrangement_solve(region, objective, sense, vertices, max_escalations, factor)
        if method == "arrangement":
            raise InvalidArgumentError(
                "arrangement enumeration is not exact or too large for this region"
            )
    M = region.big_m
    escalations = 0
    heuristic = rounding_heuristic(region)
    while True:
        model = encode_region(region, objective, sense, big_m=M)
        outcome = branch_and_bound(model, node_limit, heuristic=heuristic, time_limit=time_limit)
        if outcome.status is not Status.OPTIMAL:
            return RegionSolve(outcome, M, escalations, outcome.status is not Status.NODE_LIMIT, model)
        ok = verify_big_m(model, outcome, region, big_m=M)
        if ok or escalations >= max_escalations:
            if not ok:
                log.info("big-M check still failing at M=%g after %d escalations", M, escalations)
            return RegionSolve(outcome, M, escalations, ok, model)
        escalations += 1
        M *= factor
        log.debug("escalating big-M to %g", M)


def write_lp(model: MilpModel, path) -> None:
    """Dump the model in CPLEX LP text format for cross-checking elsewhere."""
    names = model.names or tuple(f"x{j + 1}" for j in range(model.n_vars))

    def expr(coefs) -> str:
        parts = []
        for v, name in zip(coefs, names):
            if v != 0.0:
                parts.append(f"{'+' if v >= 0 else '-'} {abs(v)!r} {name}")
        return " ".join(parts) if parts else "0 " + names[0]

    rel_map = {"<=": "<=", ">=": ">=", "==": "="}
    lines = ["Minimize" if model.sense is Sense.MINIMIZE else "Maximize",
             f" obj: {expr(model.objective)}", "Subject To"]
    for i, (row, rel, r) in enumerate(model.constraints):
        lines.append(f" c{i + 1}: {expr(row)} {rel_map[rel]} {r!r}")
    lines.append("Bounds")
    for j, name in enumerate(names):
        if model.binary_mask[j]:
            continue
        lo, hi = model.lower[j], model.upper[j]
        if np.isinf(lo) and np.isinf(hi):
            lines.append(f" {name} free")
        else:
            lo_s = "-inf" if np.isinf(lo) else repr(float(lo))
            hi_s = "+inf" if np.isinf(hi) else repr(float(hi))
            lines.append(f" {lo_s} <= {name} <= {hi_s}")
    if model.binary_mask.any():
        lines.append("Binaries")
        lines.append(" " + " ".join(n for n, b in zip(names, model.binary_mask) if b))
    lines.append("End")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
