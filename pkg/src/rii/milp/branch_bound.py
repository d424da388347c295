"""Branch-and-bound over binary variables on top of the simplex kernel."""

from __future__ import annotations

import heapq
import itertools
import time
from typing import Callable

import numpy as np
from numpy.typing import NDArray

from ..errors import InvalidArgumentError
from .dual import WarmLP
from .model import INT_TOL, MilpModel, Sense, SolveOutcome, Status
from .simplex import simplex_solve

# Candidate-solution hook: (model, lp_solution) -> full solution or None.
Heuristic = Callable[[MilpModel, NDArray[np.float64]], "NDArray[np.float64] | None"]

_GAP = 1e-9


def branch_and_bound(
    model: MilpModel,
    node_limit: int = 200_000,
    *,
    heuristic: Heuristic | None = None,
    time_limit: float | None = None,
) -> SolveOutcome:
    """Solve a MILP whose integer variables are all binary.

    Nodes are explored depth-first; among nodes at the same depth the one
    with the better parent bound goes first, and the ``x = 1`` child of a
    branching is preferred over the ``x = 0`` child. The branching variable
    is the most fractional binary. Node LPs are re-optimized by a dual
    simplex from the parent's final tableau, with the two-phase simplex as
    the fallback.

    A node LP is unbounded only if the root LP is, because fixing binaries
    never changes the recession cone. In that case the MILP is unbounded
    exactly when it is feasible, so a pure feasibility search decides between
    ``unbounded`` and ``infeasible``.

    Parameters
    ----------
    model : MilpModel
    node_limit : int
        Maximum number of node LPs. Exhaustion yields status ``node_limit``
        with the best incumbent (if any) and ``proven_optimal=False``.
    heuristic : callable, optional
        Proposes an integral solution from a node's LP solution. Proposals
        are checked against the raw constraints before they are accepted.
    time_limit : float, optional
        Wall-clock budget in seconds, treated like the node limit.
    """
    if node_limit < 1:
        raise InvalidArgumentError("node_limit must be >= 1")
    start = time.perf_counter()

    root = simplex_solve(model.relaxed())
    lp_iters = root.lp_iterations
    if root.status is Status.INFEASIBLE:
        return SolveOutcome(Status.INFEASIBLE, nodes_explored=1, lp_iterations=lp_iters,
                            wall_time=time.perf_counter() - start, proven_optimal=True)
    if root.status is Status.UNBOUNDED:
        probe = _search(model.with_objective(np.zeros(model.n_vars), Sense.MINIMIZE),
                        node_limit - 1, heuristic, time_limit, start)
        status = {Status.OPTIMAL: Status.UNBOUNDED}.get(probe.status, probe.status)
        probe.status = status
        probe.objective_value = None if status is Status.UNBOUNDED else probe.objective_value
        probe.nodes_explored += 1
        probe.lp_iterations += lp_iters
        probe.proven_optimal = status is not Status.NODE_LIMIT
        probe.wall_time = time.perf_counter() - start
        return probe

    out = _search(model, node_limit, heuristic, time_limit, start)
    out.lp_iterations += lp_iters
    out.wall_time = time.perf_counter() - start
    if out.objective_value is not None:
        out.objective_value = float(model.objective @ out.solution)
    return out


def _search(model, node_limit, heuristic, time_limit, start) -> SolveOutcome:
    """Depth-first search from the root of ``model``."""
    binary = np.flatnonzero(model.binary_mask)
    minimize = model.sense is Sense.MINIMIZE
    relaxed = model.relaxed()
    engine = WarmLP(relaxed)
    best_val = np.inf
    best_x: NDArray[np.float64] | None = None
    nodes = 0
    lp_iters = 0
    counter = itertools.count()
    # (-depth, parent bound, preference, tie counter, lower, upper, parent state, branched var)
    heap: list = [(0, -np.inf, 0, next(counter), model.lower, model.upper, None, -1)]
    hit_limit = False

    def consider(x: NDArray[np.float64]) -> None:
        nonlocal best_val, best_x
        x = x.copy()
        x[binary] = np.round(x[binary])
        if not model.is_feasible(x):
            return
        val = float(model.objective @ x)
        val = val if minimize else -val
        if val < best_val - _GAP * (1.0 + abs(val)):
            best_val, best_x = val, x

    def solve_node(lower, upper, parent, j, cutoff):
        if parent is not None:
            res = engine.solve(engine.branch(parent, j, lower[j], upper[j]), cutoff)
        else:
            res = engine.solve(engine.fresh(lower, upper), cutoff)
        if res is not None:
            return res.status, res.x, res.value, res.iterations, res.state
        lp = simplex_solve(relaxed.with_bounds(lower, upper))
        if lp.status is Status.UNBOUNDED:
            # Cannot happen below a bounded root; only reachable in the
            # zero-objective feasibility probe, where it means feasible.
            raise AssertionError("unbounded node LP below a bounded root")
        if lp.status is Status.INFEASIBLE:
            return "infeasible", None, np.inf, lp.lp_iterations, None
        value = lp.objective_value if minimize else -lp.objective_value
        return "optimal", lp.solution, value, lp.lp_iterations, None

    while heap:
        if nodes >= node_limit or (
            time_limit is not None and time.perf_counter() - start > time_limit
        ):
            hit_limit = True
            break
        neg_depth, parent_bound, _, _, lower, upper, parent, j = heapq.heappop(heap)
        cutoff = best_val - _GAP * (1.0 + abs(best_val))
        if parent_bound >= cutoff:
            continue
        status, x, bound, iters, state = solve_node(lower, upper, parent, j, cutoff)
        nodes += 1
        lp_iters += iters
        if status != "optimal" or bound >= cutoff:
            continue
        frac = np.abs(x[binary] - np.round(x[binary]))
        if frac.size == 0 or frac.max() <= INT_TOL:
            consider(x)
            continue
        if heuristic is not None:
            cand = heuristic(model, x)
            if cand is not None:
                consider(np.asarray(cand, dtype=np.float64))
                if bound >= best_val - _GAP * (1.0 + abs(best_val)):
                    continue
        # Most fractional: distance from 0.5, smallest index on ties.
        j = int(binary[np.argmin(np.abs(x[binary] - 0.5))])
        depth = -neg_depth + 1
        up_lo = lower.copy()
        up_lo[j] = 1.0
        down_hi = upper.copy()
        down_hi[j] = 0.0
        heapq.heappush(heap, (-depth, bound, 0, next(counter), up_lo, upper, state, j))
        heapq.heappush(heap, (-depth, bound, 1, next(counter), lower, down_hi, state, j))

    if best_x is None:
        status = Status.NODE_LIMIT if hit_limit else Status.INFEASIBLE
        return SolveOutcome(status, nodes_explored=nodes, lp_iterations=lp_iters,
                            proven_optimal=not hit_limit)
    status = Status.NODE_LIMIT if hit_limit else Status.OPTIMAL
    return SolveOutcome(
        status,
        objective_value=float(model.objective @ best_x),
        solution=best_x,
        nodes_explored=nodes,
        lp_iterations=lp_iters,
        proven_optimal=not hit_limit,
    )
