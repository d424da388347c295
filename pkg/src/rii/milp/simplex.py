"""Dense two-phase tableau simplex.

Bounds are folded into the standard form before pivoting: a finite lower
bound shifts the variable, an upper-bounded-only variable is mirrored, a free
variable is split into a nonnegative pair, a fixed variable is substituted
out, and a finite range adds one ``<=`` row. Phase 1 minimises the sum of
artificial variables; phase 2 the real objective. The work happens in the
compiled kernel :mod:`rii.milp._kernel`; this module validates and wraps.

Pivoting uses Dantzig's rule until either ``bland_after`` pivots have been
taken in the current phase or ``degenerate_limit`` consecutive degenerate
pivots occur, then switches to Bland's rule for the rest of the phase, which
rules out cycling.
"""

from __future__ import annotations

import time

import numpy as np
from numpy.typing import NDArray

from ..errors import InvalidArgumentError, NumericalInstabilityError
from . import _kernel
from .model import FEAS_TOL, PIVOT_TOL, MilpModel, Sense, SolveOutcome, Status

OPT_TOL = 1e-9
# Column entries above this but below PIVOT_TOL are suspicious, not zero.
_SUSPICIOUS = 1e-12

_REL_CODES = {"<=": _kernel.LE, ">=": _kernel.GE, "==": _kernel.EQ}
_rel_cache: dict[tuple[str, ...], NDArray[np.int64]] = {}


def _relation_codes(relations: tuple[str, ...]) -> NDArray[np.int64]:
    codes = _rel_cache.get(relations)
    if codes is None:
        codes = np.array([_REL_CODES[r] for r in relations], dtype=np.int64)
        if len(_rel_cache) > 64:
            _rel_cache.clear()
        _rel_cache[relations] = codes
    return codes


def simplex_solve(
    model: MilpModel,
    *,
    pivot_rule: str = "dantzig",
    bland_after: int | None = None,
    degenerate_limit: int = 25,
    max_iter: int | None = None,
) -> SolveOutcome:
    """Solve a pure LP.

    Parameters
    ----------
    model : MilpModel
        Must have no binary variables (use ``model.relaxed()`` otherwise).
    pivot_rule : {"dantzig", "bland"}
        Starting rule. ``"bland"`` uses Bland's rule throughout.
    bland_after, degenerate_limit : int
        Switch from Dantzig to Bland after this many pivots in a phase, or
        after this many consecutive degenerate pivots.
    max_iter : int, optional
        Total pivot budget; exceeding it raises ``NumericalInstabilityError``.

    Returns
    -------
    SolveOutcome
        ``optimal`` with a vertex solution, ``infeasible`` or ``unbounded``.
    """
    if not model.is_lp:
        raise InvalidArgumentError("simplex_solve needs a pure LP; call model.relaxed() first")
    if pivot_rule not in ("dantzig", "bland"):
        raise InvalidArgumentError(f"unknown pivot rule {pivot_rule!r}")
    start = time.perf_counter()
    c = model.objective if model.sense is Sense.MINIMIZE else -model.objective
    status, x, iterations = _kernel.solve_lp(
        c, model.A, _relation_codes(model.relations), model.rhs, model.lower, model.upper,
        pivot_rule == "bland", -1 if bland_after is None else int(bland_after),
        int(degenerate_limit), -1 if max_iter is None else int(max_iter),
        OPT_TOL, PIVOT_TOL, _SUSPICIOUS, FEAS_TOL,
    )
    elapsed = time.perf_counter() - start
    if status == _kernel.ITERATION_LIMIT:
        raise NumericalInstabilityError(f"simplex iteration limit reached after {iterations} pivots")
    if status == _kernel.TINY_PIVOT:
        raise NumericalInstabilityError("entering column has only sub-tolerance positive pivots")
    if status == _kernel.INFEASIBLE:
        return SolveOutcome(Status.INFEASIBLE, lp_iterations=iterations, wall_time=elapsed)
    if status == _kernel.UNBOUNDED:
        return SolveOutcome(Status.UNBOUNDED, lp_iterations=iterations, wall_time=elapsed)
    return SolveOutcome(
        Status.OPTIMAL,
        objective_value=float(model.objective @ x),
        solution=x,
        lp_iterations=iterations,
        wall_time=elapsed,
        proven_optimal=True,
    )
