"""Warm-started LP relaxations for branch-and-bound.

:class:`WarmLP` solves the relaxations of one MILP with the compiled
bounded dual simplex in :mod:`rii.milp._dual`. A child node starts from a
copy of its parent's final tableau with one bound changed. Results the
engine cannot certify (iteration limit, or an artificial bound on a free
variable left active) are reported as ``None`` so the caller can fall back
to the cold two-phase solver.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np
from numpy.typing import NDArray

from . import _dual, _kernel
from .model import MilpModel, Sense
from .simplex import _relation_codes

_PRIMAL_TOL = 1e-9
_PIVOT_TOL = 1e-9
_BIG = 1e7


class WarmState(NamedTuple):
    tab: NDArray[np.float64]
    x: NDArray[np.float64]
    lo: NDArray[np.float64]
    hi: NDArray[np.float64]
    basis: NDArray[np.int64]
    state: NDArray[np.int64]

    def copy(self) -> "WarmState":
        return WarmState(*(a.copy() for a in self))


class NodeResult(NamedTuple):
    status: str  # "optimal", "infeasible" or "cutoff"
    x: NDArray[np.float64] | None
    value: float  # objective in minimization form; inf unless optimal
    iterations: int
    state: WarmState


class WarmLP:
    """LP engine for the relaxations of ``model`` under varying variable bounds."""

    def __init__(self, model: MilpModel):
        self.model = model
        self.n = model.n_vars
        self.m = model.n_constraints
        self.c = np.ascontiguousarray(
            model.objective if model.sense is Sense.MINIMIZE else -model.objective, dtype=np.float64)
        self.rel = _relation_codes(model.relations)
        finite = np.concatenate([np.abs(model.rhs), np.abs(model.lower[np.isfinite(model.lower)]),
                                 np.abs(model.upper[np.isfinite(model.upper)])])
        self.big = _BIG * (1.0 + (float(finite.max()) if finite.size else 0.0))
        self.free_lo = ~np.isfinite(model.lower) & (self.c > 0)
        self.free_hi = ~np.isfinite(model.upper) & (self.c < 0)
        size = self.n + 2 * self.m
        self.max_iter = 50 * size + 1000
        self.bland_after = 10 * size + 50

    def fresh(self, lower: NDArray[np.float64], upper: NDArray[np.float64]) -> WarmState:
        """Unsolved state on the all-logical basis."""
        return WarmState(*_dual.initial_state(self.model.A, self.rel, self.model.rhs, self.c,
                                              np.asarray(lower, dtype=np.float64),
                                              np.asarray(upper, dtype=np.float64), self.big))

    def branch(self, parent: WarmState, j: int, lo: float, hi: float) -> WarmState:
        """Copy of a solved state with the bounds of variable ``j`` replaced."""
        st = parent.copy()
        _dual.set_bounds(st.tab, st.x, st.lo, st.hi, st.basis, st.state, self.m, j,
                         float(lo), float(hi))
        return st

    def solve(self, st: WarmState, cutoff: float = np.inf) -> NodeResult | None:
        """Re-optimize ``st`` in place; ``None`` when the result is not certified."""
        status, iters = _dual.dual_simplex(st.tab, st.x, st.lo, st.hi, st.basis, st.state,
                                           self.m, self.c, float(cutoff), self.max_iter,
                                           self.bland_after, _PRIMAL_TOL, _PIVOT_TOL)
        if status == _kernel.INFEASIBLE:
            return NodeResult("infeasible", None, np.inf, iters, st)
        if status == _dual.CUTOFF:
            return NodeResult("cutoff", None, np.inf, iters, st)
        if status != _kernel.OPTIMAL:
            return None
        x = st.x[:self.n].copy()
        slack = 1e-9 * self.big
        if np.any(x[self.free_lo] <= -self.big + slack) or np.any(x[self.free_hi] >= self.big - slack):
            return None
        return NodeResult("optimal", x, float(self.c @ x), iters, st)
