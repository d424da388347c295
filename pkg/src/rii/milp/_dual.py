"""Compiled bounded-variable dual simplex with warm starts.

An LP ``min c @ x`` subject to ``A x (rel) rhs`` and ``lower <= x <= upper``
is held as ``A x - r = 0`` with one bounded logical ``r_i`` per row, so every
row relation becomes a bound on a variable. The tableau has ``m + 1`` rows
and ``n + m`` columns: constraint rows satisfy ``x_B + T x_N = 0`` and the
last row carries the reduced costs. The logical basis is dual feasible once
every structural with a nonzero cost sits at a bound on the cheap side;
free structurals with nonzero cost get a large artificial bound for that.

Changing bounds keeps the basis dual feasible, so a branch-and-bound child
re-optimizes from a copy of its parent's final tableau in a few pivots.
"""

from __future__ import annotations

import numba as nb
import numpy as np

from ._kernel import GE, INFEASIBLE, ITERATION_LIMIT, LE, OPTIMAL

CUTOFF = 5

# Steps this long come from artificial bounds; refresh values after them.
_LARGE_STEP = 1e4

AT_LOWER = 0
AT_UPPER = 1
FREE = 2
FIXED = 3
BASIC = 4


@nb.njit(cache=True)
def _nonbasic_state(lo: float, hi: float, cost: float) -> int:
    if lo == hi:
        return FIXED
    if cost > 0.0 and np.isfinite(lo):
        return AT_LOWER
    if cost < 0.0 and np.isfinite(hi):
        return AT_UPPER
    if np.isfinite(lo):
        return AT_LOWER
    if np.isfinite(hi):
        return AT_UPPER
    return FREE


@nb.njit(cache=True)
def recompute(tab, x, basis, state, m):
    """Basic values from the nonbasic ones: ``x_B = -T x_N``."""
    n_cols = tab.shape[1]
    for i in range(m):
        acc = 0.0
        for j in range(n_cols):
            if state[j] != BASIC:
                v = x[j]
                if v != 0.0:
                    acc -= tab[i, j] * v
        x[basis[i]] = acc


@nb.njit(cache=True)
def initial_state(A, rel, rhs, c, lower, upper, big):
    """Tableau, values, bounds, basis and states for the all-logical basis.

    A free structural with positive (negative) cost gets the artificial
    lower (upper) bound ``-big`` (``big``).
    """
    m, n = A.shape
    n_cols = n + m
    tab = np.zeros((m + 1, n_cols))
    x = np.zeros(n_cols)
    lo = np.empty(n_cols)
    hi = np.empty(n_cols)
    basis = np.empty(m, dtype=np.int64)
    state = np.empty(n_cols, dtype=np.int64)
    for i in range(m):
        for j in range(n):
            tab[i, j] = -A[i, j]
        tab[i, n + i] = 1.0
    for j in range(n):
        tab[m, j] = c[j]
        lo[j] = lower[j]
        hi[j] = upper[j]
        if c[j] > 0.0 and not np.isfinite(lo[j]):
            lo[j] = -big
        elif c[j] < 0.0 and not np.isfinite(hi[j]):
            hi[j] = big
        s = _nonbasic_state(lo[j], hi[j], c[j])
        state[j] = s
        if s == AT_LOWER or s == FIXED:
            x[j] = lo[j]
        elif s == AT_UPPER:
            x[j] = hi[j]
    for i in range(m):
        col = n + i
        basis[i] = col
        state[col] = BASIC
        if rel[i] == LE:
            lo[col] = -np.inf
            hi[col] = rhs[i]
        elif rel[i] == GE:
            lo[col] = rhs[i]
            hi[col] = np.inf
        else:
            lo[col] = rhs[i]
            hi[col] = rhs[i]
    recompute(tab, x, basis, state, m)
    return tab, x, lo, hi, basis, state


@nb.njit(cache=True)
def set_bounds(tab, x, lo, hi, basis, state, m, j, new_lo, new_hi):
    """Replace the bounds of column ``j``, moving it if it is nonbasic."""
    lo[j] = new_lo
    hi[j] = new_hi
    s = state[j]
    if s == BASIC:
        return
    if new_lo == new_hi:
        target = new_lo
        state[j] = FIXED
    elif s == AT_UPPER and np.isfinite(new_hi):
        target = new_hi
    elif np.isfinite(new_lo):
        target = new_lo
        state[j] = AT_LOWER
    elif np.isfinite(new_hi):
        target = new_hi
        state[j] = AT_UPPER
    else:
        target = 0.0
        state[j] = FREE
    delta = target - x[j]
    if delta != 0.0:
        for i in range(m):
            a = tab[i, j]
            if a != 0.0:
                x[basis[i]] -= a * delta
        x[j] = target


@nb.njit(cache=True)
def _objective(x, c_struct):
    total = 0.0
    for j in range(c_struct.shape[0]):
        total += c_struct[j] * x[j]
    return total


@nb.njit(cache=True)
def dual_simplex(tab, x, lo, hi, basis, state, m, c_struct, cutoff, max_iter, bland_after,
                 feas_tol, pivot_tol):
    """Re-optimize a dual-feasible tableau.

    The leaving row is the most infeasible basic variable; the entering
    column minimises ``|d_j| / |T_rj|`` over the columns that can move the
    leaving variable towards its violated bound, preferring the largest
    ``|T_rj|`` among ties. After ``bland_after`` pivots both choices fall
    back to lowest indices. The objective only rises, so the solve stops
    with ``CUTOFF`` once it exceeds ``cutoff``.

    Basic values are updated incrementally, recomputed after large steps
    (leaving an artificial bound cancels big terms), and always recomputed
    before optimality or infeasibility is declared.

    Returns ``(status, iterations)``.
    """
    n_cols = tab.shape[1]
    iterations = 0
    clean = True
    while True:
        bland = iterations >= bland_after
        r = -1
        worst = 0.0
        target = 0.0
        for i in range(m):
            b = basis[i]
            v = x[b]
            if v < lo[b] - feas_tol * (1.0 + abs(lo[b])):
                viol = lo[b] - v
                if r == -1 or (bland and b < basis[r]) or (not bland and viol > worst):
                    r, worst, target = i, viol, lo[b]
            elif v > hi[b] + feas_tol * (1.0 + abs(hi[b])):
                viol = v - hi[b]
                if r == -1 or (bland and b < basis[r]) or (not bland and viol > worst):
                    r, worst, target = i, viol, hi[b]
        if r == -1:
            if not clean:
                recompute(tab, x, basis, state, m)
                clean = True
                continue
            return OPTIMAL, iterations
        if iterations >= max_iter:
            return ITERATION_LIMIT, iterations
        leaving = basis[r]
        increase = x[leaving] < target
        # Pass 1: smallest dual ratio. Pass 2: largest pivot among near-ties.
        best = np.inf
        for j in range(n_cols):
            s = state[j]
            if s == BASIC or s == FIXED:
                continue
            a = tab[r, j]
            if abs(a) <= pivot_tol:
                continue
            up = (a < 0.0) == increase
            if up and not (s == AT_LOWER or s == FREE):
                continue
            if not up and not (s == AT_UPPER or s == FREE):
                continue
            ratio = abs(tab[m, j]) / abs(a)
            if ratio < best:
                best = ratio
        if best == np.inf:
            if not clean:
                recompute(tab, x, basis, state, m)
                clean = True
                continue
            return INFEASIBLE, iterations
        limit = best + 1e-12 * (1.0 + best)
        q = -1
        for j in range(n_cols):
            s = state[j]
            if s == BASIC or s == FIXED:
                continue
            a = tab[r, j]
            if abs(a) <= pivot_tol:
                continue
            up = (a < 0.0) == increase
            if up and not (s == AT_LOWER or s == FREE):
                continue
            if not up and not (s == AT_UPPER or s == FREE):
                continue
            if abs(tab[m, j]) / abs(a) <= limit:
                if q == -1:
                    q = j
                    if bland:
                        break
                elif abs(a) > abs(tab[r, q]):
                    q = j
        a = tab[r, q]
        t = (x[leaving] - target) / a
        for i in range(m):
            f = tab[i, q]
            if f != 0.0:
                x[basis[i]] -= f * t
        x[q] += t
        x[leaving] = target
        if lo[leaving] == hi[leaving]:
            state[leaving] = FIXED
        elif target == lo[leaving]:
            state[leaving] = AT_LOWER
        else:
            state[leaving] = AT_UPPER
        inv = 1.0 / a
        for j in range(n_cols):
            tab[r, j] *= inv
        for i in range(m + 1):
            if i == r:
                continue
            f = tab[i, q]
            if f != 0.0:
                for j in range(n_cols):
                    tab[i, j] -= f * tab[r, j]
                tab[i, q] = 0.0
        tab[r, q] = 1.0
        basis[r] = q
        state[q] = BASIC
        iterations += 1
        clean = False
        if abs(t) > _LARGE_STEP:
            recompute(tab, x, basis, state, m)
            clean = True
        if np.isfinite(cutoff) and _objective(x, c_struct) > cutoff:
            if not clean:
                recompute(tab, x, basis, state, m)
                clean = True
            if _objective(x, c_struct) > cutoff:
                return CUTOFF, iterations
