"""Compiled two-phase tableau simplex.

The tableau is dense, ``(m + 1) x (N + 1)``: constraint rows first, the
reduced-cost row last, right-hand side in the last column. Columns are the
standard-form structurals, then slacks, then artificials.
"""

from __future__ import annotations

import numba as nb
import numpy as np

OPTIMAL = 0
UNBOUNDED = 1
ITERATION_LIMIT = 2
TINY_PIVOT = 3
INFEASIBLE = 4

LE = 0
GE = 1
EQ = 2


@nb.njit(cache=True)
def pivot(tab: np.ndarray, basis: np.ndarray, r: int, q: int, m: int, feas_tol: float) -> None:
    n_rows, n_cols = tab.shape
    inv = 1.0 / tab[r, q]
    for j in range(n_cols):
        tab[r, j] *= inv
    for i in range(n_rows):
        if i == r:
            continue
        f = tab[i, q]
        if f != 0.0:
            for j in range(n_cols):
                tab[i, j] -= f * tab[r, j]
    for i in range(n_rows):
        tab[i, q] = 0.0
    tab[r, q] = 1.0
    last = n_cols - 1
    for i in range(m):
        v = tab[i, last]
        if v < 0.0 and v > -feas_tol:
            tab[i, last] = 0.0
    basis[r] = q


@nb.njit(cache=True)
def run(tab, basis, m, allowed, bland, bland_after, degenerate_limit, max_iter, iterations,
        opt_tol, pivot_tol, suspicious, feas_tol):
    """Pivot until optimal, unbounded or out of iterations.

    Dantzig pricing (most negative reduced cost, lowest index on ties) until
    ``bland_after`` pivots or ``degenerate_limit`` consecutive degenerate
    pivots, Bland's rule afterwards. Ratio-test ties go to the largest pivot
    under Dantzig and to the lowest basic index under Bland.

    Returns ``(status, iterations)``.
    """
    last = tab.shape[1] - 1
    pivots = 0
    degenerate_run = 0
    while True:
        if iterations >= max_iter:
            return ITERATION_LIMIT, iterations
        q = -1
        best_d = -opt_tol
        for j in range(allowed):
            dj = tab[m, j]
            if dj < -opt_tol:
                if bland:
                    q = j
                    break
                if q == -1 or dj < best_d:
                    q = j
                    best_d = dj
        if q == -1:
            return OPTIMAL, iterations
        best = np.inf
        n_eligible = 0
        any_suspicious = False
        for i in range(m):
            a = tab[i, q]
            if a > pivot_tol:
                n_eligible += 1
                ratio = tab[i, last] / a
                if ratio < best:
                    best = ratio
            elif a > suspicious:
                any_suspicious = True
        if n_eligible == 0:
            if any_suspicious:
                return TINY_PIVOT, iterations
            return UNBOUNDED, iterations
        cutoff = best + 1e-12 * (1.0 + abs(best))
        r = -1
        for i in range(m):
            a = tab[i, q]
            if a > pivot_tol and tab[i, last] / a <= cutoff:
                if r == -1:
                    r = i
                elif bland:
                    if basis[i] < basis[r]:
                        r = i
                elif a > tab[r, q]:
                    r = i
        pivot(tab, basis, r, q, m, feas_tol)
        iterations += 1
        pivots += 1
        if best <= feas_tol:
            degenerate_run += 1
        else:
            degenerate_run = 0
        if not bland and (pivots >= bland_after or degenerate_run >= degenerate_limit):
            bland = True


@nb.njit(cache=True)
def _set_costs(tab, basis, m, costs):
    n_cols = tab.shape[1]
    for j in range(n_cols - 1):
        tab[m, j] = costs[j]
    tab[m, n_cols - 1] = 0.0
    for i in range(m):
        cb = costs[basis[i]]
        if cb != 0.0:
            for j in range(n_cols):
                tab[m, j] -= cb * tab[i, j]


@nb.njit(cache=True)
def solve_lp(c, A, rel, rhs, lower, upper, bland, bland_after, degenerate_limit, max_iter,
             opt_tol, pivot_tol, suspicious, feas_tol):
    """Minimize ``c @ x`` subject to ``A x (rel) rhs`` and ``lower <= x <= upper``.

    Bounds are folded into a standard form ``z >= 0`` first: a finite lower
    bound shifts the variable, an upper-only variable is mirrored, a free
    variable is split into a nonnegative pair, a fixed variable becomes a
    constant, and a finite range adds one ``<=`` row. ``bland_after`` and
    ``max_iter`` of ``-1`` select size-based defaults.

    Returns ``(status, x, iterations)``; ``x`` is meaningful only when the
    status is ``OPTIMAL``.
    """
    m0, n = A.shape
    x = np.zeros(n)
    # -- standard form -------------------------------------------------------
    n_cols_s = 0
    n_ranged = 0
    kind = np.zeros(n, dtype=np.int64)  # 0 fixed, 1 shifted, 2 mirrored, 3 free
    for j in range(n):
        lo = lower[j]
        hi = upper[j]
        fin_lo = np.isfinite(lo)
        fin_hi = np.isfinite(hi)
        slack = feas_tol * (1.0 + min(abs(lo), abs(hi)))
        if lo > hi + slack:
            return INFEASIBLE, x, 0
        if fin_lo and fin_hi and hi - lo <= pivot_tol:
            kind[j] = 0
            x[j] = lo
        elif fin_lo:
            kind[j] = 1
            x[j] = lo
            n_cols_s += 1
            if fin_hi:
                n_ranged += 1
        elif fin_hi:
            kind[j] = 2
            x[j] = hi
            n_cols_s += 1
        else:
            kind[j] = 3
            n_cols_s += 2
    var = np.empty(n_cols_s, dtype=np.int64)
    sign = np.empty(n_cols_s)
    s = 0
    for j in range(n):
        if kind[j] == 0:
            continue
        var[s] = j
        sign[s] = -1.0 if kind[j] == 2 else 1.0
        s += 1
        if kind[j] == 3:
            var[s] = j
            sign[s] = -1.0
            s += 1
    ns = n_cols_s
    m = m0 + n_ranged
    A_s = np.zeros((m, ns))
    b = np.empty(m)
    rels = np.empty(m, dtype=np.int64)
    for i in range(m0):
        acc = rhs[i]
        for j in range(n):
            if x[j] != 0.0:
                acc -= A[i, j] * x[j]
        b[i] = acc
        rels[i] = rel[i]
        for s in range(ns):
            A_s[i, s] = A[i, var[s]] * sign[s]
    r = m0
    for s in range(ns):
        j = var[s]
        if kind[j] == 1 and np.isfinite(upper[j]):
            A_s[r, s] = 1.0
            b[r] = upper[j] - lower[j]
            rels[r] = LE
            r += 1
    c_s = np.empty(ns)
    for s in range(ns):
        c_s[s] = c[var[s]] * sign[s]

    # -- tableau: b >= 0, ">= 0" rows turned into "<= 0" rows -------------------
    n_slack = 0
    n_art = 0
    for i in range(m):
        if b[i] < 0.0 or (b[i] == 0.0 and rels[i] == GE):
            b[i] = -b[i]
            for s in range(ns):
                A_s[i, s] = -A_s[i, s]
            if rels[i] == LE:
                rels[i] = GE
            elif rels[i] == GE:
                rels[i] = LE
        if rels[i] != EQ:
            n_slack += 1
        if rels[i] != LE:
            n_art += 1
    first_art = ns + n_slack
    N = first_art + n_art
    tab = np.zeros((m + 1, N + 1))
    basis = np.empty(m, dtype=np.int64)
    sc = ns
    ac = first_art
    rhs_scale = 1.0
    for i in range(m):
        for s in range(ns):
            tab[i, s] = A_s[i, s]
        tab[i, N] = b[i]
        rhs_scale = max(rhs_scale, 1.0 + b[i])
        if rels[i] != EQ:
            tab[i, sc] = 1.0 if rels[i] == LE else -1.0
            basis[i] = sc
            sc += 1
        if rels[i] != LE:
            tab[i, ac] = 1.0
            basis[i] = ac
            ac += 1
    size = m + N
    if bland_after < 0:
        bland_after = 10 * size + 50
    if max_iter < 0:
        max_iter = 50 * size + 1000
    iterations = 0

    # -- phase 1 -------------------------------------------------------------
    if n_art > 0:
        costs = np.zeros(N)
        for j in range(first_art, N):
            costs[j] = 1.0
        _set_costs(tab, basis, m, costs)
        status, iterations = run(tab, basis, m, N, bland, bland_after, degenerate_limit,
                                 max_iter, iterations, opt_tol, pivot_tol, suspicious, feas_tol)
        if status == ITERATION_LIMIT or status == TINY_PIVOT:
            return status, x, iterations
        if -tab[m, N] > feas_tol * rhs_scale:
            return INFEASIBLE, x, iterations
        # Pivot zero-level artificials out; rows where that is impossible are
        # redundant and get blanked so they never enter a ratio test.
        for i in range(m):
            if basis[i] < first_art:
                continue
            q = -1
            best = pivot_tol
            for j in range(first_art):
                a = abs(tab[i, j])
                if a > best:
                    best = a
                    q = j
            if q >= 0:
                pivot(tab, basis, i, q, m, feas_tol)
                iterations += 1
            else:
                for j in range(first_art):
                    tab[i, j] = 0.0

    # -- phase 2 -------------------------------------------------------------
    costs = np.zeros(N)
    for s in range(ns):
        costs[s] = c_s[s]
    _set_costs(tab, basis, m, costs)
    status, iterations = run(tab, basis, m, first_art, bland, bland_after, degenerate_limit,
                             max_iter, iterations, opt_tol, pivot_tol, suspicious, feas_tol)
    if status != OPTIMAL:
        return status, x, iterations
    for i in range(m):
        s = basis[i]
        if s < ns:
            x[var[s]] += sign[s] * tab[i, N]
    return OPTIMAL, x, iterations
