"""Exact optimization over a region by enumerating arrangement vertices.

The region is a finite union of polyhedra ``P_S = {theta : x_i @ theta in
[lo_i, hi_i] for i in S}`` with ``|S| = k``. When every ``d`` of the test
inputs are linearly independent and ``k >= d``, each ``P_S`` is a bounded
polytope, so every nonempty one has a vertex. A vertex solves ``x_i @ theta =
e_i`` for ``d`` points and one endpoint ``e_i`` of each of their intervals.
Enumerating those ``C(n_te, d) 2^d`` candidates and keeping the ones with at
least ``k`` hits therefore gives:

* the region is empty iff no candidate survives;
* the minimum of any linear objective is attained at a surviving candidate.

The cost grows like ``n_te^d``, so this is only practical for small ``d``.
"""

from __future__ import annotations

import itertools
import math

import numpy as np
from numpy.typing import NDArray

from .region import RegionSpec

DEFAULT_MAX_CANDIDATES = 4_000_000
# Normalized determinant below which a d-subset counts as dependent.
GENERAL_POSITION_TOL = 1e-9
_CHUNK = 8192


def candidate_count(n_te: int, d: int) -> int:
    return math.comb(n_te, d) * 2**d


def is_applicable(region: RegionSpec, max_candidates: int = DEFAULT_MAX_CANDIDATES) -> bool:
    """Cheap size test; general position is only checked during enumeration."""
    return region.k >= region.d and candidate_count(region.n_te, region.d) <= max_candidates


def member_vertices(
    region: RegionSpec,
    max_candidates: int = DEFAULT_MAX_CANDIDATES,
    atol: float | None = None,
) -> NDArray[np.float64] | None:
    """All candidate vertices inside the region, shape ``(m, d)``.

    Returns ``None`` when the enumeration is not exact for this region
    (``k < d``, some ``d`` inputs nearly dependent) or too large. An empty
    array means the region is empty.

    ``atol`` is the slack used when counting hits at a candidate; the
    defining ``d`` constraints hold only up to round-off. Defaults to
    ``1e-9 * (1 + max |endpoint|)``.
    """
    if not is_applicable(region, max_candidates):
        return None
    iv = region.intervals
    x, lo, hi = iv.x_te, iv.lo, iv.hi
    n, d = iv.n_te, iv.d
    if atol is None:
        atol = 1e-9 * (1.0 + float(max(np.max(np.abs(lo)), np.max(np.abs(hi)))))
    ends = np.column_stack([lo, hi])
    # One row per endpoint choice, one column per member of the d-subset.
    patterns = np.array(list(itertools.product((0, 1), repeat=d)), dtype=np.intp)
    norms = np.linalg.norm(x, axis=1)
    if np.any(norms == 0.0):
        return None
    lo_t, hi_t = lo - atol, hi + atol
    found: list[NDArray[np.float64]] = []
    combos_iter = itertools.combinations(range(n), d)
    while True:
        block = np.fromiter(itertools.chain.from_iterable(itertools.islice(combos_iter, _CHUNK)),
                            dtype=np.intp)
        if block.size == 0:
            break
        combos = block.reshape(-1, d)
        mats = x[combos]  # (c, d, d)
        scale = np.prod(norms[combos], axis=1)
        det = np.linalg.det(mats)
        if np.any(np.abs(det) <= GENERAL_POSITION_TOL * scale):
            return None
        # rhs[c, p, l] = endpoint pattern p of the l-th point in subset c
        rhs = ends[combos[:, None, :], patterns[None, :, :]]
        verts = np.linalg.solve(mats[:, None, :, :], rhs[..., None])[..., 0]
        verts = verts.reshape(-1, d)
        pred = verts @ x.T
        counts = np.count_nonzero((pred >= lo_t) & (pred <= hi_t), axis=1)
        keep = counts >= region.k
        if np.any(keep):
            found.append(verts[keep])
    if not found:
        return np.empty((0, d))
    return np.unique(np.concatenate(found), axis=0)
