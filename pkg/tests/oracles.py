"""Independent reference implementations used as test oracles.

None of these share code with the package beyond its public data types.
"""

from __future__ import annotations

import math
from fractions import Fraction
from itertools import combinations, product

import numpy as np
from scipy.optimize import linprog

from rii.milp.model import MilpModel, Sense
from rii.region import RegionSpec, ResidualIntervalSet


# -- binomial tail -------------------------------------------------------------

def exact_tail(n: int, k: int, b: float) -> float:
    """``P[Bin(n, b) >= k]`` in rational arithmetic (``b`` converted exactly)."""
    p = Fraction(b)
    q = 1 - p
    total = sum(Fraction(math.comb(n, j)) * p**j * q ** (n - j) for j in range(k, n + 1))
    return float(total)


# -- LP vertex enumeration -----------------------------------------------------

def model_inequalities(model: MilpModel) -> tuple[np.ndarray, np.ndarray]:
    """All constraints and finite bounds of ``model`` as rows of ``G x <= h``."""
    rows, rhs = [], []
    for coef, rel, r in model.constraints:
        if rel in ("<=", "=="):
            rows.append(coef)
            rhs.append(r)
        if rel in (">=", "=="):
            rows.append(-coef)
            rhs.append(-r)
    n = model.n_vars
    for j in range(n):
        e = np.zeros(n)
        e[j] = 1.0
        if np.isfinite(model.upper[j]):
            rows.append(e)
            rhs.append(model.upper[j])
        if np.isfinite(model.lower[j]):
            rows.append(-e)
            rhs.append(-model.lower[j])
    return np.array(rows, dtype=np.float64), np.array(rhs, dtype=np.float64)


def lp_vertex_oracle(model: MilpModel, tol: float = 1e-9) -> tuple[str, float | None]:
    """Optimum of a bounded LP by brute force over all basic solutions.

    Every ``n``-subset of the inequality rows with a nonsingular matrix gives
    a candidate point; feasible candidates are the polytope's vertices and a
    bounded nonempty polytope attains its optimum at one of them.
    """
    G, h = model_inequalities(model)
    n = model.n_vars
    subsets = np.array(list(combinations(range(G.shape[0]), n)))
    mats = G[subsets]
    dets = np.linalg.det(mats)
    ok = np.abs(dets) > 1e-10
    if not np.any(ok):
        return "infeasible", None
    pts = np.linalg.solve(mats[ok], h[subsets[ok]][..., None])[..., 0]
    feas = np.all(pts @ G.T <= h + tol * (1.0 + np.abs(h)), axis=1)
    if not np.any(feas):
        return "infeasible", None
    vals = pts[feas] @ model.objective
    best = vals.min() if model.sense is Sense.MINIMIZE else vals.max()
    return "optimal", float(best)


def random_bounded_lp(rng: np.random.Generator) -> MilpModel:
    """Random LP with ``d <= 4`` variables and at most 12 constraints, always bounded.

    Variables get a finite box, or are left free with the box written as
    explicit constraint rows; relations mix ``<=``, ``>=`` and ``==``, and
    some instances are infeasible.
    """
    n = int(rng.integers(1, 5))
    free = rng.random() < 0.3
    box_rows = 2 * n if free else 0
    m = int(rng.integers(1, 12 - box_rows + 1)) if box_rows < 12 else 0
    A = rng.normal(size=(m, n))
    x0 = rng.uniform(-2, 2, n)
    slack = rng.exponential(1.0, m)
    rels, rhs = [], []
    for i in range(m):
        u = rng.random()
        if u < 0.6:
            rels.append("<=")
            rhs.append(A[i] @ x0 + slack[i])
        elif u < 0.9:
            rels.append(">=")
            rhs.append(A[i] @ x0 - slack[i])
        else:
            rels.append("==")
            rhs.append(A[i] @ x0)
    if rng.random() < 0.15 and m > 0:
        # Push one row past the box so the instance is likely infeasible.
        rels[0], rhs[0] = ">=", float(np.sum(np.abs(A[0])) * 10 + 1)
    if free:
        lower, upper = np.full(n, -np.inf), np.full(n, np.inf)
        eye = np.eye(n)
        for j in range(n):
            A = np.vstack([A, eye[j], eye[j]])
            rels += ["<=", ">="]
            rhs += [5.0, -5.0]
    else:
        lower = rng.choice([-5.0, -1.0, 0.0], n)
        upper = rng.choice([1.0, 5.0], n)
        fixed = rng.random(n) < 0.1
        upper = np.where(fixed, lower, upper)
    return MilpModel(
        objective=rng.normal(size=n),
        A=A.reshape(-1, n),
        relations=tuple(rels),
        rhs=np.array(rhs),
        lower=lower,
        upper=upper,
        binary_mask=np.zeros(n, dtype=bool),
        sense=Sense.MINIMIZE if rng.random() < 0.5 else Sense.MAXIMIZE,
    )


def beale_lp() -> MilpModel:
    """Beale's classic LP, on which textbook Dantzig pricing cycles forever."""
    return MilpModel.build(
        objective=[-0.75, 150.0, -0.02, 6.0],
        constraints=[
            ([0.25, -60.0, -0.04, 9.0], "<=", 0.0),
            ([0.5, -90.0, -0.02, 3.0], "<=", 0.0),
            ([0.0, 0.0, 1.0, 0.0], "<=", 1.0),
        ],
    )


# -- exhaustive RII MILP oracle -------------------------------------------------

def _band_lp(region: RegionSpec, c: np.ndarray, on: np.ndarray, big_m: float):
    iv = region.intervals
    slack = np.where(on, 0.0, big_m)
    A_ub = np.vstack([iv.x_te, -iv.x_te])
    b_ub = np.concatenate([iv.hi + slack, -(iv.lo - slack)])
    return linprog(c, A_ub=A_ub, b_ub=b_ub, bounds=[(None, None)] * region.d, method="highs")


def rii_exhaustive(region: RegionSpec, objective, sense: Sense | str,
                   big_m: float | None = None, all_assignments: bool = False) -> tuple[str, float | None]:
    """Optimum of the Big-M region MILP by solving one LP per binary assignment.

    By default only assignments with exactly ``k`` ones are enumerated:
    switching an ``a_i`` from 1 to 0 only relaxes row ``i`` (its band
    contains its interval), so every feasible assignment with more than
    ``k`` ones is dominated by one with exactly ``k``. ``all_assignments``
    enumerates all ``2^n`` vectors instead.
    """
    M = region.big_m if big_m is None else big_m
    n = region.n_te
    sign = 1.0 if Sense(sense) is Sense.MINIMIZE else -1.0
    c = sign * np.asarray(objective, dtype=np.float64)
    if all_assignments:
        assignments = (np.array(a, dtype=bool) for a in product((0, 1), repeat=n)
                       if sum(a) >= region.k)
    else:
        def gen():
            for S in combinations(range(n), region.k):
                on = np.zeros(n, dtype=bool)
                on[list(S)] = True
                yield on
        assignments = gen()
    best = None
    for on in assignments:
        res = _band_lp(region, c, on, M)
        if res.status == 3:
            # HiGHS may flag "unbounded" before proving feasibility.
            if _band_lp(region, np.zeros(region.d), on, M).status == 0:
                return "unbounded", None
            continue
        if res.status == 0:
            v = sign * res.fun
            if best is None or sign * v < sign * best:
                best = v
    if best is None:
        return "infeasible", None
    return "optimal", float(best)


def random_region(rng: np.random.Generator, n_max: int = 12, d_max: int = 3) -> RegionSpec:
    """Random small region; about one in eight has rank-deficient inputs."""
    d = int(rng.integers(1, d_max + 1))
    n = int(rng.integers(max(d, 2), n_max + 1))
    x = rng.uniform(-1.0, 1.0, (n, d))
    if d > 1 and rng.random() < 0.125:
        x[:, -1] = 2.0 * x[:, 0]
    theta = rng.normal(size=d)
    center = x @ theta + rng.normal(0.0, 0.7, n)
    half = rng.exponential(0.3, n)
    iv = ResidualIntervalSet(x, center - half, center + half)
    # Favour small thresholds so that feasible and infeasible cases both occur.
    k = int(min(n, 1 + rng.geometric(0.35)))
    return RegionSpec(iv, k, 0.1, 0.5, 50.0)


# -- membership grid scan -------------------------------------------------------

def grid_scan_box(region: RegionSpec, lo, hi, step: float = 1e-3,
                  chunk: int = 1_000_000) -> tuple[np.ndarray, np.ndarray] | None:
    """Bounding box of the member points of a regular grid (``d <= 2``).

    Returns ``None`` when no grid point is a member.
    """
    lo = np.asarray(lo, dtype=np.float64)
    hi = np.asarray(hi, dtype=np.float64)
    axes = [np.arange(a, b + step / 2, step) for a, b in zip(lo, hi)]
    iv = region.intervals
    box_lo = np.full(region.d, np.inf)
    box_hi = np.full(region.d, -np.inf)
    if region.d == 1:
        blocks = [axes[0][:, None]]
    else:
        rows_per = max(1, chunk // len(axes[1]))
        blocks = (np.stack(np.meshgrid(axes[0][i:i + rows_per], axes[1], indexing="ij"), -1)
                  .reshape(-1, 2) for i in range(0, len(axes[0]), rows_per))
    found = False
    for pts in blocks:
        pred = pts @ iv.x_te.T
        hits = np.sum((pred >= iv.lo) & (pred <= iv.hi), axis=1)
        member = pts[hits >= region.k]
        if member.size:
            found = True
            box_lo = np.minimum(box_lo, member.min(axis=0))
            box_hi = np.maximum(box_hi, member.max(axis=0))
    return (box_lo, box_hi) if found else None
