"""Mixed-integer linear program container and solve outcome."""

from __future__ import annotations

import copy
import enum
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray

from ..errors import DimensionMismatchError, InvalidArgumentError

FEAS_TOL = 1e-7
INT_TOL = 1e-6
PIVOT_TOL = 1e-10

RELATIONS = ("<=", ">=", "==")


class Sense(str, enum.Enum):
    MINIMIZE = "minimize"
    MAXIMIZE = "maximize"


class Status(str, enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    NODE_LIMIT = "node_limit"


@dataclass(frozen=True)
class MilpModel:
    """``optimize c @ x  s.t.  A x (rel) rhs,  lower <= x <= upper``.

    Variables flagged in ``binary_mask`` must take values in {0, 1}; their
    bounds are intersected with ``[0, 1]`` on construction.
    """

    objective: NDArray[np.float64]
    A: NDArray[np.float64]
    relations: tuple[str, ...]
    rhs: NDArray[np.float64]
    lower: NDArray[np.float64]
    upper: NDArray[np.float64]
    binary_mask: NDArray[np.bool_]
    sense: Sense = Sense.MINIMIZE
    names: tuple[str, ...] | None = None

    def __post_init__(self):
        c = np.array(self.objective, dtype=np.float64).ravel()
        n = c.shape[0]
        A = np.array(self.A, dtype=np.float64)
        if A.size == 0:
            A = A.reshape(0, n)
        if A.ndim != 2 or A.shape[1] != n:
            raise DimensionMismatchError(f"constraint matrix must have {n} columns, got {A.shape}")
        rhs = np.array(self.rhs, dtype=np.float64).ravel()
        rels = tuple(self.relations)
        if rhs.shape[0] != A.shape[0] or len(rels) != A.shape[0]:
            raise DimensionMismatchError("A, relations and rhs disagree on the row count")
        bad = [r for r in rels if r not in RELATIONS]
        if bad:
            raise InvalidArgumentError(f"unknown relation(s) {bad}")
        lower = np.array(self.lower, dtype=np.float64).ravel()
        upper = np.array(self.upper, dtype=np.float64).ravel()
        binary = np.array(self.binary_mask, dtype=bool).ravel()
        if not (lower.shape[0] == upper.shape[0] == binary.shape[0] == n):
            raise DimensionMismatchError("bounds and binary mask must match the variable count")
        lower = np.where(binary, np.maximum(lower, 0.0), lower)
        upper = np.where(binary, np.minimum(upper, 1.0), upper)
        if not np.all(np.isfinite(c)) or not np.all(np.isfinite(A)) or not np.all(np.isfinite(rhs)):
            raise InvalidArgumentError("objective, constraints and rhs must be finite")
        if np.any(np.isnan(lower)) or np.any(np.isnan(upper)):
            raise InvalidArgumentError("NaN bound")
        for arr in (c, A, rhs, lower, upper, binary):
            arr.setflags(write=False)
        object.__setattr__(self, "objective", c)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "relations", rels)
        object.__setattr__(self, "rhs", rhs)
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)
        object.__setattr__(self, "binary_mask", binary)
        object.__setattr__(self, "sense", Sense(self.sense))
        if self.names is not None and len(self.names) != n:
            raise DimensionMismatchError("one name per variable")

    @classmethod
    def build(
        cls,
        objective: ArrayLike,
        constraints: Sequence[tuple[ArrayLike, str, float]],
        bounds: Sequence[tuple[float | None, float | None]] | None = None,
        binary_mask: ArrayLike | None = None,
        sense: Sense | str = Sense.MINIMIZE,
        names: Sequence[str] | None = None,
    ) -> "MilpModel":
        """Convenience constructor from ``(coefficients, relation, rhs)`` rows.

        ``None`` in a bound means infinite; omitted bounds default to ``x >= 0``.
        """
        c = np.asarray(objective, dtype=np.float64).ravel()
        n = c.shape[0]
        rows = [np.asarray(coef, dtype=np.float64).ravel() for coef, _, _ in constraints]
        if any(r.shape[0] != n for r in rows):
            raise DimensionMismatchError("every constraint row needs one coefficient per variable")
        A = np.vstack(rows) if rows else np.zeros((0, n))
        if bounds is None:
            bounds = [(0.0, None)] * n
        lower = [-np.inf if lo is None else float(lo) for lo, _ in bounds]
        upper = [np.inf if hi is None else float(hi) for _, hi in bounds]
        if binary_mask is None:
            binary_mask = np.zeros(n, dtype=bool)
        return cls(
            c, A, tuple(rel for _, rel, _ in constraints),
            np.array([float(r) for _, _, r in constraints]),
            np.array(lower), np.array(upper), np.asarray(binary_mask, dtype=bool),
            Sense(sense), None if names is None else tuple(names),
        )

    @property
    def n_vars(self) -> int:
        return self.objective.shape[0]

    @property
    def n_constraints(self) -> int:
        return self.A.shape[0]

    @property
    def constraints(self) -> Iterator[tuple[NDArray[np.float64], str, float]]:
        for row, rel, r in zip(self.A, self.relations, self.rhs):
            yield row, rel, float(r)

    @property
    def is_lp(self) -> bool:
        return not bool(np.any(self.binary_mask))

    def with_bounds(self, lower: ArrayLike, upper: ArrayLike) -> "MilpModel":
        """Same model with new variable bounds.

        Only the bounds are re-validated, which keeps this cheap enough to
        call once per branch-and-bound node.
        """
        lower = np.array(lower, dtype=np.float64).ravel()
        upper = np.array(upper, dtype=np.float64).ravel()
        if lower.shape[0] != self.n_vars or upper.shape[0] != self.n_vars:
            raise DimensionMismatchError("bounds must match the variable count")
        if np.isnan(lower).any() or np.isnan(upper).any():
            raise InvalidArgumentError("NaN bound")
        if self.binary_mask.any():
            lower = np.where(self.binary_mask, np.maximum(lower, 0.0), lower)
            upper = np.where(self.binary_mask, np.minimum(upper, 1.0), upper)
        lower.setflags(write=False)
        upper.setflags(write=False)
        new = copy.copy(self)
        object.__setattr__(new, "lower", lower)
        object.__setattr__(new, "upper", upper)
        return new

    def with_objective(self, objective: ArrayLike, sense: Sense | str | None = None) -> "MilpModel":
        return MilpModel(np.asarray(objective), self.A, self.relations, self.rhs,
                         self.lower, self.upper, self.binary_mask,
                         self.sense if sense is None else Sense(sense), self.names)

    def relaxed(self) -> "MilpModel":
        """The LP relaxation: same bounds, no integrality."""
        return MilpModel(self.objective, self.A, self.relations, self.rhs,
                         self.lower, self.upper, np.zeros(self.n_vars, dtype=bool),
                         self.sense, self.names)

    def max_violation(self, x: ArrayLike) -> float:
        """Largest violation of any row or bound at ``x`` (0 when feasible)."""
        x = np.asarray(x, dtype=np.float64)
        viol = 0.0
        if self.n_constraints:
            act = self.A @ x - self.rhs
            for rel, v in zip(self.relations, act):
                if rel == "<=":
                    viol = max(viol, v)
                elif rel == ">=":
                    viol = max(viol, -v)
                else:
                    viol = max(viol, abs(v))
        viol = max(float(viol), float(np.max(self.lower - x, initial=0.0)),
                   float(np.max(x - self.upper, initial=0.0)))
        return viol

    def integrality_gap(self, x: ArrayLike) -> float:
        x = np.asarray(x, dtype=np.float64)[self.binary_mask]
        return float(np.max(np.abs(x - np.round(x)), initial=0.0))

    def is_feasible(self, x: ArrayLike, tol: float = FEAS_TOL) -> bool:
        x = np.asarray(x, dtype=np.float64)
        scale = 1.0 + float(np.max(np.abs(self.rhs), initial=0.0))
        return self.max_violation(x) <= tol * scale and self.integrality_gap(x) <= INT_TOL


@dataclass
class SolveOutcome:
    status: Status
    objective_value: float | None = None
    solution: NDArray[np.float64] | None = None
    nodes_explored: int = 0
    wall_time: float = 0.0
    proven_optimal: bool = False
    lp_iterations: int = 0
    extra: dict = field(default_factory=dict)

    @property
    def is_optimal(self) -> bool:
        return self.status is Status.OPTIMAL
