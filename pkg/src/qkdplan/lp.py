"""Self-contained dense linear-programming solver.

Minimizes c.x subject to inequality rows A_ub x <= b_ub, equality rows
A_eq x = b_eq, and per-variable bounds lo <= x <= hi (hi may be
unbounded).  Two-phase tableau simplex: phase 1 drives artificial
variables out with a feasibility objective, phase 2 optimizes the real
cost.  Pivoting uses Dantzig's rule for speed and switches permanently to
Bland's rule after a run of degenerate pivots, which guarantees
termination on the highly degenerate flow LPs this package produces.

Everything is deterministic: identical inputs take identical pivot
sequences and return identical solutions.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

__all__ = ["LpStatus", "LinearProgram", "LpSolution", "solve"]

_PIVOT_TOL = 1e-10
_DEGENERATE_SWITCH = 24  # consecutive degenerate pivots before Bland engages


class LpStatus(enum.Enum):
    OPTIMAL = "Optimal"
    INFEASIBLE = "Infeasible"
    UNBOUNDED = "Unbounded"


@dataclass(frozen=True)
class LinearProgram:
    """minimize objective . x  s.t.  a_ub x <= b_ub,  a_eq x = b_eq,  bounds."""

    objective: np.ndarray
    a_ub: Optional[np.ndarray] = None
    b_ub: Optional[np.ndarray] = None
    a_eq: Optional[np.ndarray] = None
    b_eq: Optional[np.ndarray] = None
    bounds: Optional[Sequence[tuple[float, Optional[float]]]] = None

    def __post_init__(self) -> None:
        c = np.asarray(self.objective, dtype=float).reshape(-1)
        object.__setattr__(self, "objective", c)
        n = c.size
        for name in ("ub", "eq"):
            a = getattr(self, f"a_{name}")
            b = getattr(self, f"b_{name}")
            if (a is None) != (b is None):
                raise ValueError(f"a_{name} and b_{name} must be given together")
            if a is None:
                continue
            a = np.atleast_2d(np.asarray(a, dtype=float))
            b = np.asarray(b, dtype=float).reshape(-1)
            if a.shape != (b.size, n):
                raise ValueError(
                    f"a_{name} shape {a.shape} does not match "
                    f"{b.size} rows x {n} variables"
                )
            object.__setattr__(self, f"a_{name}", a)
            object.__setattr__(self, f"b_{name}", b)
        if self.bounds is not None:
            bounds = tuple((float(lo), None if hi is None else float(hi)) for lo, hi in self.bounds)
            if len(bounds) != n:
                raise ValueError(f"{len(bounds)} bounds given for {n} variables")
            for j, (lo, hi) in enumerate(bounds):
                if not np.isfinite(lo):
                    raise ValueError(f"variable {j}: lower bound must be finite, got {lo}")
                if hi is not None and hi < lo:
                    raise ValueError(f"variable {j}: bounds [{lo}, {hi}] are inverted")
            object.__setattr__(self, "bounds", bounds)

    @property
    def num_variables(self) -> int:
        return self.objective.size


@dataclass(frozen=True)
class LpSolution:
    status: LpStatus
    x: Optional[np.ndarray] = None
    objective_value: Optional[float] = None


class _Tableau:
    """Working state of the simplex: rows [A | b] with a tracked basis."""

    def __init__(self, a: np.ndarray, b: np.ndarray, basis: list[int]):
        self.t = np.hstack([a, b.reshape(-1, 1)])
        self.basis = basis
        self.blands_rule = False
        self._degenerate_run = 0

    @property
    def num_cols(self) -> int:
        return self.t.shape[1] - 1

    def reduced_costs(self, cost: np.ndarray) -> np.ndarray:
        cb = cost[self.basis]
        return cost - cb @ self.t[:, :-1]

    def objective(self, cost: np.ndarray) -> float:
        return float(cost[self.basis] @ self.t[:, -1])

    def pivot(self, row: int, col: int) -> None:
        t = self.t
        t[row] /= t[row, col]
        column = t[:, col].copy()
        column[row] = 0.0
        t -= np.outer(column, t[row])
        t[:, col] = 0.0
        t[row, col] = 1.0
        self.basis[row] = col

    def choose_entering(self, reduced: np.ndarray, allowed: np.ndarray, tol: float) -> int:
        candidates = np.where(allowed & (reduced < -tol))[0]
        if candidates.size == 0:
            return -1
        if self.blands_rule:
            return int(candidates[0])
        return int(candidates[np.argmin(reduced[candidates])])

    def choose_leaving(self, col: int) -> int:
        column = self.t[:, col]
        rhs = self.t[:, -1]
        rows = np.where(column > _PIVOT_TOL)[0]
        if rows.size == 0:
            return -1
        ratios = rhs[rows] / column[rows]
        best = ratios.min()
        near = rows[ratios <= best + 1e-12 + 1e-9 * abs(best)]
        # Bland tie-break: leave on the row whose basic variable has the
        # smallest index (also keeps Dantzig mode deterministic).
        leave = min(near, key=lambda r: self.basis[r])
        if best <= _PIVOT_TOL:
            self._degenerate_run += 1
            if self._degenerate_run >= _DEGENERATE_SWITCH:
                self.blands_rule = True
        else:
            self._degenerate_run = 0
        return int(leave)

    def run(self, cost: np.ndarray, allowed: np.ndarray, tol: float) -> LpStatus:
        max_iter = 200 * (self.t.shape[0] + self.num_cols) + 10_000
        for _ in range(max_iter):
            reduced = self.reduced_costs(cost)
            entering = self.choose_entering(reduced, allowed, tol)
            if entering < 0:
                return LpStatus.OPTIMAL
            leaving = self.choose_leaving(entering)
            if leaving < 0:
                return LpStatus.UNBOUNDED
            self.pivot(leaving, entering)
        raise RuntimeError("simplex iteration limit exceeded")  # pragma: no cover


def solve(lp: LinearProgram, tol: float = 1e-9) -> LpSolution:
    """Solve the program; returns Optimal/Infeasible/Unbounded with x and value.

    ``tol`` is the reduced-cost optimality tolerance; feasibility is
    checked to 10*tol (1e-8 at the default).
    """
    feas_tol = 10.0 * tol
    n = lp.num_variables
    bounds = lp.bounds if lp.bounds is not None else tuple((0.0, None) for _ in range(n))

    c = lp.objective.copy()
    a_ub = lp.a_ub.copy() if lp.a_ub is not None else np.zeros((0, n))
    b_ub = lp.b_ub.copy() if lp.b_ub is not None else np.zeros(0)
    a_eq = lp.a_eq.copy() if lp.a_eq is not None else np.zeros((0, n))
    b_eq = lp.b_eq.copy() if lp.b_eq is not None else np.zeros(0)

    # Substitute fixed variables out, shift the rest to a zero lower bound,
    # and turn finite upper bounds into extra inequality rows.
    lows = np.array([lo for lo, _ in bounds], dtype=float)
    fixed = np.array([hi is not None and hi == lo for lo, hi in bounds], dtype=bool)
    free_idx = np.where(~fixed)[0]
    b_ub = b_ub - a_ub @ lows
    b_eq = b_eq - a_eq @ lows
    objective_offset = float(c @ lows)
    a_ub = a_ub[:, free_idx]
    a_eq = a_eq[:, free_idx]
    c_free = c[free_idx]
    upper_rows = []
    upper_rhs = []
    for pos, j in enumerate(free_idx):
        lo, hi = bounds[j]
        if hi is not None:
            row = np.zeros(free_idx.size)
            row[pos] = 1.0
            upper_rows.append(row)
            upper_rhs.append(hi - lo)
    if upper_rows:
        a_ub = np.vstack([a_ub, np.array(upper_rows)])
        b_ub = np.concatenate([b_ub, np.array(upper_rhs)])

    def finish(x_free: np.ndarray) -> LpSolution:
        x = lows.copy()
        x[free_idx] += x_free
        residual_ok = _feasible(lp, x, feas_tol)
        if not residual_ok:  # pragma: no cover - numerical safety net
            raise ArithmeticError("simplex returned an infeasible point")
        return LpSolution(
            status=LpStatus.OPTIMAL, x=x, objective_value=float(lp.objective @ x)
        )

    n_free = free_idx.size
    if n_free == 0:
        scale = max(1.0, float(np.abs(b_ub).max(initial=0.0)), float(np.abs(b_eq).max(initial=0.0)))
        if np.all(b_ub >= -feas_tol * scale) and np.all(np.abs(b_eq) <= feas_tol * scale):
            return finish(np.zeros(0))
        return LpSolution(status=LpStatus.INFEASIBLE)

    m_ub, m_eq = a_ub.shape[0], a_eq.shape[0]
    m = m_ub + m_eq
    if m == 0:
        # No rows at all: the origin of the shifted problem is optimal unless
        # some cost coefficient rewards growing a variable without limit.
        if np.any(c_free < -tol):
            return LpSolution(status=LpStatus.UNBOUNDED)
        return finish(np.zeros(n_free))

    # Columns: structural | ub slacks | artificials (appended as needed).
    a = np.zeros((m, n_free + m_ub))
    a[:m_ub, :n_free] = a_ub
    a[:m_ub, n_free : n_free + m_ub] = np.eye(m_ub)
    a[m_ub:, :n_free] = a_eq
    b = np.concatenate([b_ub, b_eq])
    negative = b < 0
    a[negative] *= -1.0
    b[negative] = -b[negative]

    basis: list[int] = []
    artificial_cols: list[np.ndarray] = []
    next_col = n_free + m_ub
    for i in range(m):
        if i < m_ub and not negative[i]:
            basis.append(n_free + i)  # slack enters the basis directly
        else:
            col = np.zeros(m)
            col[i] = 1.0
            artificial_cols.append(col)
            basis.append(next_col)
            next_col += 1
    num_artificial = len(artificial_cols)
    if num_artificial:
        a = np.hstack([a, np.column_stack(artificial_cols)])

    tableau = _Tableau(a, b, basis)
    total_cols = tableau.num_cols

    if num_artificial:
        phase1_cost = np.zeros(total_cols)
        phase1_cost[n_free + m_ub :] = 1.0
        allowed = np.ones(total_cols, dtype=bool)
        status = tableau.run(phase1_cost, allowed, tol)
        if status is not LpStatus.OPTIMAL:  # pragma: no cover - cannot be unbounded
            raise RuntimeError("phase 1 terminated abnormally")
        scale = max(1.0, float(np.abs(b).max(initial=0.0)))
        if tableau.objective(phase1_cost) > feas_tol * scale:
            return LpSolution(status=LpStatus.INFEASIBLE)
        _evict_artificials(tableau, n_free + m_ub)
        tableau.t = np.delete(tableau.t, np.s_[n_free + m_ub : total_cols], axis=1)
        total_cols = tableau.num_cols

    phase2_cost = np.zeros(total_cols)
    phase2_cost[:n_free] = c_free
    allowed = np.ones(total_cols, dtype=bool)
    tableau.blands_rule = False
    tableau._degenerate_run = 0
    status = tableau.run(phase2_cost, allowed, tol)
    if status is LpStatus.UNBOUNDED:
        return LpSolution(status=LpStatus.UNBOUNDED)

    x_free = np.zeros(total_cols)
    x_free[tableau.basis] = tableau.t[:, -1]
    return finish(x_free[:n_free])


def _evict_artificials(tableau: _Tableau, first_artificial: int) -> None:
    """Pivot zero-level artificial variables out of the basis.

    Rows whose artificial cannot be replaced are redundant constraints and
    are dropped.
    """
    drop_rows = []
    for row in range(tableau.t.shape[0]):
        if tableau.basis[row] < first_artificial:
            continue
        candidates = np.where(np.abs(tableau.t[row, :first_artificial]) > _PIVOT_TOL)[0]
        if candidates.size:
            tableau.pivot(row, int(candidates[0]))
        else:
            drop_rows.append(row)
    if drop_rows:
        tableau.t = np.delete(tableau.t, drop_rows, axis=0)
        tableau.basis = [bi for r, bi in enumerate(tableau.basis) if r not in set(drop_rows)]


def _feasible(lp: LinearProgram, x: np.ndarray, feas_tol: float) -> bool:
    scale = max(1.0, float(np.abs(x).max(initial=0.0)))
    if lp.a_ub is not None:
        if np.any(lp.a_ub @ x - lp.b_ub > feas_tol * scale):
            return False
    if lp.a_eq is not None:
        if np.any(np.abs(lp.a_eq @ x - lp.b_eq) > feas_tol * scale):
            return False
    bounds = lp.bounds if lp.bounds is not None else tuple((0.0, None) for _ in range(x.size))
    for j, (lo, hi) in enumerate(bounds):
        if x[j] < lo - feas_tol * scale:
            return False
        if hi is not None and x[j] > hi + feas_tol * scale:
            return False
    return True
