"""Dense two-phase primal simplex for small linear programs.

    min c'x   s.t.  A x <= b,  E x = f,  lo <= x <= hi

Bland's rule throughout, so termination is guaranteed; a pivot budget of
50 * (rows + columns) still guards the loop and raises CycleGuardTripped
if exhausted. Intended for desk-scale problems (at most 10_000 columns
after standard-form conversion); everything is dense numpy.

The optimal outcome carries a dual certificate (row multipliers, the most
negative reduced cost, and the primal-dual gap) so callers can verify
optimality independently.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import CycleGuardTripped, NonFinite, ValidationError

_PIVOT_TOL = 1e-9
_MAX_COLUMNS = 10_000


@dataclass(frozen=True, eq=False)
class LpProblem:
    c: np.ndarray
    A: Optional[np.ndarray] = None   # inequality rows A x <= b
    b: Optional[np.ndarray] = None
    E: Optional[np.ndarray] = None   # equality rows E x = f
    f: Optional[np.ndarray] = None
    lo: Optional[np.ndarray] = None  # defaults to 0
    hi: Optional[np.ndarray] = None  # defaults to +inf

    def __post_init__(self):
        c = np.asarray(self.c, dtype=float)
        if c.ndim != 1 or c.size == 0:
            raise ValidationError("lp: cost must be a nonempty vector")
        n = c.shape[0]
        A = np.zeros((0, n)) if self.A is None else np.asarray(self.A, dtype=float)
        b = np.zeros(0) if self.b is None else np.asarray(self.b, dtype=float)
        E = np.zeros((0, n)) if self.E is None else np.asarray(self.E, dtype=float)
        f = np.zeros(0) if self.f is None else np.asarray(self.f, dtype=float)
        lo = np.zeros(n) if self.lo is None else np.asarray(self.lo, dtype=float)
        hi = np.full(n, np.inf) if self.hi is None else np.asarray(self.hi, dtype=float)
        if A.shape != (b.shape[0], n) or E.shape != (f.shape[0], n):
            raise ValidationError("lp: constraint matrix/rhs shapes disagree")
        if lo.shape != (n,) or hi.shape != (n,):
            raise ValidationError("lp: bound vectors must have length n")
        if np.any(lo > hi):
            raise ValidationError("lp: lower bound exceeds upper bound")
        for name, arr in (("c", c), ("A", A), ("b", b), ("E", E), ("f", f)):
            if not np.all(np.isfinite(arr)):
                raise NonFinite(f"lp: non-finite entries in {name}")
        if np.any(np.isnan(lo)) or np.any(np.isnan(hi)):
            raise NonFinite("lp: NaN in bounds")
        for name, value in (("c", c), ("A", A), ("b", b), ("E", E), ("f", f), ("lo", lo), ("hi", hi)):
            object.__setattr__(self, name, value)

    @property
    def n(self) -> int:
        return self.c.shape[0]


@dataclass(frozen=True, eq=False)
class LpOutcome:
    status: str                      # "optimal" | "infeasible" | "unbounded"
    x: Optional[np.ndarray] = None
    value: Optional[float] = None
    dual_ineq: Optional[np.ndarray] = None   # multipliers of A x <= b, <= 0 orientation
    dual_eq: Optional[np.ndarray] = None     # multipliers of E x = f
    reduced_cost_min: Optional[float] = None
    duality_gap: Optional[float] = None
    pivots: int = 0


class _Tableau:
    """Full tableau with an extra reduced-cost row at the bottom."""

    def __init__(self, M: np.ndarray, rhs: np.ndarray):
        m, n = M.shape
        self.m = m
        self.n = n
        self.T = np.zeros((m + 1, n + 1))
        self.T[:m, :n] = M
        self.T[:m, n] = rhs
        self.basis = [-1] * m
        self.pivots = 0

    def set_costs(self, c: np.ndarray) -> None:
        cb = np.array([c[j] for j in self.basis])
        self.T[self.m, : self.n] = c - cb @ self.T[: self.m, : self.n]
        self.T[self.m, self.n] = -float(cb @ self.T[: self.m, self.n])

    def pivot(self, row: int, col: int) -> None:
        T = self.T
        T[row] = T[row] / T[row, col]
        fac = T[:, col].copy()
        fac[row] = 0.0
        T -= np.outer(fac, T[row])
        T[:, col] = 0.0
        T[row, col] = 1.0
        self.basis[row] = col
        self.pivots += 1
        # tiny negative basic values are rounding debris
        rhs = T[: self.m, self.n]
        rhs[(rhs < 0) & (rhs > -_PIVOT_TOL)] = 0.0

    def run(self, allowed: np.ndarray, cap: int) -> str:
        """Bland pivoting until optimal or unbounded; `allowed` bars columns."""
        T = self.T
        m, n = self.m, self.n
        while True:
            costs = T[m, :n]
            enter = -1
            for j in range(n):
                if allowed[j] and costs[j] < -_PIVOT_TOL:
                    enter = j
                    break
            if enter < 0:
                return "optimal"
            col = T[:m, enter]
            rows = np.nonzero(col > _PIVOT_TOL)[0]
            if rows.size == 0:
                return "unbounded"
            ratios = T[rows, n] / col[rows]
            best = np.min(ratios)
            # Bland tie-break: smallest basis index among minimizing rows
            tie = rows[ratios <= best + _PIVOT_TOL * (1.0 + abs(best))]
            leave = min(tie, key=lambda r: self.basis[r])
            if self.pivots >= cap:
                raise CycleGuardTripped(f"lp: pivot budget {cap} exhausted")
            self.pivot(int(leave), enter)


def solve_lp(problem: LpProblem) -> LpOutcome:
    """Solve an LpProblem; outcome status is "optimal", "infeasible" or "unbounded"."""
    n = problem.n
    lo, hi = problem.lo, problem.hi

    # --- standard-form conversion: columns z >= 0, x = shift +/- z ---------
    # per original variable: list of (column, sign) pairs plus offset
    col_sign: list = []
    offsets = np.zeros(n)
    upper_rows: list = []          # (column, range) extra rows z_col <= range
    ncols = 0
    for j in range(n):
        lo_j, hi_j = lo[j], hi[j]
        if np.isfinite(lo_j):
            col_sign.append([(ncols, 1.0)])
            offsets[j] = lo_j
            if np.isfinite(hi_j):
                upper_rows.append((ncols, hi_j - lo_j))
            ncols += 1
        elif np.isfinite(hi_j):
            col_sign.append([(ncols, -1.0)])
            offsets[j] = hi_j
            ncols += 1
        else:
            col_sign.append([(ncols, 1.0), (ncols + 1, -1.0)])
            ncols += 2
    if ncols > _MAX_COLUMNS:
        raise ValidationError(f"lp: {ncols} columns exceeds the {_MAX_COLUMNS} cap")

    def expand(mat: np.ndarray) -> np.ndarray:
        out = np.zeros((mat.shape[0], ncols))
        for j in range(n):
            for col, sign in col_sign[j]:
                out[:, col] += sign * mat[:, j]
        return out

    n_ineq = problem.A.shape[0]
    n_eq = problem.E.shape[0]
    n_up = len(upper_rows)
    A_std = expand(problem.A)
    E_std = expand(problem.E)
    b_std = problem.b - problem.A @ offsets
    f_std = problem.f - problem.E @ offsets
    U_std = np.zeros((n_up, ncols))
    u_rhs = np.zeros(n_up)
    for i, (col, rng) in enumerate(upper_rows):
        U_std[i, col] = 1.0
        u_rhs[i] = rng

    c_std = np.zeros(ncols)
    for j in range(n):
        for col, sign in col_sign[j]:
            c_std[col] += sign * problem.c[j]
    shift_cost = float(problem.c @ offsets)

    m = n_ineq + n_up + n_eq
    nslack = n_ineq + n_up
    M = np.zeros((m, ncols + nslack + m))
    rhs = np.concatenate([b_std, u_rhs, f_std])
    M[:n_ineq, :ncols] = A_std
    M[n_ineq : n_ineq + n_up, :ncols] = U_std
    M[n_ineq + n_up :, :ncols] = E_std
    for i in range(nslack):
        M[i, ncols + i] = 1.0
    # flip rows so every rhs is nonnegative; remember signs for dual recovery
    row_sign = np.ones(m)
    for i in range(m):
        if rhs[i] < 0:
            M[i] *= -1.0
            rhs[i] *= -1.0
            row_sign[i] = -1.0
    art0 = ncols + nslack
    for i in range(m):
        M[i, art0 + i] = 1.0

    tab = _Tableau(M, rhs)
    tab.basis = list(range(art0, art0 + m))
    total_cols = M.shape[1]
    cap = 50 * (m + total_cols)

    # --- phase 1 ------------------------------------------------------------
    phase1_cost = np.zeros(total_cols)
    phase1_cost[art0:] = 1.0
    tab.set_costs(phase1_cost)
    allowed = np.ones(total_cols, dtype=bool)
    status = tab.run(allowed, cap)
    if status == "unbounded":           # cannot happen: phase-1 objective >= 0
        raise NonFinite("lp: phase 1 reported unbounded")
    infeas = -float(tab.T[tab.m, tab.n])
    if infeas > 1e-7 * (1.0 + float(np.max(np.abs(rhs), initial=0.0))):
        return LpOutcome(status="infeasible", pivots=tab.pivots)

    # drive artificials out of the basis; rows that will not pivot are redundant
    drop_rows = []
    for i in range(tab.m):
        if tab.basis[i] >= art0:
            row = tab.T[i, :art0]
            cand = np.nonzero(np.abs(row) > _PIVOT_TOL)[0]
            if cand.size:
                tab.pivot(i, int(cand[0]))
            else:
                drop_rows.append(i)
    if drop_rows:
        keep = [i for i in range(tab.m) if i not in set(drop_rows)]
        tab.T = np.vstack([tab.T[keep], tab.T[tab.m :]])
        tab.basis = [tab.basis[i] for i in keep]
        tab.m = len(keep)

    # --- phase 2 ------------------------------------------------------------
    phase2_cost = np.zeros(total_cols)
    phase2_cost[:ncols] = c_std
    tab.set_costs(phase2_cost)
    allowed = np.ones(total_cols, dtype=bool)
    allowed[art0:] = False
    status = tab.run(allowed, cap)
    if status == "unbounded":
        return LpOutcome(status="unbounded", pivots=tab.pivots)

    # --- recover primal, duals, certificate ----------------------------------
    z = np.zeros(total_cols)
    for i, j in enumerate(tab.basis):
        z[j] = tab.T[i, tab.n]
    x = offsets.copy()
    for j in range(n):
        for col, sign in col_sign[j]:
            x[j] += sign * z[col]
    value = float(c_std @ z[:ncols]) + shift_cost

    # artificial columns started as +/- e_i, so y_i = -sign_i * cbar(art_i)
    cbar = tab.T[tab.m, : tab.n]
    dropped = set(drop_rows)
    y = np.zeros(m)
    for i in range(m):
        if i not in dropped:             # redundant rows keep multiplier zero
            y[i] = -row_sign[i] * cbar[art0 + i]
    dual_ineq = y[:n_ineq].copy()
    dual_eq = y[n_ineq + n_up :].copy()
    # standard-form dual objective on the original (unflipped) rows
    dual_obj = float(y @ np.concatenate([b_std, u_rhs, f_std])) + shift_cost
    scale = 1.0 + abs(value)
    gap = abs(value - dual_obj)
    reduced_min = float(np.min(cbar[:art0], initial=0.0))

    return LpOutcome(
        status="optimal",
        x=x,
        value=value,
        dual_ineq=dual_ineq,
        dual_eq=dual_eq,
        reduced_cost_min=reduced_min,
        duality_gap=float(gap / scale),
        pivots=tab.pivots,
    )
