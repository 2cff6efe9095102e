"""Self-contained dense two-phase simplex solver.

Solves  min c.x  s.t.  A_eq x = b_eq,  A_ub x <= b_ub,  x >= 0  on a full
tableau.  The default pivot rule is Dantzig (most negative reduced cost,
lowest column index on ties) with an automatic, deterministic switch to
Bland's rule when the objective stalls, so the solver cannot cycle and
reruns agree bit for bit.  The LP sizes here are a few hundred rows, where
a dense tableau is entirely adequate.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import CapabilityError

TOL = 1e-9
RATIO_TOL = 1e-10
STALL_LIMIT = 512


@dataclass
class LinearProgram:
    """min c.x + offset subject to A_eq x = b_eq, A_ub x <= b_ub, x >= 0."""

    c: np.ndarray
    A_eq: np.ndarray
    b_eq: np.ndarray
    A_ub: np.ndarray
    b_ub: np.ndarray
    offset: float = 0.0
    names: list = field(default_factory=list)

    @property
    def nvars(self) -> int:
        return self.c.shape[0]

    def dump(self) -> str:
        """Plain-text normalized form: objective row, then constraint rows."""
        def term(coef, j):
            name = self.names[j] if j < len(self.names) else f"x{j}"
            return f"{coef:+.12g}*{name}"

        lines = [
            "min "
            + " ".join(term(c, j) for j, c in enumerate(self.c) if c != 0.0)
            + (f" {self.offset:+.12g}" if self.offset else "")
        ]
        for row, rhs in zip(self.A_eq, self.b_eq):
            lines.append(
                " ".join(term(a, j) for j, a in enumerate(row) if a != 0.0)
                + f" == {rhs:.12g}"
            )
        for row, rhs in zip(self.A_ub, self.b_ub):
            lines.append(
                " ".join(term(a, j) for j, a in enumerate(row) if a != 0.0)
                + f" <= {rhs:.12g}"
            )
        return "\n".join(lines)


@dataclass
class SimplexResult:
    status: str  # optimal | infeasible | capability-error
    x: np.ndarray | None
    objective: float
    iterations: int
    pivot_rule: str


def _pivot(T: np.ndarray, basis: np.ndarray, r: int, j: int):
    T[r] /= T[r, j]
    col = T[:, j].copy()
    col[r] = 0.0
    T -= np.outer(col, T[r])
    basis[r] = j


def _choose_entering(costrow: np.ndarray, allowed: int, bland: bool) -> int:
    negative = np.nonzero(costrow[:allowed] < -TOL)[0]
    if negative.size == 0:
        return -1
    if bland:
        return int(negative[0])
    j = negative[np.argmin(costrow[negative])]
    best = costrow[j]
    ties = negative[costrow[negative] <= best + TOL * max(1.0, -best)]
    return int(ties[0])


def _choose_leaving(T: np.ndarray, basis: np.ndarray, j: int, m: int) -> int:
    col = T[:m, j]
    rhs = T[:m, -1]
    rows = np.nonzero(col > TOL)[0]
    if rows.size == 0:
        return -1
    ratios = rhs[rows] / col[rows]
    rmin = ratios.min()
    ties = rows[ratios <= rmin + RATIO_TOL * max(1.0, abs(rmin))]
    # lowest basic-variable index on ties (Bland-compatible, anti-cycling)
    return int(ties[np.argmin(basis[ties])])


def _run_phase(T, basis, m, allowed, maxiter, start_iter, pivot_rule):
    bland = pivot_rule == "bland"
    stall = 0
    last_obj = T[-1, -1]
    it = start_iter
    while True:
        if it >= maxiter:
            raise CapabilityError(f"simplex exceeded {maxiter} iterations")
        j = _choose_entering(T[-1], allowed, bland)
        if j < 0:
            return it
        r = _choose_leaving(T, basis, j, m)
        if r < 0:
            raise CapabilityError("LP is unbounded; the cut models never are")
        _pivot(T, basis, r, j)
        it += 1
        if not bland:
            if T[-1, -1] > last_obj + TOL:
                stall = 0
                last_obj = T[-1, -1]
            else:
                stall += 1
                if stall > STALL_LIMIT:
                    bland = True
    return it


def solve_simplex(
    lp: LinearProgram,
    pivot_rule: str = "dantzig",
    maxiter: int = 200_000,
) -> SimplexResult:
    """Two-phase tableau simplex with deterministic pivoting."""
    if pivot_rule not in ("dantzig", "bland"):
        raise ValueError(f"unknown pivot rule {pivot_rule!r}")
    nv = lp.nvars
    A_eq = lp.A_eq.reshape(-1, nv) if lp.A_eq.size else np.zeros((0, nv))
    A_ub = lp.A_ub.reshape(-1, nv) if lp.A_ub.size else np.zeros((0, nv))
    b_eq = np.asarray(lp.b_eq, dtype=np.float64).reshape(-1)
    b_ub = np.asarray(lp.b_ub, dtype=np.float64).reshape(-1)
    m_eq, m_ub = A_eq.shape[0], A_ub.shape[0]
    m = m_eq + m_ub
    if nv == 0:
        feasible = np.all(np.abs(b_eq) <= TOL) and np.all(b_ub >= -TOL)
        return SimplexResult(
            "optimal" if feasible else "infeasible",
            np.zeros(0),
            lp.offset,
            0,
            pivot_rule,
        )

    nslack = m_ub
    A = np.zeros((m, nv + nslack))
    b = np.concatenate([b_eq, b_ub])
    A[:m_eq, :nv] = A_eq
    A[m_eq:, :nv] = A_ub
    A[m_eq:, nv:] = np.eye(m_ub)
    flip = b < 0
    A[flip] *= -1.0
    b = np.abs(b)

    # rows whose slack survived the sign flip start basic; others need an
    # artificial variable
    basis = np.full(m, -1, dtype=np.int64)
    need_art = []
    for i in range(m):
        if i >= m_eq and not flip[i]:
            basis[i] = nv + (i - m_eq)
        else:
            need_art.append(i)
    nart = len(need_art)
    ncol = nv + nslack + nart
    T = np.zeros((m + 1, ncol + 1))
    T[:m, : nv + nslack] = A
    T[:m, -1] = b
    for a, i in enumerate(need_art):
        T[i, nv + nslack + a] = 1.0
        basis[i] = nv + nslack + a

    iterations = 0
    if nart:
        # phase 1: minimize the artificial sum; canonical cost row
        T[-1, :] = 0.0
        for i in need_art:
            T[-1, : ncol] -= T[i, : ncol]
            T[-1, -1] -= T[i, -1]
        T[-1, nv + nslack:ncol] = 0.0
        iterations = _run_phase(T, basis, m, ncol, maxiter, iterations, pivot_rule)
        if -T[-1, -1] > 1e-7:
            return SimplexResult("infeasible", None, np.nan, iterations, pivot_rule)
        # drive any degenerate artificial out of the basis
        drop_rows = []
        for i in range(m):
            if basis[i] >= nv + nslack:
                pivots = np.nonzero(np.abs(T[i, : nv + nslack]) > TOL)[0]
                if pivots.size:
                    _pivot(T, basis, i, int(pivots[0]))
                else:
                    drop_rows.append(i)
        if drop_rows:
            keep = [i for i in range(m) if i not in set(drop_rows)]
            T = np.vstack([T[keep], T[-1][None, :]])
            basis = basis[keep]
            m = len(keep)
        T = np.delete(T, np.s_[nv + nslack:ncol], axis=1)
        ncol = nv + nslack

    # phase 2 cost row over the current basis
    c_full = np.zeros(ncol)
    c_full[:nv] = lp.c
    T[-1, :ncol] = c_full - c_full[basis] @ T[:m, :ncol]
    T[-1, -1] = -float(c_full[basis] @ T[:m, -1])
    iterations = _run_phase(T, basis, m, ncol, maxiter, iterations, pivot_rule)

    x = np.zeros(ncol)
    x[basis] = T[:m, -1]
    objective = float(lp.c @ x[:nv]) + lp.offset
    return SimplexResult("optimal", x[:nv].copy(), objective, iterations, pivot_rule)
