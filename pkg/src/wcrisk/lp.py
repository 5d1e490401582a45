"""
Small dense linear programming.

Two-phase tableau simplex with Bland's anti-cycling rule. Intended for
desk-scale problems (a few hundred rows or columns at most): the moment
LPs of the oracle, the linear-minimization oracle of Frank-Wolfe and the
Kelley master problem of the polytopic solver.

The public entry point mirrors the familiar ``linprog`` calling convention::

    minimize    c @ x
    subject to  A_ub @ x <= b_ub
                A_eq @ x == b_eq
                lo <= x <= hi
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import InfeasibleError, UnboundedError

_PIVOT_TOL = 1e-10
_COST_TOL = 1e-10


@dataclass(frozen=True)
class LPResult:
    """Optimal solution of a linear program.

    ``eq_marginals`` and ``ub_marginals`` are the sensitivities of the
    optimal value with respect to ``b_eq`` and ``b_ub`` (dual values in the
    ``linprog`` sign convention: non-positive for ``<=`` rows).
    """

    x: np.ndarray
    fun: float
    eq_marginals: np.ndarray
    ub_marginals: np.ndarray
    iterations: int


class _Tableau:
    """Dense simplex tableau ``T y = rhs`` with an explicit basis list."""

    def __init__(self, T: np.ndarray, rhs: np.ndarray, basis: list[int]):
        self.T = T
        self.rhs = rhs
        self.basis = basis
        self.iterations = 0

    def pivot(self, row: int, col: int) -> None:
        T, rhs = self.T, self.rhs
        piv = T[row, col]
        T[row] /= piv
        rhs[row] /= piv
        col_vals = T[:, col].copy()
        col_vals[row] = 0.0
        nz = np.nonzero(col_vals)[0]
        if nz.size:
            T[nz] -= np.outer(col_vals[nz], T[row])
            rhs[nz] -= col_vals[nz] * rhs[row]
        T[:, col] = 0.0
        T[row, col] = 1.0
        np.maximum(rhs, 0.0, out=rhs, where=rhs > -1e-13)
        self.basis[row] = col
        self.iterations += 1

    def optimize(self, cost: np.ndarray, allowed: int, max_iter: int) -> None:
        """Run Bland's-rule simplex on columns ``[0, allowed)``."""
        scale = max(1.0, float(np.max(np.abs(cost[:allowed]), initial=0.0)))
        tol = _COST_TOL * scale
        for _ in range(max_iter):
            cb = cost[self.basis]
            reduced = cost[:allowed] - cb @ self.T[:, :allowed]
            candidates = np.nonzero(reduced < -tol)[0]
            if candidates.size == 0:
                return
            col = int(candidates[0])
            column = self.T[:, col]
            pos = np.nonzero(column > _PIVOT_TOL)[0]
            if pos.size == 0:
                raise UnboundedError("linear program is unbounded")
            ratios = self.rhs[pos] / column[pos]
            best = ratios.min()
            ties = pos[ratios <= best + 1e-12 * max(1.0, abs(best))]
            row = int(min(ties, key=lambda r: self.basis[r]))
            self.pivot(row, col)
        raise RuntimeError(f"simplex did not terminate within {max_iter} pivots")


def _standardize(c, A_ub, b_ub, A_eq, b_eq, bounds):
    """Map the general problem to ``min c'y, A y = b, y >= 0``.

    Returns the standard-form data plus the affine map ``x = offset + M y``
    (restricted to the structural columns) and bookkeeping for the rows.
    """
    n = c.size
    if bounds is None:
        bounds = [(0.0, None)] * n
    elif isinstance(bounds, tuple) and len(bounds) == 2 and all(
        v is None or np.isscalar(v) for v in bounds
    ):
        bounds = [bounds] * n
    if len(bounds) != n:
        raise ValueError("bounds must have one (lo, hi) pair per variable")

    cols: list[tuple[int, float]] = []  # (original variable, coefficient)
    offset = np.zeros(n)
    extra_rows: list[tuple[int, float]] = []  # (standard column, upper limit)
    for j, (lo, hi) in enumerate(bounds):
        lo = -np.inf if lo is None else float(lo)
        hi = np.inf if hi is None else float(hi)
        if lo > hi:
            raise InfeasibleError(f"variable {j} has lower bound above upper bound")
        if np.isfinite(lo):
            offset[j] = lo
            cols.append((j, 1.0))
            if np.isfinite(hi):
                extra_rows.append((len(cols) - 1, hi - lo))
        elif np.isfinite(hi):
            offset[j] = hi
            cols.append((j, -1.0))
        else:
            cols.append((j, 1.0))
            cols.append((j, -1.0))

    M = np.zeros((n, len(cols)))
    for k, (j, coef) in enumerate(cols):
        M[j, k] = coef

    m_ub = 0 if A_ub is None else A_ub.shape[0]
    m_eq = 0 if A_eq is None else A_eq.shape[0]
    n_struct = len(cols)
    n_slack = m_ub + len(extra_rows)
    m = m_ub + len(extra_rows) + m_eq

    A = np.zeros((m, n_struct + n_slack))
    b = np.zeros(m)
    if m_ub:
        A[:m_ub, :n_struct] = A_ub @ M
        b[:m_ub] = b_ub - A_ub @ offset
    for r, (k, ub) in enumerate(extra_rows):
        A[m_ub + r, k] = 1.0
        b[m_ub + r] = ub
    for r in range(n_slack):
        A[r, n_struct + r] = 1.0
    if m_eq:
        A[m_ub + len(extra_rows):, :n_struct] = A_eq @ M
        b[m_ub + len(extra_rows):] = b_eq - A_eq @ offset

    cost = np.concatenate([M.T @ c, np.zeros(n_slack)])
    return A, b, cost, M, offset, m_ub, n_slack, n_struct


def linprog(
    c: Sequence[float],
    A_ub: Optional[np.ndarray] = None,
    b_ub: Optional[Sequence[float]] = None,
    A_eq: Optional[np.ndarray] = None,
    b_eq: Optional[Sequence[float]] = None,
    bounds=None,
    max_iter: Optional[int] = None,
) -> LPResult:
    """Solve a small dense linear program by the two-phase simplex method.

    Parameters
    ----------
    c : array_like
        Cost vector (minimized).
    A_ub, b_ub : array_like, optional
        Inequality rows ``A_ub @ x <= b_ub``.
    A_eq, b_eq : array_like, optional
        Equality rows ``A_eq @ x == b_eq``.
    bounds : sequence of (lo, hi), optional
        Per-variable bounds; ``None`` means unbounded on that side. Default
        is ``x >= 0``, as in ``scipy.optimize.linprog``.
    max_iter : int, optional
        Pivot budget per phase.

    Raises
    ------
    InfeasibleError, UnboundedError
    """
    c = np.asarray(c, dtype=float).ravel()
    A_ub = None if A_ub is None else np.atleast_2d(np.asarray(A_ub, dtype=float))
    A_eq = None if A_eq is None else np.atleast_2d(np.asarray(A_eq, dtype=float))
    b_ub = None if b_ub is None else np.asarray(b_ub, dtype=float).ravel()
    b_eq = None if b_eq is None else np.asarray(b_eq, dtype=float).ravel()
    if A_ub is not None and A_ub.size == 0:
        A_ub, b_ub = None, None
    if A_eq is not None and A_eq.size == 0:
        A_eq, b_eq = None, None

    A, b, cost, M, offset, m_ub, n_slack, n_struct = _standardize(
        c, A_ub, b_ub, A_eq, b_eq, bounds
    )
    m, N = A.shape
    sign = np.where(b < 0, -1.0, 1.0)
    A = A * sign[:, None]
    b = b * sign
    if max_iter is None:
        max_iter = 50 * (m + N) + 1000

    # slack columns that are +1 on a non-flipped row start basic
    basis: list[int] = []
    art_rows: list[int] = []
    for r in range(m):
        if r < n_slack and sign[r] > 0:
            basis.append(n_struct + r)
        else:
            basis.append(-1)
            art_rows.append(r)
    n_art = len(art_rows)
    T = np.zeros((m, N + n_art))
    T[:, :N] = A
    for k, r in enumerate(art_rows):
        T[r, N + k] = 1.0
        basis[r] = N + k
    tab = _Tableau(T, b.copy(), basis)

    if n_art:
        phase1 = np.zeros(N + n_art)
        phase1[N:] = 1.0
        tab.optimize(phase1, N + n_art, max_iter)
        infeas = float(tab.rhs[[r for r in range(m) if tab.basis[r] >= N]].sum())
        if infeas > 1e-9 * max(1.0, float(np.abs(b).max(initial=0.0))):
            raise InfeasibleError("linear program is infeasible")
        keep = []
        for r in range(m):
            if tab.basis[r] >= N:
                nz = np.nonzero(np.abs(tab.T[r, :N]) > 1e-9)[0]
                if nz.size:
                    tab.pivot(r, int(nz[0]))
                    keep.append(r)
                # otherwise the row is redundant and is dropped
            else:
                keep.append(r)
        tab = _Tableau(tab.T[keep][:, :N].copy(), tab.rhs[keep].copy(), [tab.basis[r] for r in keep])
        tab.iterations = 0
        rows = keep
    else:
        rows = list(range(m))
    tab.optimize(cost, N, max_iter)

    # re-solve basic values and duals against the original matrix for accuracy
    B = A[np.ix_(rows, tab.basis)]
    y = np.zeros(N)
    try:
        y[tab.basis] = np.linalg.solve(B, b[rows])
        duals_kept = np.linalg.solve(B.T, cost[tab.basis])
    except np.linalg.LinAlgError:
        y[tab.basis] = tab.rhs
        duals_kept = np.zeros(len(rows))
    y = np.maximum(y, 0.0)
    duals = np.zeros(m)
    duals[rows] = duals_kept
    duals *= sign

    x = offset + M @ y[:n_struct]
    n_bound_rows = n_slack - m_ub
    ub_marg = duals[:m_ub]
    eq_marg = duals[m_ub + n_bound_rows:]
    return LPResult(
        x=x,
        fun=float(c @ x),
        eq_marginals=eq_marg,
        ub_marginals=ub_marg,
        iterations=tab.iterations,
    )
