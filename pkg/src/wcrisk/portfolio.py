"""
Robust portfolio selection under moment ambiguity.

The loss of allocation ``x`` is ``-R^T x``. When only the mean ``mu`` and
covariance ``Sigma`` of the returns ``R`` are known, the worst-case risk of
``sup_{phi in set} rho_phi`` reduces to the mean-deviation objective::

    f(x) = -mu^T x + kappa * sqrt(x^T Sigma x),   kappa = sqrt(sup int phi^2 - 1)

which is minimized here over a bounded polytope by Frank-Wolfe with away
steps. With a finite list of candidate moment pairs the objective becomes
``max_k f_k(x)``, handled by Kelley's cutting-plane method.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from .errors import InfeasibleError, UnboundedError
from .lp import linprog
from .moments import MomentMatrixPair, MomentPair
from .spectra import Spectrum, SpectrumSet
from .worstcase import kappa_of

log = logging.getLogger(__name__)

FEAS_TOL = 1e-8


@dataclass(frozen=True)
class Polytope:
    """``{x : A x <= b, E x = f, lower <= x <= upper}``, bounded and excluding 0."""

    A: np.ndarray
    b: np.ndarray
    E: np.ndarray
    f: np.ndarray
    lower: np.ndarray
    upper: np.ndarray

    def __init__(self, n: int, A=None, b=None, E=None, f=None, lower=None, upper=None):
        def rows(M, v, name):
            if M is None or len(M) == 0:
                return np.zeros((0, n)), np.zeros(0)
            M = np.atleast_2d(np.asarray(M, dtype=float))
            v = np.asarray(v, dtype=float).ravel()
            if M.shape[1] != n or M.shape[0] != v.size:
                raise ValueError(f"constraint block {name} has inconsistent shape")
            return M, v

        A, b = rows(A, b, "A/b")
        E, f = rows(E, f, "E/f")
        lower = np.full(n, -np.inf) if lower is None else np.asarray(lower, dtype=float).ravel()
        upper = np.full(n, np.inf) if upper is None else np.asarray(upper, dtype=float).ravel()
        if lower.size != n or upper.size != n:
            raise ValueError("bounds must have one entry per asset")
        for name, val in (("A", A), ("b", b), ("E", E), ("f", f), ("lower", lower), ("upper", upper)):
            val.setflags(write=False)
            object.__setattr__(self, name, val)
        self._check()

    @classmethod
    def simplex(cls, n: int) -> "Polytope":
        """Long-only, fully invested allocations."""
        return cls(n, E=np.ones((1, n)), f=[1.0], lower=np.zeros(n), upper=np.ones(n))

    @property
    def n(self) -> int:
        return self.lower.size

    def bounds(self) -> list:
        return [
            (None if np.isinf(lo) else lo, None if np.isinf(hi) else hi)
            for lo, hi in zip(self.lower, self.upper)
        ]

    def lp_blocks(self) -> dict:
        return dict(
            A_ub=self.A if self.A.size else None,
            b_ub=self.b if self.A.size else None,
            A_eq=self.E if self.E.size else None,
            b_eq=self.f if self.E.size else None,
        )

    def contains(self, x, tol: float = FEAS_TOL) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(
            np.all(self.A @ x <= self.b + tol)
            and np.all(np.abs(self.E @ x - self.f) <= tol)
            and np.all(x >= self.lower - tol)
            and np.all(x <= self.upper + tol)
        )

    def max_norm(self) -> float:
        """Upper bound on ``|x|_2`` over the polytope from per-coordinate LPs."""
        ext = np.zeros(self.n)
        for j in range(self.n):
            e = np.zeros(self.n)
            e[j] = 1.0
            ext[j] = max(abs(self.minimize_linear(e)[j]), abs(self.minimize_linear(-e)[j]))
        return float(np.linalg.norm(ext))

    def minimize_linear(self, c) -> np.ndarray:
        """A vertex minimizing ``c^T x`` over the polytope."""
        return linprog(c, bounds=self.bounds(), **self.lp_blocks()).x

    def _check(self) -> None:
        n = self.n
        try:
            for j in range(n):
                e = np.zeros(n)
                e[j] = 1.0
                for sgn in (1.0, -1.0):
                    if np.isinf(self.lower[j] if sgn > 0 else self.upper[j]):
                        self.minimize_linear(sgn * e)
            self.minimize_linear(np.zeros(n))
        except UnboundedError:
            raise UnboundedError("allocation set is not bounded") from None
        if self.contains(np.zeros(n), tol=0.0):
            raise InfeasibleError("allocation set contains the zero portfolio")

    def to_dict(self) -> dict:
        def finite(v):
            return [None if np.isinf(t) else float(t) for t in v]

        return {
            "A": self.A.tolist(),
            "b": self.b.tolist(),
            "E": self.E.tolist(),
            "f": self.f.tolist(),
            "bounds": [list(p) for p in zip(finite(self.lower), finite(self.upper))],
        }


@dataclass(frozen=True)
class RobustSolution:
    x: np.ndarray
    objective: float
    kappa: float
    gap: float
    iterations: int
    method: str = "frank-wolfe"
    vertex_objectives: Optional[np.ndarray] = field(default=None, repr=False)

    def to_dict(self) -> dict:
        out = {
            "x": self.x.tolist(),
            "objective": self.objective,
            "kappa": self.kappa,
            "equivalent_epsilon": 1.0 / (self.kappa**2 + 1.0),
            "gap": self.gap,
            "iterations": self.iterations,
            "method": self.method,
        }
        if self.vertex_objectives is not None:
            out["vertex_objectives"] = self.vertex_objectives.tolist()
        return out


KappaLike = Union[SpectrumSet, Spectrum, Sequence[Spectrum], float]


def resolve_kappa(spectra: KappaLike) -> float:
    if isinstance(spectra, (int, float)):
        if spectra < 0.0:
            raise ValueError("kappa must be non-negative")
        return float(spectra)
    if isinstance(spectra, Spectrum):
        return kappa_of(spectra)
    if not isinstance(spectra, SpectrumSet):
        spectra = SpectrumSet(spectra)
    return kappa_of(spectra)


def reduce(x, mm: MomentMatrixPair) -> MomentPair:
    """Mean and standard deviation of ``R^T x`` for returns with moments ``mm``."""
    x = np.asarray(x, dtype=float)
    if not np.any(x):
        raise ValueError("allocation must be non-zero")
    return MomentPair(float(mm.mean @ x), math.sqrt(max(float(x @ mm.cov @ x), 0.0)))


def _objective(x, mean, cov, kappa) -> float:
    return float(-mean @ x + kappa * math.sqrt(max(float(x @ cov @ x), 0.0)))


def robust_objective(x, mm: MomentMatrixPair, spectra: KappaLike) -> float:
    """Worst-case risk of the loss ``-R^T x``: ``-mu^T x + kappa sqrt(x^T Sigma x)``."""
    x = np.asarray(x, dtype=float)
    if not np.any(x):
        raise ValueError("allocation must be non-zero")
    return _objective(x, mm.mean, mm.cov, resolve_kappa(spectra))


def _value_grad(x, mean, cov, kappa):
    Sx = cov @ x
    sd = math.sqrt(max(float(x @ Sx), 0.0))
    f = float(-mean @ x + kappa * sd)
    if kappa == 0.0 or sd < 1e-12:
        # zero is a valid subgradient selection of the deviation term at its kink
        return f, -mean.copy()
    return f, -mean + (kappa / sd) * Sx


def _line_search(x, d, gmax, mean, cov, kappa, tol=1e-12) -> float:
    """Exact minimizer of the convex restriction ``f(x + g d)`` over ``[0, gmax]``."""

    def slope(g):
        return float(_value_grad(x + g * d, mean, cov, kappa)[1] @ d)

    if slope(gmax) <= 0.0:
        return gmax
    if slope(0.0) >= 0.0:
        return 0.0
    lo, hi = 0.0, gmax
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if slope(mid) > 0.0:
            hi = mid
        else:
            lo = mid
    # bisection brackets the minimizer; pick the better end
    f_lo = _objective(x + lo * d, mean, cov, kappa)
    f_hi = _objective(x + hi * d, mean, cov, kappa)
    return lo if f_lo <= f_hi else hi


def _regularized_cov(mm: MomentMatrixPair) -> tuple[np.ndarray, float]:
    cov = np.asarray(mm.cov)
    jitter = 0.0
    if mm.n and np.linalg.eigvalsh(cov).min() <= 0.0:
        jitter = 1e-12 * float(np.trace(cov)) / mm.n
        if jitter == 0.0:
            jitter = 1e-12
        log.warning("covariance is singular; adding diagonal jitter %.3g", jitter)
        cov = cov + jitter * np.eye(mm.n)
    return cov, jitter


def _jitter_slack(polytope: Polytope, kappa: float, jitter: float) -> float:
    # f_jit - kappa sqrt(jitter) |x| <= f <= f_jit, so the jittered gap understates by at most this
    return kappa * math.sqrt(jitter) * polytope.max_norm() if jitter else 0.0


def solve_kappa(
    polytope: Polytope,
    mm: MomentMatrixPair,
    kappa: float,
    tol: float = 1e-6,
    max_iter: int = 20000,
) -> RobustSolution:
    """Frank-Wolfe with away steps for a fixed multiplier ``kappa``.

    Stops once the Frank-Wolfe gap ``grad^T (x - s)`` (an upper bound on the
    suboptimality of ``x``) falls to ``tol``.
    """
    if mm.n != polytope.n:
        raise ValueError("moment data and allocation set have different dimensions")
    mean = np.asarray(mm.mean)
    cov, jitter = _regularized_cov(mm)

    def key(v):
        return tuple(np.round(v, 12))

    x = polytope.minimize_linear(-mean)
    active = {key(x): [x, 1.0]}
    gap = np.inf
    it = 0
    for it in range(1, max_iter + 1):
        f, g = _value_grad(x, mean, cov, kappa)
        s = polytope.minimize_linear(g)
        gap = max(float(g @ (x - s)), 0.0)
        if gap <= tol:
            break
        away_key, (v, alpha_v) = max(active.items(), key=lambda kv: float(g @ kv[1][0]))
        if gap >= float(g @ (v - x)) or len(active) == 1:
            d, gmax, step = s - x, 1.0, "fw"
        else:
            d, gmax, step = x - v, alpha_v / (1.0 - alpha_v), "away"
        gamma = _line_search(x, d, gmax, mean, cov, kappa)
        if gamma == 0.0 and step == "fw":
            break
        if step == "fw":
            for entry in active.values():
                entry[1] *= 1.0 - gamma
            ks = key(s)
            if gamma >= 1.0:
                active = {ks: [s, 1.0]}
            elif ks in active:
                active[ks][1] += gamma
            else:
                active[ks] = [s, gamma]
        else:
            for entry in active.values():
                entry[1] *= 1.0 + gamma
            active[away_key][1] -= gamma
            if gamma >= gmax or active[away_key][1] <= 1e-15:
                del active[away_key]
        total = sum(e[1] for e in active.values())
        x = sum(e[1] * e[0] for e in active.values()) / total
        for e in active.values():
            e[1] /= total
    else:
        log.warning("Frank-Wolfe stopped at max_iter=%d with gap %.3g", max_iter, gap)
    objective = _objective(x, mean, np.asarray(mm.cov), kappa)
    gap += _jitter_slack(polytope, kappa, jitter)
    return RobustSolution(x=x, objective=objective, kappa=kappa, gap=gap, iterations=it)


def solve(
    polytope: Polytope,
    mm: MomentMatrixPair,
    spectra: KappaLike,
    tol: float = 1e-6,
    max_iter: int = 20000,
) -> RobustSolution:
    """Minimize the worst-case risk of ``-R^T x`` over the polytope."""
    return solve_kappa(polytope, mm, resolve_kappa(spectra), tol, max_iter)


def solve_polytopic(
    polytope: Polytope,
    vertices: Sequence[MomentMatrixPair],
    spectra: KappaLike,
    tol: float = 1e-6,
    max_iter: int = 2000,
) -> RobustSolution:
    """Minimize ``max_k f_k(x)`` over the listed moment pairs by Kelley's method.

    Only the supplied vertices are evaluated; whether interior points of their
    convex hull can exceed this value is not checked.
    """
    vertices = list(vertices)
    if not vertices:
        raise ValueError("need at least one moment vertex")
    kappa = resolve_kappa(spectra)
    distinct = []
    for v in vertices:
        if v.n != polytope.n:
            raise ValueError("moment vertex dimension does not match the allocation set")
        if not any(v == u for u in distinct):
            distinct.append(v)
    if len(distinct) == 1:
        sol = solve_kappa(polytope, distinct[0], kappa, tol)
        return RobustSolution(
            sol.x, sol.objective, kappa, sol.gap, sol.iterations, "frank-wolfe",
            np.full(len(vertices), sol.objective),
        )

    n = polytope.n
    data, jitter = [], 0.0
    for v in distinct:
        cov, j = _regularized_cov(v)
        data.append((np.asarray(v.mean), cov, np.asarray(v.cov)))
        jitter = max(jitter, j)

    def evaluate(x):
        vals, grads = [], []
        for mean, cov, _ in data:
            f, g = _value_grad(x, mean, cov, kappa)
            vals.append(f)
            grads.append(g)
        return np.array(vals), grads

    cut_rows: list[np.ndarray] = []
    cut_rhs: list[float] = []

    def add_cuts(x):
        vals, grads = evaluate(x)
        for f, g in zip(vals, grads):
            # t >= f + g^T (y - x)  <=>  g^T y - t <= g^T x - f
            cut_rows.append(np.concatenate([g, [-1.0]]))
            cut_rhs.append(float(g @ x - f))
        return vals

    A_poly = np.hstack([polytope.A, np.zeros((polytope.A.shape[0], 1))])
    E_poly = np.hstack([polytope.E, np.zeros((polytope.E.shape[0], 1))])
    bounds = polytope.bounds() + [(None, None)]
    c = np.zeros(n + 1)
    c[-1] = 1.0

    x = polytope.minimize_linear(-data[0][0])
    vals = add_cuts(x)
    best_x, upper = x, float(vals.max())
    lower = -np.inf
    it = 0
    for it in range(1, max_iter + 1):
        A = np.vstack([A_poly, np.array(cut_rows)])
        b = np.concatenate([polytope.b, cut_rhs])
        res = linprog(
            c, A_ub=A, b_ub=b,
            A_eq=E_poly if E_poly.size else None,
            b_eq=polytope.f if E_poly.size else None,
            bounds=bounds,
        )
        lower = max(lower, float(res.x[-1]))
        x = res.x[:n]
        vals = add_cuts(x)
        if vals.max() < upper:
            best_x, upper = x, float(vals.max())
        if upper - lower <= tol:
            break
    else:
        log.warning("Kelley stopped at max_iter=%d with gap %.3g", max_iter, upper - lower)
    vertex_obj = np.array([_objective(best_x, mean, cov, kappa) for mean, _, cov in data])
    full = np.array([_objective(best_x, np.asarray(v.mean), np.asarray(v.cov), kappa) for v in vertices])
    return RobustSolution(
        x=best_x,
        objective=float(vertex_obj.max()),
        kappa=kappa,
        gap=max(upper - lower, 0.0) + _jitter_slack(polytope, kappa, jitter),
        iterations=it,
        method="kelley",
        vertex_objectives=full,
    )


def schur_certificate(x, mm: MomentMatrixPair, kappa: float, spectra: KappaLike | None = None):
    """Check the matrix-inequality form of the robust objective without an SDP solver.

    The inner problem ``max_r -r^T x`` subject to
    ``[[Sigma, r - mu], [(r - mu)^T, kappa^2]] >= 0`` is solved in closed form
    by ``r* = mu - kappa Sigma x / sqrt(x^T Sigma x)``.

    Returns
    -------
    r_star : ndarray
    min_eig : float
        Smallest eigenvalue of the block matrix at ``r*`` (zero up to rounding:
        ``r*`` sits on the boundary of the feasible ellipsoid).
    objective_match : float
        ``|-r*^T x - robust_objective(x)|``.
    """
    x = np.asarray(x, dtype=float)
    cov = np.asarray(mm.cov)
    var = float(x @ cov @ x)
    if var <= 0.0:
        raise ValueError("allocation has zero variance; the certificate is degenerate")
    if kappa <= 0.0:
        raise ValueError("kappa must be positive")
    sd = math.sqrt(var)
    r = mm.mean - kappa * (cov @ x) / sd
    block = schur_block(mm, r, kappa)
    min_eig = float(np.linalg.eigvalsh(block).min())
    match = abs(float(-r @ x) - _objective(x, mm.mean, cov, kappa))
    return r, min_eig, match


def schur_block(mm: MomentMatrixPair, r, kappa: float) -> np.ndarray:
    """``[[Sigma, r - mu], [(r - mu)^T, kappa^2]]``."""
    n = mm.n
    d = np.asarray(r, dtype=float) - mm.mean
    block = np.empty((n + 1, n + 1))
    block[:n, :n] = mm.cov
    block[:n, n] = d
    block[n, :n] = d
    block[n, n] = kappa * kappa
    return block


def frontier(
    polytope: Polytope,
    mm: MomentMatrixPair,
    epsilon_grid: Sequence[float],
    tol: float = 1e-6,
    vertices: Sequence[MomentMatrixPair] | None = None,
) -> list[tuple[float, np.ndarray, float]]:
    """Robust optimum for each tail probability ``eps`` (``kappa = sqrt((1 - eps) / eps)``).

    With ``vertices`` the min-max over those moment pairs is solved instead and
    ``mm`` is ignored.
    """
    rows = []
    for eps in epsilon_grid:
        if not (0.0 < eps <= 1.0):
            raise ValueError(f"tail probability must lie in (0, 1], got {eps}")
        kappa = math.sqrt((1.0 - eps) / eps)
        if vertices:
            sol = solve_polytopic(polytope, vertices, kappa, tol)
        else:
            sol = solve_kappa(polytope, mm, kappa, tol)
        rows.append((float(eps), sol.x, sol.objective))
    return rows
