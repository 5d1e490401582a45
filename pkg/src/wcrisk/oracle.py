"""
Brute-force checks for the worst-case closed forms.

Nothing here uses the closed forms. The moment problem is attacked
directly: upper bounds come from LP duality on a discretized support,
lower bounds from explicit moment-matched distributions, and integrals
from an adaptive Simpson rule.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from .errors import InfeasibleError
from .lp import linprog
from .measures import EmpiricalDistribution, spectral_risk
from .moments import MomentPair
from .spectra import Spectrum, require_valid

DEFAULT_SPAN = 8.0


class QuadratureError(ArithmeticError):
    """Adaptive quadrature failed to reach the requested tolerance."""


def quadrature(
    f: Callable[[float], float],
    tol: float = 1e-10,
    a: float = 0.0,
    b: float = 1.0,
    breakpoints: Iterable[float] = (),
    max_depth: int = 50,
) -> float:
    """Adaptive Simpson integral of ``f`` over ``[a, b]``.

    The interval is first split at ``breakpoints`` so that step functions
    with known jumps integrate exactly. Each panel is bisected until the
    Simpson estimate and its two-half refinement agree within the panel's
    share of ``tol`` (relative to the running magnitude of the integral).

    Raises
    ------
    QuadratureError
        If a panel is still unresolved at ``max_depth`` bisections.
    """
    cuts = sorted({a, b, *(p for p in breakpoints if a < p < b)})
    # a rough magnitude for the relative criterion
    probe = np.linspace(a, b, 17)[1:-1]
    scale = max(1e-300, (b - a) * float(np.mean(np.abs([f(x) for x in probe]))))

    def simpson(lo, flo, hi, fhi):
        mid = 0.5 * (lo + hi)
        fmid = f(mid)
        return mid, fmid, (hi - lo) / 6.0 * (flo + 4.0 * fmid + fhi)

    total = 0.0
    for lo, hi in zip(cuts, cuts[1:]):
        # nudge the endpoints inward so right-continuous steps are sampled on the panel
        eps = 1e-15 * max(1.0, abs(lo), abs(hi))
        flo, fhi = f(lo + eps if lo > a else lo), f(hi - eps)
        mid, fmid, whole = simpson(lo, flo, hi, fhi)
        stack = [(lo, flo, mid, fmid, hi, fhi, whole, tol * scale * (hi - lo) / (b - a), 0)]
        while stack:
            l, fl, m, fm, h, fh, est, local_tol, depth = stack.pop()
            lm, flm, left = simpson(l, fl, m, fm)
            rm, frm, right = simpson(m, fm, h, fh)
            delta = left + right - est
            if abs(delta) <= 15.0 * local_tol:
                total += left + right + delta / 15.0
            elif depth >= max_depth:
                raise QuadratureError(f"no convergence on [{l}, {h}] after {max_depth} bisections")
            else:
                stack.append((l, fl, lm, flm, m, fm, left, 0.5 * local_tol, depth + 1))
                stack.append((m, fm, rm, frm, h, fh, right, 0.5 * local_tol, depth + 1))
    return total


def integrate_spectrum(spec: Spectrum, power: int = 1, tol: float = 1e-11) -> float:
    """``int_0^1 phi^power`` by :func:`quadrature`, split at the spectrum's kinks."""
    return quadrature(lambda p: float(spec.density(p)) ** power, tol, breakpoints=spec.kinks())


@dataclass(frozen=True)
class SupportGrid:
    """Candidate atoms for discretized moment problems."""

    points: np.ndarray

    def __init__(self, points: Sequence[float]):
        points = np.asarray(points, dtype=float).ravel()
        if points.size < 3:
            raise ValueError("support grid needs at least 3 points")
        if np.any(np.diff(points) <= 0.0):
            raise ValueError("support grid must be strictly increasing")
        object.__setattr__(self, "points", points)

    @classmethod
    def linspace(cls, lo: float, hi: float, n: int) -> "SupportGrid":
        return cls(np.linspace(lo, hi, n))

    @classmethod
    def around(cls, m: MomentPair, n: int = 400, span: float = DEFAULT_SPAN) -> "SupportGrid":
        """``n`` equispaced points over ``mean +- span * std`` (``std`` taken as 1 if 0)."""
        s = m.std if m.std > 0.0 else 1.0
        return cls.linspace(m.mean - span * s, m.mean + span * s, n)

    def covers(self, m: MomentPair, k: float = 6.0) -> bool:
        return self.points[0] <= m.mean - k * m.std and self.points[-1] >= m.mean + k * m.std

    @property
    def max_spacing(self) -> float:
        return float(np.max(np.diff(self.points)))

    def __len__(self) -> int:
        return self.points.size


@dataclass(frozen=True)
class CVaRBound:
    """Certified upper bound on the worst-case CVaR at the best grid threshold."""

    value: float
    threshold: float
    primal: float
    multipliers: tuple
    deficit: float


def _quadratic_gap_min(lam, lo, hi, intercept, slope):
    """Minimum of ``lam0 + lam1 z + lam2 z^2 - (intercept + slope z)`` over ``[lo, hi]``."""
    a0 = lam[0] - intercept
    a1 = lam[1] - slope
    a2 = lam[2]
    if np.isinf(hi) and (a2 < 0.0 or (a2 == 0.0 and a1 < 0.0)):
        return -np.inf
    if np.isinf(lo) and (a2 < 0.0 or (a2 == 0.0 and a1 > 0.0)):
        return -np.inf
    cands = [z for z in (lo, hi) if np.isfinite(z)]
    if a2 > 0.0:
        cands.append(min(max(-a1 / (2.0 * a2), lo), hi))
    return min(a0 + a1 * z + a2 * z * z for z in cands)


def _majorization_deficit(lam, z, k) -> float:
    """How far ``lam0 + lam1 z + lam2 z^2`` dips below ``(z - z_k)^+`` on the real line.

    The hinge is linear between consecutive grid points (its kink is itself a
    grid point), so the gap is a quadratic on each piece and its minimum is
    exact.
    """
    lam = np.asarray(lam, dtype=float)
    q = z[k]
    worst = 0.0
    # left tail and pieces below the kink: hinge is 0
    worst = min(worst, _quadratic_gap_min(lam, -np.inf, z[0], 0.0, 0.0))
    lo, hi = z[:-1], z[1:]
    for side, icpt, slp in ((slice(0, k), 0.0, 0.0), (slice(k, len(z) - 1), -q, 1.0)):
        l, h = lo[side], hi[side]
        if l.size == 0:
            continue
        a0 = lam[0] - icpt
        a1 = lam[1] - slp
        vals = np.minimum(a0 + a1 * l + lam[2] * l * l, a0 + a1 * h + lam[2] * h * h)
        if lam[2] > 0.0:
            v = np.clip(-a1 / (2.0 * lam[2]), l, h)
            vals = np.minimum(vals, a0 + a1 * v + lam[2] * v * v)
        worst = min(worst, float(vals.min()))
    worst = min(worst, _quadratic_gap_min(lam, z[-1], np.inf, -q, 1.0))
    return -worst


def _moment_rows(z: np.ndarray, m: MomentPair):
    A = np.vstack([np.ones_like(z), z, z * z])
    b = np.array([1.0, m.mean, m.second_moment])
    return A, b


def _check_grid_feasible(m: MomentPair, z: np.ndarray) -> None:
    mu, var = m.mean, m.std**2
    if not (z[0] <= mu <= z[-1]):
        raise InfeasibleError("mean lies outside the support grid")
    if var > (z[-1] - mu) * (mu - z[0]) * (1.0 + 1e-12):
        raise InfeasibleError("variance exceeds the largest variance attainable on the grid")
    k = int(np.searchsorted(z, mu))
    if k < len(z) and z[k] == mu:
        return
    if var < (mu - z[k - 1]) * (z[k] - mu) * (1.0 - 1e-12):
        raise InfeasibleError("variance is below the smallest variance attainable on the grid")


def _threshold_bound(m: MomentPair, eps: float, z: np.ndarray, k: int):
    A, b = _moment_rows(z, m)
    hinge = np.clip(z - z[k], 0.0, None)
    res = linprog(-hinge, A_eq=A, b_eq=b, bounds=(0.0, None))
    lam = -res.eq_marginals
    deficit = _majorization_deficit(lam, z, k)
    upper = z[k] + (float(lam @ b) + deficit) / eps
    primal = z[k] - res.fun / eps
    return upper, primal, lam, deficit


def cvar_lp_bound(m: MomentPair, eps: float, grid: SupportGrid) -> CVaRBound:
    """Upper bound on the worst-case CVaR via discretized moment LPs.

    For each threshold ``q`` taken from the grid, the inner problem
    ``max_p sum p_i (z_i - q)^+`` subject to matching the first two moments
    on the grid is a three-row LP. Its optimal multipliers define a
    quadratic ``lam0 + lam1 z + lam2 z^2`` that majorizes the hinge at every
    grid point; the exact amount by which it dips below the hinge anywhere
    on the real line is added back, which turns the LP value into a valid
    bound over *all* distributions with the given moments. The bound is
    ``min_q q + (lam . moments + deficit) / eps``.
    """
    if not (0.0 < eps <= 1.0):
        raise ValueError(f"tail probability must lie in (0, 1], got {eps}")
    z = grid.points
    _check_grid_feasible(m, z)
    if m.std == 0.0:
        return CVaRBound(m.mean, m.mean, m.mean, (m.mean, 0.0, 0.0), 0.0)
    if eps == 1.0:
        # CVaR at eps = 1 is the mean, which the first-moment constraint pins down
        return CVaRBound(m.mean, z[0], m.mean, (0.0, 1.0, 0.0), 0.0)

    n = len(z)
    cache: dict[int, tuple] = {}

    def upper(k: int) -> float:
        if k not in cache:
            cache[k] = _threshold_bound(m, eps, z, k)
        return cache[k][0]

    # coarse scan, then an exhaustive scan of the neighbourhood of the best
    stride = max(1, n // 64)
    coarse = list(range(0, n, stride))
    best = min(coarse, key=upper)
    window = range(max(0, best - 2 * stride), min(n, best + 2 * stride + 1))
    best = min(window, key=upper)
    value, primal, lam, deficit = cache[best]
    return CVaRBound(float(value), float(z[best]), float(primal), tuple(map(float, lam)), deficit)


def max_cvar_lp(m: MomentPair, eps: float, grid: SupportGrid) -> float:
    """Certified upper bound on ``sup CVaR_eps`` over distributions with moments ``m``.

    See :func:`cvar_lp_bound`. The bound tightens as the grid is refined.

    Raises
    ------
    InfeasibleError
        If no distribution on the grid matches the moments.
    """
    return cvar_lp_bound(m, eps, grid).value


def two_point(m: MomentPair, p_high: float) -> EmpiricalDistribution:
    """The two-point law with moments ``m`` putting mass ``p_high`` on the upper atom."""
    hi = m.mean + m.std * math.sqrt((1.0 - p_high) / p_high)
    lo = m.mean - m.std * math.sqrt(p_high / (1.0 - p_high))
    return EmpiricalDistribution([lo, hi], [1.0 - p_high, p_high])


def three_point(m: MomentPair, atoms: Sequence[float]) -> Optional[EmpiricalDistribution]:
    """Solve for probabilities on three atoms matching ``m``; ``None`` if not a distribution."""
    a = np.asarray(atoms, dtype=float)
    if len(set(a.tolist())) != 3:
        return None
    V = np.vstack([np.ones(3), a, a * a])
    try:
        p = np.linalg.solve(V, [1.0, m.mean, m.second_moment])
    except np.linalg.LinAlgError:
        return None
    if np.any(p <= 1e-12):
        return None
    p = p / p.sum()
    return EmpiricalDistribution(a, p)


def matches_moments(dist: EmpiricalDistribution, m: MomentPair, tol: float = 1e-9) -> bool:
    scale = 1.0 + abs(m.mean) + m.std
    return abs(dist.mean() - m.mean) <= tol * scale and abs(dist.std() - m.std) <= tol * scale


def random_moment_matched(
    m: MomentPair, rng: np.random.Generator, grid: Optional[SupportGrid] = None
) -> EmpiricalDistribution:
    """One random two- or three-point distribution with exactly the moments ``m``."""
    if rng.random() < 0.5:
        return two_point(m, float(rng.uniform(1e-3, 1.0 - 1e-3)))
    pts = grid.points if grid is not None else SupportGrid.around(m).points
    below, above = pts[pts < m.mean], pts[pts > m.mean]
    for _ in range(100):
        if below.size == 0 or above.size == 0:
            break
        lo = float(rng.choice(below))
        hi = float(rng.choice(above))
        mid = float(rng.uniform(lo, hi))
        dist = three_point(m, [lo, mid, hi])
        if dist is not None:
            return dist
    return two_point(m, float(rng.uniform(1e-3, 1.0 - 1e-3)))


def random_search_lower_bound(
    m: MomentPair,
    spec: Spectrum,
    trials: int,
    grid: Optional[SupportGrid] = None,
    seed: int = 0,
    candidates: Sequence[EmpiricalDistribution] = (),
    include_extremal: bool = False,
) -> float:
    """Largest spectral risk found among random moment-matched distributions.

    Every trial is a feasible point of the worst-case problem, so the result
    lower-bounds it. Extra ``candidates`` are checked for moment feasibility
    and included; ``include_extremal`` adds the constructive maximizer.
    """
    require_valid(spec)
    if m.std == 0.0:
        return float(m.mean)  # the only feasible law is the point mass at the mean
    rng = np.random.default_rng(seed)
    best = -np.inf
    pool = list(candidates)
    if include_extremal and not spec.is_uniform():
        from .worstcase import extremal_distribution

        pool.append(extremal_distribution(m, spec, 2000))
    for dist in pool:
        if not matches_moments(dist, m, 1e-8):
            raise ValueError("injected candidate does not match the target moments")
        best = max(best, spectral_risk(dist, spec))
    for _ in range(trials):
        best = max(best, spectral_risk(random_moment_matched(m, rng, grid), spec))
    return float(best)
