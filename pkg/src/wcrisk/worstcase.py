"""
Worst-case risk under mean/standard-deviation ambiguity.

Over all loss distributions with mean ``mu`` and standard deviation
``sigma``, the largest spectral risk is ``mu + sigma * kappa`` with
``kappa = sqrt(int phi^2 - 1)``. For a finite set of spectra the worst
case is attained by the member with the largest ``int phi^2``. Both equal
the worst-case VaR/CVaR at tail probability ``1 / int phi^2``.

Besides the closed forms this module builds the two objects that certify
them from either side: a feasible distribution attaining the value, and a
quadratic dual majorant bounding it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import CertificateError, InvalidSpectrumError, NonAttainmentError
from .measures import EmpiricalDistribution, QuantileCandidate
from .moments import MomentPair
from .spectra import (
    CVaR,
    PiecewiseConstant,
    Spectrum,
    SpectrumSet,
    l2_norm_sq,
    require_valid,
    sup_l2_norm_sq,
)

__all__ = [
    "MomentPair",
    "WorstCaseResult",
    "DualCertificate",
    "wc_var_cvar",
    "wcsrm",
    "wclicrm",
    "kappa_of",
    "equivalent_epsilon",
    "extremal_distribution",
    "dual_certificate",
]


@dataclass(frozen=True)
class WorstCaseResult:
    value: float
    kappa: float
    attaining_spectrum_index: int
    equivalent_epsilon: float


def _kappa(norm_sq: float) -> float:
    # quadrature can undershoot 1 by a few ulps for near-uniform spectra
    return math.sqrt(max(norm_sq - 1.0, 0.0))


def wc_var_cvar(m: MomentPair, epsilon: float) -> float:
    """Worst-case VaR and CVaR at tail probability ``epsilon``: ``mu + sigma sqrt((1-eps)/eps)``."""
    if not (0.0 < epsilon <= 1.0):
        raise ValueError(f"tail probability must lie in (0, 1], got {epsilon}")
    return m.mean + m.std * math.sqrt((1.0 - epsilon) / epsilon)


def _result(m: MomentPair, norm_sq: float, index: int) -> WorstCaseResult:
    k = _kappa(norm_sq)
    return WorstCaseResult(
        value=m.mean + m.std * k,
        kappa=k,
        attaining_spectrum_index=index,
        equivalent_epsilon=1.0 / max(norm_sq, 1.0),
    )


def wcsrm(m: MomentPair, spec: Spectrum) -> WorstCaseResult:
    """Worst-case spectral risk ``mu + sigma sqrt(int phi^2 - 1)``."""
    return _result(m, l2_norm_sq(spec), 0)


def wclicrm(m: MomentPair, spectra: SpectrumSet) -> WorstCaseResult:
    """Worst case of ``sup_{phi in set} rho_phi``; records which member attains it."""
    norm_sq, index = sup_l2_norm_sq(spectra)
    return _result(m, norm_sq, index)


def kappa_of(spec_or_set: Union[Spectrum, SpectrumSet]) -> float:
    """Standard-deviation multiplier ``sqrt(sup int phi^2 - 1)``."""
    if isinstance(spec_or_set, Spectrum):
        return _kappa(l2_norm_sq(spec_or_set))
    return _kappa(sup_l2_norm_sq(spec_or_set)[0])


def equivalent_epsilon(spec_or_set: Union[Spectrum, SpectrumSet]) -> float:
    """Tail probability at which worst-case CVaR reproduces the worst-case spectral risk."""
    if isinstance(spec_or_set, CVaR):
        return spec_or_set.epsilon
    if isinstance(spec_or_set, Spectrum):
        return 1.0 / l2_norm_sq(spec_or_set)
    return 1.0 / sup_l2_norm_sq(spec_or_set)[0]


def _as_step(spec: Spectrum) -> PiecewiseConstant | None:
    if isinstance(spec, (CVaR, PiecewiseConstant)):
        return spec.as_piecewise()
    return None


def extremal_distribution(m: MomentPair, spec: Spectrum, resolution: int = 1000) -> EmpiricalDistribution:
    """A distribution with moments ``m`` whose spectral risk is the worst case.

    Its quantile function is affine in the spectrum,
    ``F^{-1}(a) = mu + sigma (phi(a) - 1) / kappa``. For step spectra this is
    exact with one atom per step. Other spectra are sampled at the midpoint
    levels ``(i - 1/2) / resolution`` with equal weights, and the samples are
    standardized so the moments match ``m`` exactly; the risk converges to
    the worst case as the resolution grows.

    Raises
    ------
    NonAttainmentError
        If ``sigma = 0`` or the spectrum is uniform (``kappa = 0``): the
        worst case ``mu`` is then not attained by this construction.
    """
    require_valid(spec)
    k = _kappa(l2_norm_sq(spec))
    if m.std == 0.0 or k == 0.0:
        raise NonAttainmentError(
            "no variance-matching maximizer: the worst case reduces to the mean "
            f"(sigma={m.std}, kappa={k})"
        )
    step = _as_step(spec)
    if step is not None:
        atoms = m.mean + m.std * (step.heights - 1.0) / k
        return EmpiricalDistribution(atoms, step.widths / step.widths.sum())
    if resolution < 1:
        raise ValueError("resolution must be positive")
    levels = (np.arange(resolution) + 0.5) / resolution
    phi = spec.density(levels)
    spread = float(phi.std())
    if spread == 0.0:
        raise ValueError(f"resolution {resolution} is too coarse to resolve the spectrum")
    # standardizing the sampled spectrum keeps the atoms affine in phi and the moments exact
    atoms = m.mean + m.std * (phi - phi.mean()) / spread
    return EmpiricalDistribution(atoms, np.full(resolution, 1.0 / resolution))


@dataclass(frozen=True)
class DualCertificate:
    """Quadratic majorant ``lam0 + lam1 z + lam2 z^2`` proving an upper bound.

    For every ``z``, ``lam0 + lam1 z + lam2 z^2 >= phi(0) z + g(z; q)``,
    where ``g(z; q) = sum_j jump_j [(1 - b_j) q(b_j) + (z - q(b_j))^+]``.
    Taking expectations under any distribution with moments ``m`` bounds
    its spectral risk by :attr:`bound`.
    """

    lam0: float
    lam1: float
    lam2: float
    candidate: QuantileCandidate
    bound: float
    min_slack: float


def _integrand(step: PiecewiseConstant, cand: QuantileCandidate, z: np.ndarray) -> np.ndarray:
    """``phi(0) z + g(z; q)`` evaluated on an array of ``z``."""
    levels, sizes = step.jumps()
    q = cand(levels) if levels.size else np.zeros(0)
    const = float(sizes @ ((1.0 - levels) * q))
    hinge = np.clip(z[:, None] - q[None, :], 0.0, None) @ sizes
    return step.values[0] * z + const + hinge


def _min_gap(step, cand, lam, lo, hi) -> float:
    """Exact minimum of the majorant gap over ``[lo, hi]``.

    The integrand is piecewise linear with kinks at the candidate values, so
    the gap is a convex quadratic between kinks: check kinks, ends and
    clipped vertices.
    """
    levels, sizes = step.jumps()
    q = cand(levels) if levels.size else np.zeros(0)
    knots = np.unique(np.concatenate([[lo, hi], q[(q > lo) & (q < hi)]]))
    pts = [knots]
    a, b = knots[:-1], knots[1:]
    mid = 0.5 * (a + b)
    # slope of the integrand on each piece
    slope = step.values[0] + (mid[:, None] > q[None, :]).astype(float) @ sizes
    if lam[2] > 0.0:
        pts.append(np.clip((slope - lam[1]) / (2.0 * lam[2]), a, b))
    z = np.concatenate(pts)
    gap = lam[0] + lam[1] * z + lam[2] * z * z - _integrand(step, cand, z)
    return float(gap.min())


def dual_certificate(m: MomentPair, spec: Spectrum, check_points: int = 20001) -> DualCertificate:
    """Build and verify the quadratic dual certificate for a step spectrum.

    With ``kappa = sqrt(int phi^2 - 1)``, ``r = sigma / (2 kappa)`` and
    ``q0 = mu - sigma / kappa`` the multipliers are ``lam2 = 1 / (4 r)`` and
    ``lam1 = -q0 / (2 r)``. The candidate is ``q(a) = 2 phi(a) r + q0``,
    evaluated at each jump with the average of the one-sided spectrum
    values. ``lam0`` is the smallest constant satisfying the majorization
    over every cut level ``beta``:
    ``lam0 = max_beta [varphi(beta) + (lam1 - phi(beta))^2 / (4 lam2)]``.

    The majorization is then checked directly in ``z`` on a dense grid over
    ``mu +- 10 sigma`` plus the exact minimum between kinks.

    Raises
    ------
    InvalidSpectrumError
        For non-step spectra or uniform spectra (``kappa = 0``).
    ValueError
        If ``sigma = 0``.
    CertificateError
        If the majorization fails anywhere on the check set.
    """
    require_valid(spec)
    step = _as_step(spec)
    if step is None:
        raise InvalidSpectrumError("dual certificates need a step spectrum")
    k = _kappa(l2_norm_sq(step))
    if k == 0.0:
        raise InvalidSpectrumError("dual certificate needs a non-uniform spectrum (kappa > 0)")
    if m.std <= 0.0:
        raise ValueError("dual certificate needs sigma > 0")
    mu, sigma = m.mean, m.std
    r = sigma / (2.0 * k)
    q0 = mu - sigma / k
    lam2 = 1.0 / (4.0 * r)
    lam1 = -q0 / (2.0 * r)

    levels, sizes = step.jumps()
    left = step.heights[:-1][np.diff(step.heights) != 0.0]
    right = step.heights[1:][np.diff(step.heights) != 0.0]
    q_jump = 2.0 * r * 0.5 * (left + right) + q0
    cand = QuantileCandidate(levels, q_jump)

    # cut levels: beta = 0 and each jump; phi(beta) and varphi(beta) are constant between
    phis = np.concatenate([[step.values[0]], step.values[0] + np.cumsum(sizes)])
    base = sizes * q_jump
    varphi = float(base @ (1.0 - levels)) - np.concatenate([[0.0], np.cumsum(base)])
    lam0 = float(np.max(varphi + (lam1 - phis) ** 2 / (4.0 * lam2)))

    lam = (lam0, lam1, lam2)
    bound = lam0 + mu * lam1 + m.second_moment * lam2

    zs = np.linspace(mu - 10.0 * sigma, mu + 10.0 * sigma, check_points)
    zs = np.concatenate([zs, q_jump])
    gap = lam0 + lam1 * zs + lam2 * zs * zs - _integrand(step, cand, zs)
    # tail vertices of the gap sit at the extremal atoms 2 r phi + q0, so cover them all
    atoms = 2.0 * r * step.heights + q0
    lo = min(float(zs.min()), float(atoms.min())) - 1.0
    hi = max(float(zs.max()), float(atoms.max())) + 1.0
    slack = min(float(gap.min()), _min_gap(step, cand, lam, lo, hi))
    scale = 1e-9 * (1.0 + abs(bound) + lam2 * (abs(lo) + abs(hi)) ** 2)
    if slack < -scale:
        raise CertificateError(f"quadratic majorant violated by {-slack:.3g}")
    return DualCertificate(lam0, lam1, lam2, cand, bound, slack)
