"""
Nominal risk of finite discrete loss distributions.

Spectral risk is computed from the quantile-integral definition
``int_0^1 phi(a) F^{-1}(a) da``. Since the quantile function of a discrete
distribution is a step function, the integral is a finite sum of atoms
weighted by the spectrum's cumulative weight over each probability band,
which is exact for every spectrum family in :mod:`wcrisk.spectra`.

The Acerbi minimization form is also provided for step spectra. It is the
variational representation the worst-case derivation starts from and is
used here as an independent route to the same number.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import InvalidSpectrumError
from .spectra import CVaR, PiecewiseConstant, Spectrum, require_valid

_PROB_TOL = 1e-12
# slack on cumulative sums so that alpha equal to a partial sum maps to that atom
_CDF_SLACK = 1e-13


@dataclass(frozen=True)
class EmpiricalDistribution:
    """Finite discrete distribution with sorted, distinct atoms."""

    atoms: np.ndarray
    probs: np.ndarray

    def __init__(self, atoms: Sequence[float], probs: Sequence[float] | None = None):
        atoms = np.asarray(atoms, dtype=float).ravel()
        if atoms.size == 0:
            raise ValueError("distribution needs at least one atom")
        if probs is None:
            probs = np.full(atoms.size, 1.0 / atoms.size)
        probs = np.asarray(probs, dtype=float).ravel()
        if probs.shape != atoms.shape:
            raise ValueError("atoms and probs must have the same length")
        if not (np.all(np.isfinite(atoms)) and np.all(np.isfinite(probs))):
            raise ValueError("atoms and probs must be finite")
        if np.any(probs <= 0.0):
            raise ValueError("probabilities must be strictly positive")
        if abs(probs.sum() - 1.0) > _PROB_TOL:
            raise ValueError(f"probabilities sum to {probs.sum()!r}, not 1")
        order = np.argsort(atoms, kind="stable")
        atoms, probs = atoms[order], probs[order]
        uniq, inverse = np.unique(atoms, return_inverse=True)
        merged = np.zeros(uniq.size)
        np.add.at(merged, inverse, probs)
        uniq.setflags(write=False)
        merged.setflags(write=False)
        object.__setattr__(self, "atoms", uniq)
        object.__setattr__(self, "probs", merged)

    @classmethod
    def from_samples(cls, samples: Sequence[float]) -> "EmpiricalDistribution":
        return cls(samples)

    @property
    def cdf_levels(self) -> np.ndarray:
        """``F`` evaluated at each atom (last entry forced to exactly 1)."""
        levels = np.cumsum(self.probs)
        levels[-1] = 1.0
        return levels

    def mean(self) -> float:
        return float(self.probs @ self.atoms)

    def var(self) -> float:
        m = self.mean()
        return float(self.probs @ (self.atoms - m) ** 2)

    def std(self) -> float:
        return float(np.sqrt(self.var()))

    def __len__(self) -> int:
        return self.atoms.size


def quantile(dist: EmpiricalDistribution, alpha: float) -> float:
    """Generalized inverse cdf ``inf{q : F(q) >= alpha}`` for ``alpha`` in (0, 1)."""
    if not (0.0 < alpha < 1.0):
        raise ValueError(f"quantile level must lie in (0, 1), got {alpha}")
    idx = int(np.searchsorted(dist.cdf_levels, alpha - _CDF_SLACK, side="left"))
    return float(dist.atoms[min(idx, len(dist) - 1)])


def quantiles(dist: EmpiricalDistribution, alphas) -> np.ndarray:
    """Vectorized :func:`quantile` without range checks."""
    idx = np.searchsorted(dist.cdf_levels, np.asarray(alphas, dtype=float) - _CDF_SLACK)
    return dist.atoms[np.minimum(idx, len(dist) - 1)]


def spectral_risk(dist: EmpiricalDistribution, spec: Spectrum) -> float:
    """``int_0^1 phi(a) F^{-1}(a) da`` computed exactly band by band."""
    require_valid(spec)
    levels = np.concatenate([[0.0], dist.cdf_levels])
    weights = np.diff(spec.cumulative(levels))
    return float(weights @ dist.atoms)


def cvar(dist: EmpiricalDistribution, epsilon: float) -> float:
    """Upper-tail CVaR: average loss over the worst ``epsilon`` probability mass."""
    return spectral_risk(dist, CVaR(epsilon))


def tail_average(dist: EmpiricalDistribution, epsilon: float) -> float:
    """Direct summation of the top ``epsilon`` mass, walking atoms from the top."""
    remaining = epsilon
    total = 0.0
    for atom, p in zip(dist.atoms[::-1], dist.probs[::-1]):
        take = min(p, remaining)
        total += take * atom
        remaining -= take
        if remaining <= 0.0:
            break
    return total / epsilon


@dataclass(frozen=True)
class QuantileCandidate:
    """A non-decreasing step function ``q(alpha)`` given by its values on a grid.

    Between grid points the value of the nearest grid point to the left is
    used; left of the first grid point the first value applies.
    """

    grid: np.ndarray
    values: np.ndarray

    def __init__(self, grid: Sequence[float], values: Sequence[float]):
        grid = np.asarray(grid, dtype=float).ravel()
        values = np.asarray(values, dtype=float).ravel()
        if grid.shape != values.shape:
            raise ValueError("grid and values must have the same length")
        if np.any(np.diff(grid) <= 0.0):
            raise ValueError("candidate grid must be strictly increasing")
        if np.any((grid <= 0.0) | (grid >= 1.0)):
            raise ValueError("candidate grid must lie in (0, 1)")
        if np.any(np.diff(values) < 0.0):
            raise ValueError("candidate values must be non-decreasing")
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", values)

    def __call__(self, alpha):
        if self.grid.size == 0:
            raise ValueError("empty candidate has no values")
        idx = np.searchsorted(self.grid, np.asarray(alpha, dtype=float), side="right") - 1
        return self.values[np.clip(idx, 0, self.grid.size - 1)]


def _step_spectrum(spec: Spectrum) -> PiecewiseConstant:
    require_valid(spec)
    if isinstance(spec, CVaR):
        return spec.as_piecewise()
    if not isinstance(spec, PiecewiseConstant):
        raise InvalidSpectrumError(
            "the Acerbi form needs a step spectrum; discretize analytic spectra first "
            "with wcrisk.spectra.discretize"
        )
    return spec


def _hinge_terms(dist: EmpiricalDistribution, levels: np.ndarray, qs: np.ndarray) -> np.ndarray:
    """``(1 - b) q + E[(Z - q)^+]`` for paired arrays of levels ``b`` and values ``q``."""
    excess = np.clip(dist.atoms[None, :] - qs[..., None], 0.0, None) @ dist.probs
    return (1.0 - levels) * qs + excess


def acerbi_value(dist: EmpiricalDistribution, spec: Spectrum, cand: QuantileCandidate) -> float:
    """Objective of the Acerbi minimization at candidate ``cand``.

    For a step spectrum ``d phi`` is a sum of point masses (the jumps), so the
    objective is ``phi(0) E[Z] + sum_j jump_j [(1 - b_j) q(b_j) + E(Z - q(b_j))^+]``.
    It upper-bounds :func:`spectral_risk` for every candidate.
    """
    step = _step_spectrum(spec)
    levels, sizes = step.jumps()
    value = step.values[0] * dist.mean()
    if levels.size:
        value += float(sizes @ _hinge_terms(dist, levels, cand(levels)))
    return value


def quantile_candidate(dist: EmpiricalDistribution, grid: Sequence[float]) -> QuantileCandidate:
    """The true quantile function of ``dist`` sampled on ``grid``."""
    grid = np.asarray(grid, dtype=float)
    return QuantileCandidate(grid, quantiles(dist, grid))


def acerbi_minimize(
    dist: EmpiricalDistribution, spec: Spectrum
) -> tuple[float, QuantileCandidate]:
    """Minimize :func:`acerbi_value` exhaustively over atom-valued candidates.

    Each jump contributes a separate convex piecewise-linear term in
    ``q(b_j)`` whose kinks sit at the atoms, so scanning the atoms per jump
    finds the exact minimum. Ties go to the smallest atom, which is the
    generalized quantile and keeps the candidate non-decreasing.
    """
    step = _step_spectrum(spec)
    levels, sizes = step.jumps()
    base = step.values[0] * dist.mean()
    if levels.size == 0:
        return base, QuantileCandidate([], [])
    # E[(Z - z_k)^+] at every atom via suffix sums
    tail_p = np.concatenate([np.cumsum(dist.probs[::-1])[::-1][1:], [0.0]])
    tail_pz = np.concatenate([np.cumsum((dist.probs * dist.atoms)[::-1])[::-1][1:], [0.0]])
    excess = tail_pz - dist.atoms * tail_p
    terms = (1.0 - levels)[:, None] * dist.atoms[None, :] + excess[None, :]
    best = terms.min(axis=1)
    scale = 1e-12 * (1.0 + np.abs(terms).max(axis=1))
    chosen = np.argmax(terms <= (best + scale)[:, None], axis=1)
    values = np.maximum.accumulate(dist.atoms[chosen])
    cand = QuantileCandidate(levels, values)
    return acerbi_value(dist, step, cand), cand
