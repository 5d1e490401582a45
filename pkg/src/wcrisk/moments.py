"""Moment data describing the ambiguity sets."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

log = logging.getLogger(__name__)

SYMMETRY_TOL = 1e-10
PSD_TOL = 1e-10


@dataclass(frozen=True)
class MomentPair:
    """Mean and standard deviation of a univariate loss."""

    mean: float
    std: float

    def __post_init__(self):
        mean, std = float(self.mean), float(self.std)
        if not (math.isfinite(mean) and math.isfinite(std)):
            raise ValueError("mean and std must be finite")
        if std < 0.0:
            raise ValueError(f"std must be non-negative, got {std}")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "std", std)

    @property
    def second_moment(self) -> float:
        return self.mean**2 + self.std**2


@dataclass(frozen=True)
class MomentMatrixPair:
    """Mean vector and covariance matrix of asset returns.

    The covariance is symmetrized and its eigenvalues in ``[-1e-10, 0)`` are
    clamped to zero; anything more negative is rejected.
    """

    mean: np.ndarray
    cov: np.ndarray

    def __init__(self, mean, cov):
        mean = np.atleast_1d(np.asarray(mean, dtype=float)).ravel()
        cov = np.atleast_2d(np.asarray(cov, dtype=float))
        n = mean.size
        if cov.shape != (n, n):
            raise ValueError(f"covariance must be {n}x{n}, got {cov.shape}")
        if not (np.all(np.isfinite(mean)) and np.all(np.isfinite(cov))):
            raise ValueError("moments must be finite")
        if np.max(np.abs(cov - cov.T), initial=0.0) > SYMMETRY_TOL:
            raise ValueError("covariance matrix is not symmetric")
        cov = 0.5 * (cov + cov.T)
        w, V = np.linalg.eigh(cov)
        if w.min() < -PSD_TOL:
            raise ValueError(f"covariance matrix is not PSD (min eigenvalue {w.min():.3g})")
        if w.min() < 0.0:
            cov = (V * np.clip(w, 0.0, None)) @ V.T
            cov = 0.5 * (cov + cov.T)
        mean.setflags(write=False)
        cov.setflags(write=False)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    @property
    def n(self) -> int:
        return self.mean.size

    def __eq__(self, other):
        if not isinstance(other, MomentMatrixPair):
            return NotImplemented
        return np.array_equal(self.mean, other.mean) and np.array_equal(self.cov, other.cov)

    def __hash__(self):
        return hash((self.mean.tobytes(), self.cov.tobytes()))
