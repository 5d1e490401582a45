"""
Admissible risk spectra.

A spectrum is a non-decreasing, bounded probability density on ``[0, 1)``
that weights the quantiles of a loss. Four families are provided:

* :class:`CVaR` -- ``1/eps`` on the upper tail ``[1 - eps, 1)``
* :class:`Exponential` -- ``k e^{kp} / (e^k - 1)``
* :class:`Power` -- ``(g + 1) p^g``
* :class:`PiecewiseConstant` -- right-continuous step densities

Every spectrum exposes its density, its cumulative weight
``W(p) = int_0^p phi`` and its squared L2 norm ``int_0^1 phi^2``; the
latter is the only quantity the worst-case closed forms depend on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np
from scipy import integrate

from .errors import InvalidSpectrumError

NORMALIZATION_TOL = 1e-12


class Spectrum:
    """Base class for risk spectra. Instances are immutable."""

    kind: str = ""

    def density(self, p):
        """Vectorized density on ``[0, 1)`` without range checks."""
        raise NotImplementedError

    def cumulative(self, p):
        """``W(p) = int_0^p phi(a) da``, vectorized, for ``p`` in ``[0, 1]``."""
        raise NotImplementedError

    @property
    def sup(self) -> float:
        """Essential supremum of the density."""
        raise NotImplementedError

    def kinks(self) -> np.ndarray:
        """Points in ``[0, 1]`` where the density may jump, including 0 and 1."""
        return np.array([0.0, 1.0])

    def to_dict(self) -> dict:
        raise NotImplementedError

    def is_uniform(self) -> bool:
        return False


@dataclass(frozen=True)
class CVaR(Spectrum):
    """Tail-average spectrum ``1_{[1-eps, 1)} / eps``."""

    epsilon: float
    kind: str = field(default="cvar", init=False, repr=False)

    def __post_init__(self):
        eps = float(self.epsilon)
        if not (0.0 < eps <= 1.0) or not math.isfinite(eps):
            raise InvalidSpectrumError(f"CVaR tail probability must lie in (0, 1], got {eps}")
        object.__setattr__(self, "epsilon", eps)

    @property
    def kink(self) -> float:
        return 1.0 - self.epsilon

    def density(self, p):
        p = np.asarray(p, dtype=float)
        return np.where(p >= self.kink, 1.0 / self.epsilon, 0.0)

    def cumulative(self, p):
        p = np.asarray(p, dtype=float)
        return np.clip(p - self.kink, 0.0, self.epsilon) / self.epsilon

    @property
    def sup(self) -> float:
        return 1.0 / self.epsilon

    def kinks(self) -> np.ndarray:
        if self.epsilon == 1.0:
            return np.array([0.0, 1.0])
        return np.array([0.0, self.kink, 1.0])

    def as_piecewise(self) -> "PiecewiseConstant":
        if self.epsilon == 1.0:
            return PiecewiseConstant((0.0, 1.0), (1.0,))
        return PiecewiseConstant((0.0, self.kink, 1.0), (0.0, 1.0 / self.epsilon))

    def to_dict(self) -> dict:
        return {"kind": "cvar", "epsilon": self.epsilon}

    def is_uniform(self) -> bool:
        return self.epsilon == 1.0


@dataclass(frozen=True)
class Exponential(Spectrum):
    """Exponential spectrum ``k e^{kp} / (e^k - 1)`` with risk aversion ``k > 0``."""

    k: float
    kind: str = field(default="exponential", init=False, repr=False)

    def __post_init__(self):
        k = float(self.k)
        if not (k > 0.0) or not math.isfinite(k):
            raise InvalidSpectrumError(f"exponential spectrum needs k > 0, got {k}")
        # exp(k) overflows beyond ~709; the density would be unbounded in floats
        if k > 700.0:
            raise InvalidSpectrumError("exponential spectrum with k > 700 is not representable")
        object.__setattr__(self, "k", k)

    def density(self, p):
        p = np.asarray(p, dtype=float)
        k = self.k
        return k * np.exp(k * (p - 1.0)) / -np.expm1(-k)

    def cumulative(self, p):
        p = np.asarray(p, dtype=float)
        return np.expm1(self.k * p) / math.expm1(self.k)

    @property
    def sup(self) -> float:
        return self.k / -math.expm1(-self.k)

    def to_dict(self) -> dict:
        return {"kind": "exponential", "k": self.k}


@dataclass(frozen=True)
class Power(Spectrum):
    """Power spectrum ``(g + 1) p^g`` with exponent ``g > 0``."""

    gamma: float
    kind: str = field(default="power", init=False, repr=False)

    def __post_init__(self):
        g = float(self.gamma)
        if not (g > 0.0) or not math.isfinite(g):
            raise InvalidSpectrumError(f"power spectrum needs gamma > 0, got {g}")
        object.__setattr__(self, "gamma", g)

    def density(self, p):
        p = np.asarray(p, dtype=float)
        return (self.gamma + 1.0) * np.power(p, self.gamma)

    def cumulative(self, p):
        p = np.asarray(p, dtype=float)
        return np.power(p, self.gamma + 1.0)

    @property
    def sup(self) -> float:
        return self.gamma + 1.0

    def to_dict(self) -> dict:
        return {"kind": "power", "gamma": self.gamma}


@dataclass(frozen=True)
class PiecewiseConstant(Spectrum):
    """Step density: ``values[i]`` on ``[breakpoints[i], breakpoints[i+1])``.

    Construction only checks shapes and finiteness so that inadmissible
    steps can still be passed to :func:`validate` for a report.
    """

    breakpoints: tuple
    values: tuple
    kind: str = field(default="piecewise", init=False, repr=False)

    def __post_init__(self):
        b = tuple(float(v) for v in self.breakpoints)
        v = tuple(float(x) for x in self.values)
        if len(b) < 2 or len(v) != len(b) - 1:
            raise InvalidSpectrumError(
                "piecewise spectrum needs m+1 breakpoints and m values "
                f"(got {len(b)} breakpoints, {len(v)} values)"
            )
        if not all(math.isfinite(x) for x in b + v):
            raise InvalidSpectrumError("piecewise spectrum entries must be finite")
        if b[0] != 0.0 or b[-1] != 1.0:
            raise InvalidSpectrumError("piecewise breakpoints must start at 0 and end at 1")
        if any(b1 <= b0 for b0, b1 in zip(b, b[1:])):
            raise InvalidSpectrumError("piecewise breakpoints must be strictly increasing")
        object.__setattr__(self, "breakpoints", b)
        object.__setattr__(self, "values", v)

    @property
    def edges(self) -> np.ndarray:
        return np.asarray(self.breakpoints)

    @property
    def heights(self) -> np.ndarray:
        return np.asarray(self.values)

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.edges)

    def density(self, p):
        p = np.asarray(p, dtype=float)
        idx = np.searchsorted(self.edges, p, side="right") - 1
        idx = np.clip(idx, 0, len(self.values) - 1)
        return self.heights[idx]

    def cumulative(self, p):
        knots = np.concatenate([[0.0], np.cumsum(self.heights * self.widths)])
        return np.interp(np.asarray(p, dtype=float), self.edges, knots)

    @property
    def sup(self) -> float:
        return max(self.values)

    def kinks(self) -> np.ndarray:
        return self.edges

    def jumps(self) -> tuple[np.ndarray, np.ndarray]:
        """Interior jump locations and sizes of the density (zero jumps dropped)."""
        sizes = np.diff(self.heights)
        loc = self.edges[1:-1]
        keep = sizes != 0.0
        return loc[keep], sizes[keep]

    def as_piecewise(self) -> "PiecewiseConstant":
        return self

    def to_dict(self) -> dict:
        return {
            "kind": "piecewise",
            "breakpoints": list(self.breakpoints),
            "values": list(self.values),
        }

    def is_uniform(self) -> bool:
        return all(v == self.values[0] for v in self.values)


def uniform() -> PiecewiseConstant:
    """The risk-neutral spectrum ``phi = 1``."""
    return PiecewiseConstant((0.0, 1.0), (1.0,))


def validate(spec: Spectrum) -> list[str]:
    """Check admissibility; return the list of violated invariants (empty if ok).

    The three invariants are ``non-decreasing``, ``integral = 1`` and
    ``bounded``. Analytic families satisfy them by construction.
    """
    problems = []
    if isinstance(spec, PiecewiseConstant):
        v = spec.heights
        if np.any(v < 0.0):
            problems.append("non-negative: density takes negative values")
        if np.any(np.diff(v) < 0.0):
            problems.append("non-decreasing: density decreases across a breakpoint")
        mass = float(np.sum(v * spec.widths))
        if abs(mass - 1.0) > NORMALIZATION_TOL:
            problems.append(f"integral = 1: density integrates to {mass!r}")
        if not np.all(np.isfinite(v)):
            problems.append("bounded: density is not finite")
    elif not isinstance(spec, (CVaR, Exponential, Power)):
        problems.append(f"unknown spectrum type {type(spec).__name__}")
    return problems


def is_valid(spec: Spectrum) -> bool:
    return not validate(spec)


def require_valid(spec: Spectrum) -> Spectrum:
    problems = validate(spec)
    if problems:
        raise InvalidSpectrumError("; ".join(problems))
    return spec


def density_at(spec: Spectrum, p: float) -> float:
    """Spectrum value at probability level ``p`` in ``[0, 1)``.

    Steps are right-continuous: at a breakpoint the value of the step that
    starts there is returned.
    """
    require_valid(spec)
    if not (0.0 <= p < 1.0):
        raise ValueError(f"probability level must lie in [0, 1), got {p}")
    return float(spec.density(p))


def l2_norm_sq(spec: Spectrum) -> float:
    """``int_0^1 phi(p)^2 dp``; always at least 1 for an admissible spectrum."""
    require_valid(spec)
    if isinstance(spec, CVaR):
        return 1.0 / spec.epsilon
    if isinstance(spec, PiecewiseConstant):
        return float(np.sum(spec.heights**2 * spec.widths))
    value, _ = integrate.quad(
        lambda p: float(spec.density(p)) ** 2, 0.0, 1.0, epsabs=0.0, epsrel=1e-12, limit=200
    )
    return value


def discretize(spec: Spectrum, steps: int = 1000) -> PiecewiseConstant:
    """Step approximation on a uniform grid of ``steps`` cells.

    Each step carries the cell average of the density, so the result is
    admissible whenever ``spec`` is. Piecewise spectra (and CVaR) are
    returned exactly rather than re-gridded.
    """
    require_valid(spec)
    if isinstance(spec, (CVaR, PiecewiseConstant)):
        return spec.as_piecewise()
    if steps < 1:
        raise ValueError("steps must be positive")
    edges = np.linspace(0.0, 1.0, steps + 1)
    mass = np.diff(spec.cumulative(edges))
    mass /= mass.sum()
    heights = np.maximum.accumulate(mass / np.diff(edges))
    return PiecewiseConstant(tuple(edges), tuple(heights))


@dataclass(frozen=True)
class SpectrumSet:
    """Finite, non-empty set of admissible spectra defining ``sup_phi rho_phi``."""

    members: tuple

    def __init__(self, members: Sequence[Spectrum]):
        members = tuple(members)
        if not members:
            raise InvalidSpectrumError("spectrum set must be non-empty")
        for i, m in enumerate(members):
            problems = validate(m)
            if problems:
                raise InvalidSpectrumError(f"member {i}: " + "; ".join(problems))
        object.__setattr__(self, "members", members)

    def __iter__(self) -> Iterator[Spectrum]:
        return iter(self.members)

    def __len__(self) -> int:
        return len(self.members)

    def __getitem__(self, i: int) -> Spectrum:
        return self.members[i]


def sup_l2_norm_sq(spectra: SpectrumSet) -> tuple[float, int]:
    """Largest squared L2 norm over the set and the (lowest) index attaining it."""
    if not isinstance(spectra, SpectrumSet):
        spectra = SpectrumSet(spectra)
    norms = [l2_norm_sq(s) for s in spectra]
    best = int(np.argmax(norms))
    return norms[best], best


def from_dict(data: dict) -> Spectrum:
    """Build a spectrum from a descriptor such as ``{"kind": "cvar", "epsilon": 0.05}``."""
    if not isinstance(data, dict) or "kind" not in data:
        raise InvalidSpectrumError("spectrum descriptor must be a mapping with a 'kind' field")
    kind = str(data["kind"]).lower()
    try:
        if kind == "cvar":
            return CVaR(data["epsilon"])
        if kind in ("exponential", "exp"):
            return Exponential(data["k"])
        if kind == "power":
            return Power(data["gamma"])
        if kind == "uniform":
            return uniform()
        if kind == "piecewise":
            return PiecewiseConstant(tuple(data["breakpoints"]), tuple(data["values"]))
    except KeyError as exc:
        raise InvalidSpectrumError(f"{kind} spectrum is missing field {exc.args[0]!r}") from None
    except TypeError as exc:
        raise InvalidSpectrumError(f"malformed {kind} spectrum: {exc}") from None
    raise InvalidSpectrumError(f"unknown spectrum kind {kind!r}")


def parse_shorthand(text: str) -> Spectrum:
    """Parse ``cvar:EPS``, ``exp:K``, ``power:G`` or ``uniform``."""
    text = text.strip()
    if text.lower() == "uniform":
        return uniform()
    name, sep, arg = text.partition(":")
    if not sep:
        raise InvalidSpectrumError(f"unrecognized spectrum shorthand {text!r}")
    try:
        value = float(arg)
    except ValueError:
        raise InvalidSpectrumError(f"spectrum parameter {arg!r} is not a number") from None
    name = name.lower()
    if name == "cvar":
        return CVaR(value)
    if name in ("exp", "exponential"):
        return Exponential(value)
    if name == "power":
        return Power(value)
    raise InvalidSpectrumError(f"unknown spectrum kind {name!r}")
