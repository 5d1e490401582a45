"""Oracle-backed self-checks behind ``wcrisk verify``."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .io import data_path
from .measures import spectral_risk
from .moments import MomentMatrixPair, MomentPair
from .oracle import SupportGrid, max_cvar_lp, random_search_lower_bound
from .portfolio import schur_block, schur_certificate
from .spectra import CVaR, from_dict
from .worstcase import dual_certificate, extremal_distribution, wc_var_cvar, wcsrm

SUITES = ("sandwich", "lp", "schur")


@dataclass(frozen=True)
class Check:
    suite: str
    name: str
    passed: bool
    lower: float
    upper: float
    detail: str = ""

    @property
    def width(self) -> float:
        return self.upper - self.lower

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return (
            f"{status}\t{self.suite}\t{self.name}\tlower={self.lower!r}\t"
            f"upper={self.upper!r}\twidth={self.width:.3e}\t{self.detail}"
        )


def sandwich_suite(tol: float = 1e-6) -> list[Check]:
    """Extremal distribution below, dual certificate above, closed form in between."""
    fixtures = json.loads(data_path("verify_fixtures.json").read_text())
    checks = []
    for s in fixtures["spectra"]:
        spec = from_dict(s)
        for mu, sigma in fixtures["moments"]:
            m = MomentPair(mu, sigma)
            closed = wcsrm(m, spec).value
            lower = spectral_risk(extremal_distribution(m, spec), spec)
            upper = dual_certificate(m, spec).bound
            expected = mu + sigma * s["kappa"]
            ok = (
                abs(lower - closed) <= tol
                and abs(upper - closed) <= tol
                and abs(closed - expected) <= 1e-9 * (1.0 + abs(expected))
            )
            name = f"{s['kind']}{_label(s)}@({mu},{sigma})"
            checks.append(Check("sandwich", name, ok, lower, upper, f"closed={closed!r}"))
    return checks


def _label(s: dict) -> str:
    if s["kind"] == "cvar":
        return f"({s['epsilon']})"
    return f"[{len(s['values'])} steps]"


def lp_suite(sizes=(400, 1600), trials: int = 2000) -> list[Check]:
    """Random feasible search below, certified LP bound above, for CVaR at (0, 1)."""
    m = MomentPair(0.0, 1.0)
    checks = []
    for eps in (0.1, 0.5):
        closed = wc_var_cvar(m, eps)
        lower = random_search_lower_bound(m, CVaR(eps), trials, seed=7)
        widths = []
        for n in sizes:
            upper = max_cvar_lp(m, eps, SupportGrid.linspace(-8.0, 8.0, n))
            widths.append(upper - lower)
            ok = lower <= closed + 1e-9 and closed <= upper + 1e-9
            checks.append(Check("lp", f"cvar({eps})@grid{n}", ok, lower, upper, f"closed={closed!r}"))
        shrinks = all(b < a for a, b in zip(widths, widths[1:]))
        checks.append(
            Check("lp", f"cvar({eps})@refinement", shrinks, lower, lower + widths[-1],
                  "widths=" + ",".join(f"{w:.3e}" for w in widths))
        )
    return checks


def schur_suite(instances: int = 100, seed: int = 11) -> list[Check]:
    """Closed-form inner maximizer of the matrix-inequality form, on random PSD data."""
    rng = np.random.default_rng(seed)
    worst_eig, worst_match, failures = 0.0, 0.0, 0
    for _ in range(instances):
        n = int(rng.integers(1, 6))
        G = rng.normal(size=(n, n))
        mm = MomentMatrixPair(rng.normal(scale=0.1, size=n), G @ G.T + 1e-3 * np.eye(n))
        x = rng.dirichlet(np.ones(n))
        kappa = float(rng.uniform(0.1, 10.0))
        r, min_eig, match = schur_certificate(x, mm, kappa)
        scale = float(np.linalg.norm(schur_block(mm, r, kappa), 2))
        rel = abs(min_eig) / scale
        worst_eig = max(worst_eig, rel)
        worst_match = max(worst_match, match)
        if rel > 1e-8 or match > 1e-9:
            failures += 1
    return [
        Check("schur", f"{instances} random instances", failures == 0, -worst_eig, worst_eig,
              f"max|min_eig|/||block||={worst_eig:.3e} max_objective_gap={worst_match:.3e}")
    ]


def run(suite: str = "all") -> list[Check]:
    if suite == "all":
        names = SUITES
    elif suite in SUITES:
        names = (suite,)
    else:
        raise ValueError(f"unknown suite {suite!r}")
    out = []
    for name in names:
        out.extend({"sandwich": sandwich_suite, "lp": lp_suite, "schur": schur_suite}[name]())
    return out


def all_passed(checks) -> bool:
    return all(c.passed for c in checks) and not any(math.isnan(c.lower) for c in checks)
