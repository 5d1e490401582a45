"""Acceptance criteria, one test each, each printing a single PASS/FAIL line."""

import contextlib
import math
import time

import numpy as np
import pytest

from wcrisk.measures import spectral_risk
from wcrisk.moments import MomentMatrixPair, MomentPair
from wcrisk.oracle import SupportGrid, max_cvar_lp, three_point, two_point
from wcrisk.portfolio import Polytope, schur_block, schur_certificate, solve, solve_polytopic
from wcrisk.spectra import CVaR, Exponential, PiecewiseConstant, Power, SpectrumSet, l2_norm_sq
from wcrisk.worstcase import (
    dual_certificate,
    equivalent_epsilon,
    extremal_distribution,
    wc_var_cvar,
    wclicrm,
    wcsrm,
)

from conftest import random_step_spectrum
from test_portfolio import grid_values, random_instance, simplex_grid, socp_optimum


@pytest.fixture
def criterion(capsys):
    """Run the body, then print exactly one PASS/FAIL line and enforce the time limit."""

    @contextlib.contextmanager
    def run(number, title, limit):
        state = {"detail": ""}
        start = time.perf_counter()
        error = None
        try:
            yield state
        except BaseException as exc:  # reported, then re-raised
            error = exc
        elapsed = time.perf_counter() - start
        ok = error is None and elapsed < limit
        if error is not None:
            state["detail"] = f"{type(error).__name__}: {str(error).splitlines()[0] if str(error) else ''}"
        with capsys.disabled():
            print(f"\n{'PASS' if ok else 'FAIL'}  criterion {number}: {title}  "
                  f"[{elapsed:.4g}s < {limit:g}s]  {state['detail']}")
        if error is not None:
            raise error
        assert elapsed < limit, f"runtime {elapsed:.4g}s exceeds {limit}s"

    return run


def test_criterion_1_closed_form_var_cvar(criterion):
    eps_list = [0.01, 0.05, 0.1, 0.25, 0.5, 1.0]
    with criterion(1, "wc_var_cvar(0,1,eps) = sqrt((1-eps)/eps)", 1e-3) as st:
        values = [wc_var_cvar(MomentPair(0.0, 1.0), e) for e in eps_list]
        errors = [abs(v - math.sqrt((1 - e) / e)) for v, e in zip(values, eps_list)]
        st["detail"] = f"max err {max(errors):.1e}"
        assert max(errors) <= 1e-12
        assert round(values[1], 6) == 4.358899


def test_criterion_2_sandwich(criterion):
    rng = np.random.default_rng(2)
    spectra = [random_step_spectrum(rng) for _ in range(10)]
    pairs = [MomentPair(float(rng.normal(scale=3)), float(rng.uniform(0.1, 5))) for _ in range(10)]
    worst = 0.0
    with criterion(2, "extremal law and dual certificate sandwich mu+sigma*kappa", 5.0) as st:
        for spec in spectra:
            # kappa from the step heights directly, independent of the library norm
            kappa = math.sqrt(float(np.asarray(spec.values) ** 2 @ np.diff(spec.breakpoints)) - 1.0)
            for m in pairs:
                target = m.mean + m.std * kappa
                lower = spectral_risk(extremal_distribution(m, spec), spec)
                upper = dual_certificate(m, spec).bound
                worst = max(worst, abs(lower - target), abs(upper - target))
        st["detail"] = f"max dev {worst:.1e}"
        assert worst <= 1e-6


def test_criterion_3_lp_convergence(criterion):
    m = MomentPair(0.0, 1.0)
    with criterion(3, "max_cvar_lp on [-8,8] converges to 1 at eps=0.5", 60.0) as st:
        coarse = max_cvar_lp(m, 0.5, SupportGrid.linspace(-8.0, 8.0, 400))
        fine = max_cvar_lp(m, 0.5, SupportGrid.linspace(-8.0, 8.0, 1600))
        ratio = (coarse - 1.0) / (fine - 1.0)
        st["detail"] = f"400: {coarse:.10f}  1600: {fine:.10f}  shrink {ratio:.1f}x"
        assert 1.0 <= coarse <= 1.03
        assert fine >= 1.0 and ratio >= 2.0


def test_criterion_4_set_equivalence(criterion):
    rng = np.random.default_rng(4)
    fixtures = []
    for _ in range(50):
        m = MomentPair(float(rng.normal(scale=2)), float(rng.uniform(0.05, 4)))
        members = []
        for _ in range(int(rng.integers(1, 6))):
            kind = rng.integers(3)
            if kind == 0:
                members.append(CVaR(float(rng.uniform(0.01, 1.0))))
            elif kind == 1:
                members.append(Exponential(float(rng.uniform(0.2, 40))))
            else:
                members.append(random_step_spectrum(rng))
        fixtures.append((m, SpectrumSet(members)))
    norms = [[l2_norm_sq(s) for s in specs] for _, specs in fixtures]
    worst = 0.0
    with criterion(4, "wclicrm = wc_var_cvar at eps' with l2-maximal attainer", 1.0) as st:
        for (m, specs), ns in zip(fixtures, norms):
            res = wclicrm(m, specs)
            worst = max(worst, abs(res.value - wc_var_cvar(m, equivalent_epsilon(specs))))
            assert ns[res.attaining_spectrum_index] == max(ns)
        st["detail"] = f"max err {worst:.1e}"
        assert worst <= 1e-10


def test_criterion_5_dominance(criterion):
    rng = np.random.default_rng(5)
    spectra = [
        CVaR(0.05),
        CVaR(0.5),
        Exponential(3.0),
        Power(2.0),
        PiecewiseConstant((0.0, 0.5, 0.9, 1.0), (0.5, 1.0, 3.5)),
    ]
    with criterion(5, "500 moment-matched laws never exceed the closed form", 10.0) as st:
        worst = -math.inf
        count = 0
        while count < 500:
            m = MomentPair(float(rng.normal(scale=3)), float(rng.uniform(0.01, 5)))
            if count % 2 == 0:
                dist = two_point(m, float(rng.uniform(1e-3, 1 - 1e-3)))
            else:
                dist = three_point(m, m.mean + m.std * rng.uniform(-4, 4, size=3))
                if dist is None:
                    continue
            count += 1
            for spec in spectra:
                worst = max(worst, spectral_risk(dist, spec) - wcsrm(m, spec).value)
        st["detail"] = f"max excess {worst:.1e}"
        assert worst <= 1e-9


def test_criterion_6_portfolio_grid(criterion):
    rng = np.random.default_rng(6)
    instances = []
    for i in range(20):
        n = 2 + i % 2
        mm = random_instance(rng, n)
        instances.append((mm, float(rng.uniform(0.5, 6.0))))
    worst_grid = worst_gap = 0.0
    with criterion(6, "simplex solve vs 1e-3 grid, gap bounds true gap", 120.0) as st:
        for mm, kappa in instances:
            P = Polytope.simplex(mm.n)
            sol = solve(P, mm, kappa)
            grid = grid_values(simplex_grid(mm.n, 1e-3), mm.mean, mm.cov, kappa).min()
            true = socp_optimum(P, mm, kappa)
            worst_grid = max(worst_grid, abs(sol.objective - grid))
            worst_gap = max(worst_gap, (sol.objective - true) - sol.gap)
        st["detail"] = f"max |obj-grid| {worst_grid:.1e}  max (true gap - reported) {worst_gap:.1e}"
        assert worst_grid <= 1e-3
        assert worst_gap <= 1e-9


def test_criterion_7_solver_equivalence(criterion):
    rng = np.random.default_rng(7)
    tol = 1e-6
    instances = [
        (random_instance(rng, int(rng.integers(2, 5))),
         SpectrumSet([Exponential(float(k)) for k in rng.uniform(0.5, 40, size=int(rng.integers(1, 4)))]))
        for _ in range(10)
    ]
    worst = 0.0
    with criterion(7, "exponential set vs CVaR(eps') objectives within 2 tol", 60.0) as st:
        for mm, specs in instances:
            P = Polytope.simplex(mm.n)
            a = solve(P, mm, specs, tol=tol)
            b = solve(P, mm, SpectrumSet([CVaR(equivalent_epsilon(specs))]), tol=tol)
            worst = max(worst, abs(a.objective - b.objective))
        st["detail"] = f"max diff {worst:.1e}"
        assert worst <= 2 * tol


def test_criterion_8_schur(criterion):
    rng = np.random.default_rng(8)
    cases = []
    while len(cases) < 100:
        n = int(rng.integers(1, 7))
        G = rng.normal(size=(n, int(rng.integers(1, n + 1))))
        mm = MomentMatrixPair(rng.normal(scale=0.1, size=n), G @ G.T)
        x = rng.normal(size=n)
        if float(x @ mm.cov @ x) > 1e-8:
            cases.append((mm, x, float(rng.uniform(0.1, 10))))
    worst_eig = worst_match = 0.0
    with criterion(8, "Schur block min eigenvalue ~ 0 and objective match", 5.0) as st:
        for mm, x, kappa in cases:
            r, min_eig, match = schur_certificate(x, mm, kappa)
            scale = np.linalg.norm(schur_block(mm, r, kappa), 2)
            worst_eig = max(worst_eig, abs(min_eig) / scale)
            worst_match = max(worst_match, match)
        st["detail"] = f"{len(cases)} cases  max |eig|/||B|| {worst_eig:.1e}  max match {worst_match:.1e}"
        assert worst_eig <= 1e-8 and worst_match <= 1e-9


def test_criterion_9_polytopic(criterion):
    rng = np.random.default_rng(9)
    instances = []
    for i in range(10):
        n = 2 + i % 2
        instances.append(([random_instance(rng, n), random_instance(rng, n)], float(rng.uniform(0.5, 5))))
    worst = 0.0
    with criterion(9, "K=2 polytopic min-max vs grid brute force", 60.0) as st:
        for vertices, kappa in instances:
            n = vertices[0].n
            X = simplex_grid(n, 1e-3)
            grid = np.max([grid_values(X, v.mean, v.cov, kappa) for v in vertices], axis=0).min()
            sol = solve_polytopic(Polytope.simplex(n), vertices, kappa)
            worst = max(worst, abs(sol.objective - grid))
        st["detail"] = f"max |obj-grid| {worst:.1e}"
        assert worst <= 1e-3
