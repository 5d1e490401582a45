import math

import numpy as np
import pytest
from hypothesis import given, settings

from wcrisk.errors import CertificateError, InvalidSpectrumError, NonAttainmentError
from wcrisk.measures import spectral_risk, tail_average
from wcrisk.moments import MomentPair
from wcrisk.oracle import integrate_spectrum
from wcrisk.spectra import CVaR, Exponential, PiecewiseConstant, Power, SpectrumSet, l2_norm_sq, uniform
from wcrisk.worstcase import (
    _integrand,
    dual_certificate,
    equivalent_epsilon,
    extremal_distribution,
    kappa_of,
    wc_var_cvar,
    wclicrm,
    wcsrm,
)

from conftest import moment_pairs, random_step_spectrum, step_spectra

# from the quadrature value of int phi^2 for Exponential(1)
EXP1_WCSRM_1_2 = 1.5726314936128696
EXP1_EPS = 0.9242343145200195


class TestWcVarCvar:
    def test_five_percent(self):
        assert wc_var_cvar(MomentPair(0.0, 1.0), 0.05) == pytest.approx(math.sqrt(19), abs=1e-12)

    @pytest.mark.parametrize("eps", [0.01, 0.3, 1.0])
    def test_point_mass(self, eps):
        assert wc_var_cvar(MomentPair(3.0, 0.0), eps) == 3.0

    def test_full_tail(self):
        assert wc_var_cvar(MomentPair(0.0, 1.0), 1.0) == 0.0

    @pytest.mark.parametrize("eps", [0.0, -0.1, 1.5])
    def test_range(self, eps):
        with pytest.raises(ValueError):
            wc_var_cvar(MomentPair(0.0, 1.0), eps)


class TestWcsrm:
    def test_cvar(self):
        assert wcsrm(MomentPair(0.0, 1.0), CVaR(0.05)).value == pytest.approx(math.sqrt(19), abs=1e-12)

    @given(moment_pairs)
    def test_uniform_is_mean(self, m):
        assert wcsrm(m, uniform()).value == m.mean

    def test_exponential_frozen(self):
        res = wcsrm(MomentPair(1.0, 2.0), Exponential(1.0))
        assert res.value == pytest.approx(EXP1_WCSRM_1_2, abs=1e-12)
        oracle = 1.0 + 2.0 * math.sqrt(integrate_spectrum(Exponential(1.0), 2) - 1.0)
        assert res.value == pytest.approx(oracle, abs=1e-10)

    def test_invalid_spectrum(self):
        with pytest.raises(InvalidSpectrumError):
            wcsrm(MomentPair(0.0, 1.0), PiecewiseConstant((0.0, 1.0), (0.9,)))

    @pytest.mark.parametrize("eps", np.arange(1, 100) / 100.0)
    def test_matches_cvar_formula(self, eps):
        m = MomentPair(0.7, 1.9)
        assert wcsrm(m, CVaR(eps)).value == pytest.approx(wc_var_cvar(m, eps), abs=1e-12)

    def test_strictly_increasing_in_norm(self, rng):
        m = MomentPair(0.0, 1.5)
        specs = [random_step_spectrum(rng) for _ in range(30)] + [CVaR(e) for e in (0.9, 0.5, 0.1)]
        pairs = sorted((l2_norm_sq(s), wcsrm(m, s).value) for s in specs)
        for (n1, v1), (n2, v2) in zip(pairs, pairs[1:]):
            if n2 > n1 + 1e-12:
                assert v2 > v1


class TestWclicrm:
    def test_cvar_pair(self):
        res = wclicrm(MomentPair(0.0, 1.0), SpectrumSet([CVaR(0.05), CVaR(0.1)]))
        assert res.value == pytest.approx(math.sqrt(19), abs=1e-12)
        assert res.attaining_spectrum_index == 0

    @given(moment_pairs, step_spectra())
    def test_singleton(self, m, spec):
        assert wclicrm(m, SpectrumSet([spec])) == wcsrm(m, spec)

    def test_uniform_and_half_tail(self):
        m = MomentPair(0.0, 1.0)
        res = wclicrm(m, SpectrumSet([uniform(), CVaR(0.5)]))
        assert res.value == pytest.approx(1.0, abs=1e-14)
        assert res.attaining_spectrum_index == 1
        assert wcsrm(m, uniform()).value < wcsrm(m, CVaR(0.5)).value

    def test_equivalence_with_tail_probability(self, rng):
        for _ in range(50):
            m = MomentPair(float(rng.normal(scale=3)), float(rng.uniform(0.0, 4)))
            specs = [random_step_spectrum(rng) for _ in range(int(rng.integers(1, 5)))]
            specs.append(Exponential(float(rng.uniform(0.5, 20))))
            res = wclicrm(m, SpectrumSet(specs))
            assert res.value == pytest.approx(wc_var_cvar(m, equivalent_epsilon(SpectrumSet(specs))), abs=1e-10)
            norms = [l2_norm_sq(s) for s in specs]
            assert res.attaining_spectrum_index == int(np.argmax(norms))


class TestEquivalentEpsilon:
    def test_cvar_fixed_point(self):
        assert equivalent_epsilon(CVaR(0.05)) == 0.05

    def test_uniform(self):
        assert equivalent_epsilon(uniform()) == 1.0

    def test_exponential_frozen(self):
        assert equivalent_epsilon(Exponential(1.0)) == pytest.approx(EXP1_EPS, abs=1e-12)
        assert equivalent_epsilon(Exponential(1.0)) == pytest.approx(1.0 / 1.0819767068693265, abs=1e-12)

    def test_identity_across_moments(self, rng):
        specs = [random_step_spectrum(rng) for _ in range(7)] + [Exponential(2.0), Power(3.0), CVaR(0.2)]
        for _ in range(50):
            m = MomentPair(float(rng.normal(scale=10)), float(rng.uniform(0.0, 10)))
            for s in specs:
                assert wc_var_cvar(m, equivalent_epsilon(s)) == pytest.approx(wcsrm(m, s).value, abs=1e-10)

    def test_kappa(self):
        assert kappa_of(CVaR(0.2)) == 2.0
        assert kappa_of(SpectrumSet([CVaR(0.5), CVaR(0.2)])) == 2.0


class TestExtremal:
    @pytest.mark.parametrize("eps", [0.05, 0.3, 0.9])
    def test_cvar_two_point(self, eps):
        d = extremal_distribution(MomentPair(0.0, 1.0), CVaR(eps))
        assert d.atoms.tolist() == pytest.approx([-math.sqrt(eps / (1 - eps)), math.sqrt((1 - eps) / eps)], abs=1e-12)
        assert d.probs.tolist() == pytest.approx([1 - eps, eps], abs=1e-14)
        assert d.mean() == pytest.approx(0.0, abs=1e-12)
        assert d.var() == pytest.approx(1.0, abs=1e-12)
        assert tail_average(d, eps) == pytest.approx(math.sqrt((1 - eps) / eps), abs=1e-12)

    def test_symmetric_half(self):
        d = extremal_distribution(MomentPair(5.0, 2.0), CVaR(0.5))
        assert d.atoms.tolist() == pytest.approx([3.0, 7.0], abs=1e-14)
        assert d.probs.tolist() == [0.5, 0.5]
        assert spectral_risk(d, CVaR(0.5)) == pytest.approx(7.0, abs=1e-14)

    def test_uniform_not_attained(self):
        with pytest.raises(NonAttainmentError):
            extremal_distribution(MomentPair(0.0, 1.0), uniform())

    def test_zero_std_not_attained(self):
        with pytest.raises(NonAttainmentError):
            extremal_distribution(MomentPair(1.0, 0.0), CVaR(0.1))

    @settings(deadline=None)
    @given(moment_pairs, step_spectra())
    def test_moments_and_value_exact(self, m, spec):
        if spec.is_uniform():
            return
        d = extremal_distribution(m, spec)
        assert abs(d.mean() - m.mean) <= 1e-10 * (1 + abs(m.mean))
        assert abs(d.std() - m.std) <= 1e-10 * (1 + m.std)
        assert spectral_risk(d, spec) == pytest.approx(wcsrm(m, spec).value, abs=1e-9 * (1 + abs(m.mean) + m.std))

    @pytest.mark.parametrize("spec", [Exponential(3.0), Power(2.0)], ids=repr)
    def test_analytic_converges(self, spec):
        m = MomentPair(1.0, 2.0)
        closed = wcsrm(m, spec).value
        errs = []
        for n in (50, 500, 5000):
            d = extremal_distribution(m, spec, n)
            assert d.mean() == pytest.approx(m.mean, abs=1e-12)
            assert d.std() == pytest.approx(m.std, abs=1e-12)
            risk = spectral_risk(d, spec)
            assert risk <= closed + 1e-12
            errs.append(closed - risk)
        assert errs[2] < errs[1] < errs[0] and errs[2] < 1e-5


class TestDualCertificate:
    def test_half_tail(self):
        cert = dual_certificate(MomentPair(0.0, 1.0), CVaR(0.5))
        assert cert.bound == pytest.approx(1.0, abs=1e-14)
        assert (cert.lam0, cert.lam1, cert.lam2) == pytest.approx((0.5, 1.0, 0.5), abs=1e-14)
        # one-sided candidate values are -1 and +1; the jump carries their midpoint
        assert cert.candidate.values.tolist() == pytest.approx([0.0], abs=1e-14)
        assert cert.min_slack >= 0.0

    def test_half_tail_one_sided_candidate_is_loose(self):
        # q(1/2) = +1 with the same slope and curvature: lam0 = 1.5 and the bound is 2, not 1
        z = np.linspace(-10, 10, 200001)
        g = 2.0 * (0.5 * 1.0 + np.clip(z - 1.0, 0.0, None))
        lam0 = float(np.max(g - z - 0.5 * z * z))
        assert lam0 + 0.5 == pytest.approx(2.0, abs=1e-6)

    def test_five_percent(self):
        cert = dual_certificate(MomentPair(0.0, 1.0), CVaR(0.05))
        assert cert.bound == pytest.approx(math.sqrt(19), abs=1e-12)

    def test_uniform_rejected(self):
        with pytest.raises(InvalidSpectrumError):
            dual_certificate(MomentPair(0.0, 1.0), uniform())

    def test_analytic_rejected(self):
        with pytest.raises(InvalidSpectrumError):
            dual_certificate(MomentPair(0.0, 1.0), Exponential(1.0))

    def test_zero_std_rejected(self):
        with pytest.raises(ValueError):
            dual_certificate(MomentPair(0.0, 0.0), CVaR(0.5))

    @settings(deadline=None, max_examples=60)
    @given(moment_pairs, step_spectra())
    def test_bound_equals_closed_form(self, m, spec):
        if spec.is_uniform():
            return
        cert = dual_certificate(m, spec)
        assert cert.bound == pytest.approx(wcsrm(m, spec).value, abs=1e-9 * (1 + abs(m.mean) + m.std))
        assert cert.lam2 >= 0.0

    def test_majorization_independently(self, rng):
        for _ in range(30):
            spec = random_step_spectrum(rng)
            if spec.is_uniform():
                continue
            m = MomentPair(float(rng.normal()), float(rng.uniform(0.2, 3)))
            cert = dual_certificate(m, spec)
            z = rng.uniform(m.mean - 50 * m.std, m.mean + 50 * m.std, size=20000)
            quad = cert.lam0 + cert.lam1 * z + cert.lam2 * z * z
            gap = quad - _integrand(spec, cert.candidate, z)
            assert gap.min() >= -1e-9 * (1 + np.abs(quad).max())

    def test_broken_certificate_detected(self, monkeypatch):
        import wcrisk.worstcase as wc

        monkeypatch.setattr(wc, "_min_gap", lambda *a, **k: -1.0)
        with pytest.raises(CertificateError):
            wc.dual_certificate(MomentPair(0.0, 1.0), CVaR(0.5))


class TestSandwich:
    def test_extremal_below_certificate_above(self, rng):
        for _ in range(50):
            spec = random_step_spectrum(rng)
            if spec.is_uniform():
                continue
            m = MomentPair(float(rng.normal(scale=5)), float(rng.uniform(0.01, 5)))
            closed = wcsrm(m, spec).value
            lower = spectral_risk(extremal_distribution(m, spec), spec)
            upper = dual_certificate(m, spec).bound
            assert abs(lower - closed) <= 1e-6 and abs(upper - closed) <= 1e-6
            assert lower <= closed + 1e-9 <= upper + 2e-9


class TestDominance:
    @settings(deadline=None)
    @given(step_spectra(), moment_pairs)
    def test_empirical_never_exceeds(self, spec, m):
        from wcrisk.oracle import random_moment_matched

        d = random_moment_matched(m, np.random.default_rng(0))
        assert spectral_risk(d, spec) <= wcsrm(m, spec).value + 1e-9 * (1 + abs(m.mean) + m.std)

    def test_sample_moments(self, rng):
        from wcrisk.measures import EmpiricalDistribution

        for _ in range(100):
            x = rng.standard_t(3, size=int(rng.integers(2, 50)))
            d = EmpiricalDistribution(x)
            m = MomentPair(d.mean(), d.std())
            for spec in (CVaR(0.05), Exponential(5.0), random_step_spectrum(rng)):
                assert spectral_risk(d, spec) <= wcsrm(m, spec).value + 1e-9
