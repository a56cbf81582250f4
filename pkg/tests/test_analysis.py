import math

import numpy as np
import pytest

import nlfisher as nl
from nlfisher import analysis
from conftest import ANALYTIC_LATTICE, quad_k0_integral


class TestCriticalSpeed:
    def test_reference_values(self):
        assert nl.critical_speed(1.0) == 2.0
        assert nl.critical_speed(4.0) == 4.0
        assert nl.critical_speed(0.25) == 1.0

    def test_rejects_nonpositive(self):
        for mu in (0.0, -1.0, math.nan, math.inf):
            with pytest.raises(nl.NonpositiveMu):
                nl.critical_speed(mu)


class TestAmplitudeBound:
    def test_tophat_mu1_against_quadrature_oracle(self):
        k = nl.TopHat(1.0)
        oracle = 1.0 / quad_k0_integral(k, 1.0, breaks=(-1.0, 1.0))
        assert oracle == pytest.approx(1.2, rel=1e-10)
        assert nl.k0_constant(k, 1.0) == pytest.approx(oracle, rel=1e-10)

    def test_tophat_mu10_kink_inside_support(self):
        k = nl.TopHat(1.0)
        oracle = 1.0 / quad_k0_integral(k, 10.0, breaks=(-1.0, 1.0))
        assert oracle == pytest.approx(3.0 * math.sqrt(5.0) / 2.0, rel=1e-10)
        assert nl.k0_constant(k, 10.0) == pytest.approx(oracle, rel=1e-10)

    @pytest.mark.parametrize("kernel", ANALYTIC_LATTICE,
                             ids=lambda k: k.spec_string())
    def test_small_mu_limit_is_one(self, kernel):
        assert nl.k0_constant(kernel, 1e-9) == pytest.approx(1.0, rel=1e-6)

    @pytest.mark.parametrize("kernel", [nl.TopHat(1.0), nl.Gaussian(0.7),
                                        nl.Laplace(1.3), nl.PowerTail(5.0)],
                             ids=lambda k: k.spec_string())
    def test_nondecreasing_in_mu(self, kernel):
        mus = [0.1, 0.5, 1.0, 3.0, 10.0, 40.0]
        vals = [nl.k0_constant(kernel, mu) for mu in mus]
        assert all(b >= a - 1e-12 for a, b in zip(vals, vals[1:]))
        assert all(v >= 1.0 - 1e-12 for v in vals)

    def test_degenerate_integral(self):
        # tabulated kernel with a hole at the origin and mass far outside the
        # hinge support at large mu
        h = 0.1
        z = np.arange(-60, 61) * h
        v = np.where(np.abs(np.abs(z) - 5.0) < 0.5, 1.0, 0.0)
        v /= np.trapz(v, dx=h)
        k = nl.Tabulated(h, v)
        with pytest.raises(nl.DegenerateIntegral):
            nl.k0_constant(k, 50.0)


class TestRapidSpeedThreshold:
    def test_tophat_values_against_arithmetic_oracle(self):
        k = nl.TopHat(1.0)
        oracle1 = 1.0 * math.sqrt(1.0 / 3.0) * 1.2
        assert nl.rapid_speed_threshold(k, 1.0) == pytest.approx(oracle1, rel=1e-10)
        assert nl.rapid_speed_threshold(k, 1.0) == pytest.approx(0.69282032,
                                                                 rel=1e-7)
        oracle10 = 10.0 * math.sqrt(1.0 / 3.0) * (3.0 * math.sqrt(5.0) / 2.0)
        assert nl.rapid_speed_threshold(k, 10.0) == pytest.approx(oracle10,
                                                                  rel=1e-10)
        assert nl.rapid_speed_threshold(k, 10.0) == pytest.approx(19.3649167,
                                                                  rel=1e-7)

    @pytest.mark.parametrize("kernel", ANALYTIC_LATTICE,
                             ids=lambda k: k.spec_string())
    @pytest.mark.parametrize("mu", [0.3, 1.0, 7.0])
    def test_recomposition_is_bitwise(self, kernel, mu):
        recomposed = mu * math.sqrt(kernel.moment(2)) * nl.k0_constant(kernel, mu)
        assert nl.rapid_speed_threshold(kernel, mu) == recomposed

    def test_small_mu_limit(self):
        assert nl.rapid_speed_threshold(nl.TopHat(1.0), 1e-10) < 1e-9

    def test_propagates_divergent_moment(self):
        with pytest.raises(nl.DivergentMoment):
            nl.rapid_speed_threshold(nl.PowerTail(2.5), 1.0)


class TestDispersionGrowth:
    @pytest.mark.parametrize("kernel", ANALYTIC_LATTICE,
                             ids=lambda k: k.spec_string())
    def test_uniform_mode_decays_at_mu(self, kernel):
        mu = 3.0
        assert nl.dispersion_growth(kernel, mu, 0.0) == pytest.approx(-mu,
                                                                      abs=1e-9)

    def test_gaussian_always_negative(self):
        ks = np.linspace(0.0, 30.0, 3001)
        for mu in (0.5, 10.0, 500.0):
            lam = nl.dispersion_growth(nl.Gaussian(1.0), mu, ks)
            assert np.all(lam < 0)

    def test_tophat_mu30_stable_by_brute_force_scan(self):
        # dense (mu, k) scan shows mu=30 is below the instability threshold,
        # so the growth rate at the transform minimum is still negative
        ks = np.linspace(1e-3, 60.0, 200001)
        lam = nl.dispersion_growth(nl.TopHat(1.0), 30.0, ks)
        assert np.max(lam) < 0
        val = nl.dispersion_growth(nl.TopHat(1.0), 30.0, 4.4934)
        assert val == pytest.approx(-4.4934 ** 2 - 30.0 * math.sin(4.4934) / 4.4934,
                                    rel=1e-12)
        assert val < 0


class TestTuringAnalysis:
    def test_gaussian_stable_for_all_mu(self):
        rep = nl.turing_analysis(nl.Gaussian(1.0), 100.0)
        assert rep.stable_for_all_mu
        assert rep.mu_critical is None
        assert not rep.unstable
        assert rep.lambda_max < 0

    def test_tophat_threshold_matches_brute_force(self):
        # oracle: dense grid minimization of k^3 / (-sin k) over (pi, 2*pi)
        ks = np.linspace(math.pi, 2 * math.pi, 100001)[1:-1]
        r = ks ** 3 / (-np.sin(ks))
        mu_c_oracle = float(np.min(r[np.sin(ks) < 0]))
        rep = nl.turing_analysis(nl.TopHat(1.0), 100.0)
        assert rep.mu_critical == pytest.approx(mu_c_oracle, rel=1e-6)

    def test_tophat_unstable_just_above_threshold(self):
        rep0 = nl.turing_analysis(nl.TopHat(1.0), 50.0)
        mu_c = rep0.mu_critical
        above = nl.turing_analysis(nl.TopHat(1.0), 1.02 * mu_c)
        assert above.unstable
        assert above.lambda_max > 0
        # most unstable wavenumber sits in the first negative lobe of sin(k)/k
        assert math.pi < above.k_max < 2 * math.pi
        below = nl.turing_analysis(nl.TopHat(1.0), 0.5 * mu_c)
        assert not below.unstable
        assert below.lambda_max < 0

    def test_instability_monotone_in_mu(self):
        mu_c = nl.turing_analysis(nl.TopHat(1.0), 1.0).mu_critical
        mus = [1.05 * mu_c, 1.5 * mu_c, 4.0 * mu_c]
        flags = [nl.turing_analysis(nl.TopHat(1.0), mu).unstable for mu in mus]
        assert flags == sorted(flags)
        assert all(flags)

    def test_laplace_reports_stable(self):
        rep = nl.turing_analysis(nl.Laplace(1.0), 200.0)
        assert rep.stable_for_all_mu

    def test_powertail_certified_despite_quadrature_transform(self):
        rep = nl.turing_analysis(nl.PowerTail(5.0), 10.0)
        assert rep.stable_for_all_mu
        assert rep.transform_min > 0

    def test_inconclusive_on_noise_floor_transform(self):
        # a tabulated kernel's trapezoid transform decays below the quadrature
        # noise floor well inside the scan range
        h = 0.02
        z = np.arange(-400, 401) * h
        v = np.exp(-0.5 * z ** 2) / math.sqrt(2 * math.pi)
        v /= np.trapz(v, dx=h)
        k = nl.Tabulated(h, v)
        with pytest.raises(nl.InconclusiveScan):
            nl.turing_analysis(k, 10.0)

    def test_report_dict_shape(self):
        d = nl.turing_analysis(nl.Gaussian(1.0), 2.0).to_dict()
        assert d["mu_critical"] == "stable for all mu"
        d2 = nl.turing_analysis(nl.TopHat(1.0), 100.0).to_dict()
        assert isinstance(d2["mu_critical"], float)


class TestConditions:
    def test_connectivity_examples(self):
        assert nl.connectivity_condition(2.0, 1.0, 1.0 / 3.0, 1.0)
        assert not nl.connectivity_condition(0.5, 1.0, 1.0 / 3.0, 1.0)
        # |c| symmetry
        assert nl.connectivity_condition(-2.0, 1.0, 1.0 / 3.0, 1.0)

    def test_connectivity_is_strict(self):
        m2 = 0.25
        c = 1.0 * math.sqrt(m2) * 2.0
        assert not nl.connectivity_condition(c, 1.0, m2, 2.0)

    def test_bistable_examples(self):
        assert nl.bistable_condition(1.0, 1.0 / 3.0, 1.0)
        assert not nl.bistable_condition(3.0, 1.0, 2.0)
        assert nl.bistable_condition(0.1, 1.0, 0.0)
