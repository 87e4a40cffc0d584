"""
Asymptotic power and limit-law formulas.
"""

import math

import pytest

from panel_sphericity.core.power import (
    finite_sample_power,
    h1star_moments,
    is_diagonal,
    power_s2,
    power_s3,
    power_weak_lpa,
    power_weak_ulpa,
    s1_squared,
    s2_squared,
    supp_general_covariance,
    theory_power,
    ulpa_weak_moments,
    weak_lpa_center,
)
from panel_sphericity.core.spectra import eta_limits, sigma_traces
from panel_sphericity.errors import DomainError, UnsupportedCaseError
from panel_sphericity.models import (
    DenseCovariance,
    DiagonalCovariance,
    FactorAlternative,
    IdentityCovariance,
    SpikedFactorCovariance,
)
from tests.config import ALPHA, Z_005


class TestWeakFactor:
    def test_no_signal_gives_size(self):
        assert power_weak_lpa([0.0], 1.0, ALPHA).power == pytest.approx(ALPHA, abs=1e-9)

    def test_single_spike(self):
        result = power_weak_lpa([2.0], 1.0, ALPHA)
        assert result.argument == pytest.approx(Z_005 - 2.0)
        assert result.power == pytest.approx(0.6388, abs=2e-4)

    def test_power_grows_with_signal(self):
        powers = [power_weak_lpa([h], 0.5).power for h in (0.5, 1.0, 2.0, 4.0)]
        assert powers == sorted(powers)
        assert all(ALPHA < p <= 1.0 for p in powers)

    @pytest.mark.parametrize("h", [[1.0], [2.0], [1.0, 0.5]])
    def test_power_falls_as_c_t_grows(self, h):
        powers = [power_weak_lpa(h, c).power for c in (0.25, 0.5, 1.0, 2.0, 4.0)]
        assert all(a > b for a, b in zip(powers, powers[1:]))

    def test_invalid_inputs(self):
        with pytest.raises(DomainError):
            power_weak_lpa([1.0], 0.0)
        with pytest.raises(DomainError):
            power_weak_lpa([-1.0], 1.0)
        with pytest.raises(DomainError):
            power_weak_lpa([1.0], 1.0, alpha=0.0)

    def test_center(self):
        assert weak_lpa_center([2.0], n=50, T=100, gamma4_hat=3.0) == pytest.approx(50 + 1 + 0.5 + 8.0)


class TestUlpa:
    def test_spherical_eta_gives_size(self):
        assert power_weak_ulpa((1.0, 1.0, 1.0), 1.8, 100).power == pytest.approx(ALPHA, abs=1e-9)

    def test_one_spike_diagonal(self):
        eta = eta_limits(DiagonalCovariance(eigenvalues=[2, 1, 1, 1]))
        assert power_weak_ulpa(eta, 3.0, 100).power == pytest.approx(0.99996, abs=1e-5)

    def test_power_grows_with_T(self):
        eta = eta_limits(DiagonalCovariance(eigenvalues=[1.2, 1, 1, 1]))
        powers = [power_weak_ulpa(eta, 3.0, T).power for T in (50, 100, 200, 400)]
        assert all(a < b for a, b in zip(powers, powers[1:]))
        assert powers[0] > ALPHA

    def test_impossible_spectrum(self):
        with pytest.raises(DomainError):
            power_weak_ulpa((1.0, 0.5, 0.5), 3.0, 100)

    def test_moments_at_null(self):
        center, variance = ulpa_weak_moments((1.0, 1.0, 1.0), 1.8, n=400, T=20)
        assert center == pytest.approx(400 + 1.8 - 2.0 + 20.0)
        assert variance == pytest.approx(4.0)

    def test_moments_match_power(self):
        eta, gamma4, n, T = (1.25, 1.75, 1.75), 3.0, 400, 20
        center, variance = ulpa_weak_moments(eta, gamma4, n, T)
        # Rejection when (T U_hat - n - g4 - c_T + 2) / 2 > Z_alpha.
        argument = (2.0 * Z_005 + n + gamma4 + n / T - 2.0 - center) / math.sqrt(variance)
        expected = 1.0 - 0.5 * math.erfc(-argument / math.sqrt(2.0))
        assert power_weak_ulpa(eta, gamma4, T).power == pytest.approx(expected, abs=1e-9)


class TestUnboundedNorm:
    def test_null_centering(self):
        n, T, gamma4 = 30, 60, 1.8
        moments = h1star_moments(sigma_traces(IdentityCovariance(n=n)), gamma4, n, T)
        assert T * moments.mu == pytest.approx(n + gamma4 - 2.0)

    def test_null_variance(self):
        n, T = 30, 60
        moments = h1star_moments(sigma_traces(IdentityCovariance(n=n)), 3.0, n, T)
        assert moments.sigma2 == pytest.approx(4.0 + 8.0 / (n * T), rel=1e-9)

    def test_scale_invariance(self):
        spec = SpikedFactorCovariance(n=40, spikes=[5.0, 2.0])
        scaled = SpikedFactorCovariance(n=40, base=3.0, spikes=[5.0, 2.0])
        a = h1star_moments(sigma_traces(spec), 2.5, 40, 80)
        b = h1star_moments(sigma_traces(scaled), 2.5, 40, 80)
        assert b.mu == pytest.approx(a.mu, rel=1e-10)
        assert b.sigma2 == pytest.approx(a.sigma2, rel=1e-10)

    def test_as_printed_variant_differs(self):
        st = sigma_traces(SpikedFactorCovariance(n=40, spikes=[5.0]))
        default = h1star_moments(st, 3.0, 40, 80)
        printed = h1star_moments(st, 3.0, 40, 80, as_printed=True)
        assert printed.as_printed and not default.as_printed
        assert printed.mu == default.mu
        assert printed.sigma2 != pytest.approx(default.sigma2)

    def test_s3_at_null_moments_gives_size(self):
        n, T, gamma4 = 100, 100, 3.0
        result = power_s3(mu=(n + gamma4 - 2.0) / T, sigma=2.0, n=n, T=T, gamma4=gamma4)
        assert result.power == pytest.approx(ALPHA, abs=1e-9)
        assert result.inputs["T_mu"] == pytest.approx(101.0)

    def test_far_tail_power_stays_positive(self):
        # Argument near 32: 1 - Phi would round to zero.
        result = power_s3(mu=0.0, sigma=2.0, n=60, T=60, gamma4=3.0)
        assert result.argument > 30
        assert 0.0 < result.power < 1e-200

    def test_s3_requires_positive_sigma(self):
        with pytest.raises(DomainError):
            power_s3(0.1, 0.0, 10, 10, 3.0)


class TestDivergentFactors:
    def test_formula(self):
        result = power_s2(B1=1.0, B2=1.0, n=100, tau=0.5, gamma4=3.0, sigma=2.0)
        assert result.argument == pytest.approx((2.0 * Z_005 - 1.0) / 2.0)
        assert result.inputs["nu4"] == 0.0

    def test_explicit_nu4(self):
        result = power_s2(1.0, 1.0, 100, 0.5, 3.0, 2.0, nu4=1.0)
        assert result.argument == pytest.approx((2.0 * Z_005 - 2.0) / 2.0)

    def test_invalid_inputs(self):
        with pytest.raises(DomainError):
            power_s2(1.0, 1.0, 100, 0.0, 3.0, 2.0)
        with pytest.raises(DomainError):
            power_s2(2.0, 1.0, 100, 0.5, 3.0, 2.0)
        with pytest.raises(DomainError):
            power_s2(1.0, 1.0, 100, 0.5, 3.0, 0.0)

    def test_power_grows_with_n(self):
        # sigma = O(sqrt(n)) while the drift is linear in n.
        powers = [power_s2(1.2, 1.6, n, 0.5, 3.0, math.sqrt(n)).power for n in (25, 50, 100, 200, 400)]
        assert all(a < b for a, b in zip(powers, powers[1:]))

    def test_eighty_spikes(self):
        # r = 80 spikes with eigenvalue 4 at n = T = 400.
        result = theory_power(FactorAlternative(tau=0.2, h=[3.0]), 400, 400, 3.0)
        assert result.scenario == "divergent-s2"
        assert result.inputs["sigma"] ** 2 == pytest.approx(20.7, abs=1.5)
        assert result.argument == pytest.approx(-50.0, abs=4.0)
        assert result.power == pytest.approx(1.0)


class TestTheoryPower:
    def test_null(self):
        result = theory_power(None, 100, 100, 3.0)
        assert result.power == ALPHA
        assert result.scenario == "null"

    def test_weak_uses_bounded_formula(self):
        result = theory_power(FactorAlternative(r=1, h=[2.0]), 100, 100, 3.0)
        assert result.power == pytest.approx(power_weak_lpa([2.0], 1.0).power)

    def test_growing_spikes(self):
        result = theory_power(FactorAlternative(r=2, alpha=0.6), 200, 200, 3.0)
        assert result.scenario == "intermediate-s3"
        assert result.inputs["moment_regime"] == "sixteenth-moment"
        assert result.power > 0.95

    def test_strong_factor(self):
        result = theory_power(FactorAlternative(r=1, alpha=1.0), 100, 100, 3.0)
        assert result.scenario == "strong"
        assert result.power > 0.99


class TestSupplementary:
    ONES = (1.0, 1.0, 1.0, 1.0)

    def test_hand_substituted_value(self):
        assert s1_squared(self.ONES, (1.0, 2.0), 1.0) == pytest.approx(12.0)
        assert s1_squared(self.ONES, (1.0, 1.0), 1.0) == pytest.approx(4.0)

    @pytest.mark.parametrize("c", [0.25, 1.0, 3.0])
    def test_gaussian_diagonal_branches_agree(self, c):
        theta, vartheta = (1.5, 3.0, 7.0, 18.0), (1.5, 3.0 + c * 2.25)
        assert s2_squared(theta, vartheta, c, 3.0) == pytest.approx(s1_squared(theta, vartheta, c), rel=1e-12)

    def test_result_reports_both_conventions(self):
        result = supp_general_covariance(self.ONES, (1.0, 2.0), 1.0, 100, 3.0, diagonal=False)
        assert result.branch == "gaussian"
        assert result.s2 == pytest.approx(12.0)
        assert result.identity_variance_standard == pytest.approx(12.0)
        assert result.identity_variance_centered == pytest.approx(4.0)
        assert "ambiguous" in result.notes

    def test_diagonal_branch(self):
        result = supp_general_covariance(self.ONES, (1.0, 2.0), 1.0, 100, 1.8, diagonal=True)
        assert result.branch == "diagonal"
        assert 0.0 <= result.power <= 1.0

    def test_consistency_boundary(self):
        # ratio above c + 1 drives the power to one; at the boundary it stays below alpha.
        above = supp_general_covariance(self.ONES, (1.0, 2.0), 1.0, 400, 3.0, diagonal=True)
        boundary = supp_general_covariance(self.ONES, (1.0, 1.0), 1.0, 400, 3.0, diagonal=True)
        assert above.power > 0.99
        assert boundary.power < ALPHA

    def test_unsupported_case(self):
        with pytest.raises(UnsupportedCaseError, match=r"eigenvectors of \$\\Sigma_n\$"):
            supp_general_covariance(self.ONES, (1.0, 2.0), 1.0, 100, 4.0, diagonal=False)

    def test_is_diagonal(self):
        assert is_diagonal(IdentityCovariance(n=3))
        assert is_diagonal(SpikedFactorCovariance(n=5, spikes=[1.0]))
        assert not is_diagonal(SpikedFactorCovariance(n=5, spikes=[1.0], loadings="random"))
        assert not is_diagonal(DenseCovariance(matrix=[[1.0, 0.1], [0.1, 1.0]]))


class TestFiniteSamplePower:
    WEAK = FactorAlternative(r=1, h=[2.0])

    def test_weak_spike_at_one_hundred(self):
        result = finite_sample_power(self.WEAK, 100, 100, 3.0)
        # Sigma = I + 2 e1 e1': T mu = 100 * 101 * 108 / 102^2.
        assert result.inputs["T_mu"] - 100 == pytest.approx(100 * 101 * 108 / 102 ** 2 - 100, rel=1e-12)
        assert result.inputs["sigma2"] == pytest.approx(6.825, abs=0.01)
        assert result.power == pytest.approx(0.584, abs=3e-3)

    def test_below_bounded_spike_limit(self):
        finite = finite_sample_power(self.WEAK, 100, 100, 3.0).power
        limit = theory_power(self.WEAK, 100, 100, 3.0).power
        assert limit - finite > 0.04

    def test_overestimated_gamma4_lowers_power(self):
        known = finite_sample_power(self.WEAK, 100, 100, 3.0)
        plug_in = finite_sample_power(self.WEAK, 100, 100, 3.0, gamma4_hat=3.11)
        assert plug_in.power < known.power
        assert plug_in.inputs["gamma4_hat"] == 3.11
        assert plug_in.inputs["T_mu"] == known.inputs["T_mu"]

    def test_no_signal_is_near_size(self):
        result = finite_sample_power(FactorAlternative(r=1, h=[0.0]), 100, 100, 3.0)
        assert result.power == pytest.approx(ALPHA, abs=1e-4)
        assert finite_sample_power(None, 100, 100, 3.0).power == pytest.approx(result.power, rel=1e-12)
