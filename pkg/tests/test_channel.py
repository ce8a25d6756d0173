"""Channel synthesis: link budgets, Rician laws, DFT, and the cascade."""

from __future__ import annotations

import numpy as np
import pytest

from csisense.channel import (
    SPEED_OF_LIGHT,
    ComplexGaussianVector,
    HypothesisPair,
    LinkFading,
    LinkGeometry,
    cascaded_distribution,
    cascaded_variance_profile,
    dft_of_distribution,
    friis_direct_amplitude,
    friis_scattered_amplitude,
    hypothesis_models,
    k_factor_from_amplitude,
    los_phase,
    rician_time_distribution,
)


def _geom(**kw) -> LinkGeometry:
    base = dict(
        tx_power=1.0, tx_gain=1.0, rx_gain=1.0, carrier_freq=SPEED_OF_LIGHT,
        dist_tr=1.0, dist_ts=1.0, dist_sr=1.0, rcs=1.0,
    )
    base.update(kw)
    return LinkGeometry(**base)


class TestLinkGeometry:
    def test_wavelength_is_c_over_fc(self):
        g = _geom(carrier_freq=2.4e9)
        assert g.wavelength == SPEED_OF_LIGHT / 2.4e9

    def test_rejects_nonpositive_distance(self):
        with pytest.raises(ValueError):
            _geom(dist_tr=0.0)

    def test_rejects_negative_rcs(self):
        with pytest.raises(ValueError):
            _geom(rcs=-1.0)


class TestFriisDirect:
    """Direct-path amplitude sqrt(P*G_T*G_R)*wavelength/(4*pi*d)."""

    def test_unit_configuration(self):
        # wavelength 4*pi makes every factor cancel
        g = _geom(carrier_freq=SPEED_OF_LIGHT / (4 * np.pi))
        assert friis_direct_amplitude(g) == pytest.approx(1.0, rel=1e-12)

    def test_inverse_distance(self):
        g = _geom(carrier_freq=SPEED_OF_LIGHT / (4 * np.pi), dist_tr=2.0)
        assert friis_direct_amplitude(g) == pytest.approx(0.5, rel=1e-12)

    def test_sqrt_of_power(self):
        g = _geom(carrier_freq=SPEED_OF_LIGHT / (4 * np.pi), tx_power=4.0)
        assert friis_direct_amplitude(g) == pytest.approx(2.0, rel=1e-12)

    def test_scaling_law_exact(self):
        """Amplitude ratio between two distances is exactly d2/d1."""
        a1 = friis_direct_amplitude(_geom(dist_tr=3.0))
        a2 = friis_direct_amplitude(_geom(dist_tr=7.5))
        assert a1 / a2 == pytest.approx(7.5 / 3.0, rel=1e-12)


class TestFriisScattered:
    """Two-leg amplitude with the cross-section under the square root."""

    def test_unit_configuration(self):
        lam = (4 * np.pi) ** 1.5
        g = _geom(carrier_freq=SPEED_OF_LIGHT / lam)
        assert friis_scattered_amplitude(g) == pytest.approx(1.0, rel=1e-12)

    def test_sqrt_of_rcs(self):
        lam = (4 * np.pi) ** 1.5
        g = _geom(carrier_freq=SPEED_OF_LIGHT / lam, rcs=4.0)
        assert friis_scattered_amplitude(g) == pytest.approx(2.0, rel=1e-12)

    def test_inverse_distance_one_leg(self):
        lam = (4 * np.pi) ** 1.5
        g = _geom(carrier_freq=SPEED_OF_LIGHT / lam, dist_ts=2.0)
        assert friis_scattered_amplitude(g) == pytest.approx(0.5, rel=1e-12)

    def test_scaling_law_both_legs(self):
        a1 = friis_scattered_amplitude(_geom(dist_ts=2.0, dist_sr=5.0))
        a2 = friis_scattered_amplitude(_geom(dist_ts=4.0, dist_sr=10.0))
        assert a1 / a2 == pytest.approx(4.0, rel=1e-12)


class TestKFactorFromAmplitude:
    def test_unit_amplitude_half_variance(self):
        assert k_factor_from_amplitude(1.0, 0.5) == pytest.approx(1.0)

    def test_quadratic_in_amplitude(self):
        assert k_factor_from_amplitude(2.0, 0.5) == pytest.approx(4.0)

    def test_zero_amplitude_is_rayleigh(self):
        assert k_factor_from_amplitude(0.0, 1.0) == 0.0

    def test_zero_variance_rejected(self):
        with pytest.raises(ValueError):
            k_factor_from_amplitude(1.0, 0.0)


class TestLosPhase:
    def test_static_link_is_zero(self):
        fading = LinkFading(k_factor=1.0)
        n = np.arange(32)
        np.testing.assert_array_equal(los_phase(n, fading, 2.4e9), np.zeros(32))

    def test_doppler_winds_linearly(self):
        """f_D*T_s = 1/N gives theta[n] = 2*pi*n/N."""
        n_dim = 16
        fading = LinkFading(k_factor=1.0, doppler=1.0 / n_dim, sample_period=1.0)
        n = np.arange(n_dim)
        np.testing.assert_allclose(
            los_phase(n, fading, 2.4e9), 2 * np.pi * n / n_dim, atol=1e-12
        )

    def test_delay_gives_constant_offset(self):
        """f_c*tau0 = 0.5 shifts every sample by -pi."""
        fading = LinkFading(k_factor=1.0, los_delay=0.5 / 2.4e9)
        theta = los_phase(np.arange(8), fading, 2.4e9)
        np.testing.assert_allclose(theta, -np.pi, atol=1e-9)


class TestRicianTimeDistribution:
    def test_rayleigh_limit(self):
        dist = rician_time_distribution(LinkFading(k_factor=0.0), 2.4e9, 8)
        np.testing.assert_array_equal(dist.mean, np.zeros(8))
        assert dist.iso_var == 1.0

    def test_equal_power_split(self):
        """K=1 with a static link: mean 1/sqrt(2), diffuse variance 1/2."""
        dist = rician_time_distribution(LinkFading(k_factor=1.0), 2.4e9, 4)
        np.testing.assert_allclose(dist.mean, np.full(4, 1 / np.sqrt(2)), rtol=1e-12)
        assert dist.iso_var == pytest.approx(0.5)

    def test_los_dominant_limit(self):
        dist = rician_time_distribution(LinkFading(k_factor=1e6), 2.4e9, 4)
        assert dist.iso_var == pytest.approx(1e-6, rel=1e-5)
        np.testing.assert_allclose(np.abs(dist.mean), 1.0, atol=1e-5)

    def test_unit_power_for_any_k(self):
        """|mean[n]|^2 + iso_var == 1 regardless of K, Doppler, or offsets."""
        rng = np.random.default_rng(42)
        for _ in range(20):
            fading = LinkFading(
                k_factor=float(rng.uniform(0, 50)),
                doppler=float(rng.uniform(-5e3, 5e3)),
                los_delay=float(rng.uniform(0, 1e-6)),
                phase_offset=float(rng.uniform(-np.pi, np.pi)),
                sample_period=1e-6,
            )
            dist = rician_time_distribution(fading, 2.4e9, 16)
            np.testing.assert_allclose(
                np.abs(dist.mean) ** 2 + dist.iso_var, 1.0, rtol=1e-12
            )

    def test_negative_k_rejected(self):
        with pytest.raises(ValueError):
            LinkFading(k_factor=-0.1)


class TestDftOfDistribution:
    def test_rayleigh_variance_scales_by_n(self):
        time = rician_time_distribution(LinkFading(k_factor=0.0), 2.4e9, 256)
        freq = dft_of_distribution(time)
        np.testing.assert_array_equal(freq.mean, np.zeros(256))
        assert freq.iso_var == 256.0

    def test_constant_mean_hits_dc_bin(self):
        c = 0.3 - 0.4j
        time = ComplexGaussianVector(np.full(8, c), 0.25)
        freq = dft_of_distribution(time)
        np.testing.assert_allclose(freq.mean[0], 8 * c, rtol=1e-12)
        np.testing.assert_allclose(freq.mean[1:], 0, atol=1e-12)
        assert freq.iso_var == pytest.approx(8 * 0.25)

    def test_matches_direct_sum_oracle(self):
        """General fractional-Doppler mean against an O(N^2) DFT sum."""
        n_dim = 64
        fading = LinkFading(
            k_factor=4.0, doppler=2.7 / (n_dim * 1e-6), los_delay=1e-9,
            phase_offset=0.3, sample_period=1e-6,
        )
        time = rician_time_distribution(fading, 2.4e9, n_dim)
        freq = dft_of_distribution(time)
        oracle = np.array(
            [
                np.sum(
                    time.mean * np.exp(-2j * np.pi * k * np.arange(n_dim) / n_dim)
                )
                for k in range(n_dim)
            ]
        )
        np.testing.assert_allclose(freq.mean, oracle, rtol=1e-10, atol=1e-10)

    def test_sampling_consistency(self):
        """Sample moments of DFT'd draws match the analytic law within 3 SE."""
        rng = np.random.default_rng(42)
        n_dim, m = 64, 20000
        fading = LinkFading(k_factor=3.0, doppler=1.5e3, sample_period=1e-6)
        time = rician_time_distribution(fading, 2.4e9, n_dim)
        freq = dft_of_distribution(time)
        noise = (
            rng.standard_normal((m, n_dim)) + 1j * rng.standard_normal((m, n_dim))
        ) * np.sqrt(time.iso_var / 2)
        draws = np.fft.fft(time.mean + noise, axis=1)
        sample_mean = draws.mean(axis=0)
        # per-coordinate real/imag std of the sample mean
        se_mean = np.sqrt(freq.iso_var / 2 / m)
        assert np.max(np.abs(sample_mean.real - freq.mean.real)) < 5 * se_mean
        assert np.max(np.abs(sample_mean.imag - freq.mean.imag)) < 5 * se_mean
        sample_var = np.mean(np.abs(draws - freq.mean) ** 2)
        se_var = freq.iso_var / np.sqrt(m * n_dim)
        assert abs(sample_var - freq.iso_var) < 3 * se_var


class TestCascadedDistribution:
    def test_zero_mean_unit_variance_product(self):
        a = ComplexGaussianVector(np.zeros(1, dtype=complex), 1.0)
        casc = cascaded_distribution(a, a)
        assert casc.mean[0] == 0
        assert casc.iso_var == pytest.approx(1.0)

    def test_unit_mean_product(self):
        """mu1 = mu2 = 1, sigma1^2 = sigma2^2 = 1: variance 1 + 1 + 1 = 3."""
        a = ComplexGaussianVector(np.ones(1, dtype=complex), 1.0)
        casc = cascaded_distribution(a, a)
        assert casc.mean[0] == 1.0 + 0j
        assert casc.iso_var == pytest.approx(3.0)

    def test_monte_carlo_product_moments(self):
        """10^6 paired draws of x1*x2 land on the analytic moments within 1%."""
        rng = np.random.default_rng(42)
        mu1, mu2 = 0.6 + 0.8j, 1.0 + 0j
        v1, v2 = 0.5, 0.25
        m = 1_000_000
        x1 = mu1 + (rng.standard_normal(m) + 1j * rng.standard_normal(m)) * np.sqrt(v1 / 2)
        x2 = mu2 + (rng.standard_normal(m) + 1j * rng.standard_normal(m)) * np.sqrt(v2 / 2)
        z = x1 * x2
        casc = cascaded_distribution(
            ComplexGaussianVector(np.array([mu1]), v1),
            ComplexGaussianVector(np.array([mu2]), v2),
        )
        assert abs(z.mean() - casc.mean[0]) / abs(casc.mean[0]) < 0.01
        sample_var = np.mean(np.abs(z - casc.mean[0]) ** 2)
        assert abs(sample_var - casc.iso_var) / casc.iso_var < 0.01

    def test_variance_profile_matches_formula(self):
        rng = np.random.default_rng(7)
        mu1 = rng.standard_normal(6) + 1j * rng.standard_normal(6)
        mu2 = rng.standard_normal(6) + 1j * rng.standard_normal(6)
        a = ComplexGaussianVector(mu1, 0.7)
        b = ComplexGaussianVector(mu2, 1.3)
        profile = cascaded_variance_profile(a, b)
        expected = 0.7 * 1.3 + 0.7 * np.abs(mu2) ** 2 + 1.3 * np.abs(mu1) ** 2
        np.testing.assert_allclose(profile, expected, rtol=1e-12)
        casc = cascaded_distribution(a, b)
        assert casc.iso_var == pytest.approx(float(np.mean(expected)))

    def test_dimension_mismatch_rejected(self):
        a = ComplexGaussianVector(np.zeros(3, dtype=complex), 1.0)
        b = ComplexGaussianVector(np.zeros(4, dtype=complex), 1.0)
        with pytest.raises(ValueError):
            cascaded_distribution(a, b)


class TestHypothesisModels:
    def test_vanishing_scatterer_collapses_hypotheses(self):
        tr = ComplexGaussianVector(np.array([1 + 1j, 2 - 1j]), 0.5)
        casc = ComplexGaussianVector(np.zeros(2, dtype=complex), 0.0)
        pair = hypothesis_models(tr, casc)
        np.testing.assert_array_equal(pair.h0.mean, pair.h1.mean)
        assert pair.h0.iso_var == pair.h1.iso_var

    def test_variance_additivity(self):
        tr = ComplexGaussianVector(np.zeros(2, dtype=complex), 2.0)
        casc = ComplexGaussianVector(np.zeros(2, dtype=complex), 3.0)
        assert hypothesis_models(tr, casc).h1.iso_var == 5.0

    def test_mean_additivity(self):
        rng = np.random.default_rng(3)
        tr_mean = rng.standard_normal(5) + 1j * rng.standard_normal(5)
        casc_mean = rng.standard_normal(5) + 1j * rng.standard_normal(5)
        pair = hypothesis_models(
            ComplexGaussianVector(tr_mean, 1.0),
            ComplexGaussianVector(casc_mean, 0.5),
        )
        np.testing.assert_allclose(pair.h1.mean - pair.h0.mean, casc_mean, rtol=1e-12)

    def test_dimension_mismatch_rejected(self):
        with pytest.raises(ValueError):
            HypothesisPair(
                h0=ComplexGaussianVector(np.zeros(2, dtype=complex), 1.0),
                h1=ComplexGaussianVector(np.zeros(3, dtype=complex), 1.0),
            )
