"""
解析モデルのテスト
"""

import math

import numpy as np
import pytest

from core import analytic
from core.errors import DomainError
from core.scenario import Scenario, derive


def _scenario(**changes):
    values = dict(omega_s=101.0, omega_l=100.0, alpha_s_mag=1.0, epsilon_l=1.0, r=0.0, q=1.0, bandwidth_B=1.0)
    values.update(changes)
    return Scenario(**values)


def _finite_gain_nf(s: Scenario) -> float:
    xi_l = s.q * s.omega_l / s.omega_s
    gain = math.exp(2.0 * s.r)
    return 10.0 * math.log10((1.0 + xi_l * (gain - 1.0)) / (s.q * gain))


class TestNoiseFigure:
    @pytest.mark.parametrize("r", [0.0, 0.3, 1.0, 2.5])
    @pytest.mark.parametrize("q", [0.25, 0.5, 1.0])
    def test_finite_gain_formula(self, r, q):
        s = _scenario(r=r, q=q)
        result = analytic.noise_figure(s)
        assert result.nf_db == pytest.approx(_finite_gain_nf(s), abs=1e-12)
        assert result.method == "analytic"

    @pytest.mark.parametrize("q", [0.25, 0.5, 0.9])
    def test_unamplified_matches_regular_detector(self, q):
        s = _scenario(q=q)
        assert analytic.noise_figure(s).nf_db == pytest.approx(analytic.noise_figure_regular(q), abs=1e-12)
        assert analytic.noise_figure_regular(q) == pytest.approx(10.0 * math.log10(1.0 / q))

    @pytest.mark.parametrize("r", [0.5, 2.5, 5.0])
    def test_ideal_detector_near_degenerate_is_noiseless(self, r):
        s = Scenario(omega_s=1.0 + 1e-14, omega_l=1.0, alpha_s_mag=1.0, epsilon_l=1.0, r=r, q=1.0, bandwidth_B=1.0)
        assert abs(analytic.noise_figure(s).nf_db) <= 1e-12

    def test_high_gain_limit_is_carrier_ratio(self):
        s = _scenario(r=12.0, q=1.0)
        assert analytic.noise_figure(s).nf_db == pytest.approx(10.0 * math.log10(100.0 / 101.0), abs=1e-9)

    def test_forty_five_db_gain(self, default_scenario):
        s = default_scenario.with_overrides(r=4.5 * math.log(10.0) / 2.0, q=0.5)
        assert analytic.noise_figure(s).nf_db == pytest.approx(1.4e-4, abs=5e-6)
        assert analytic.noise_figure(s.with_overrides(r=2.0 * math.log(10.0) / 2.0)).nf_db == pytest.approx(0.0432, abs=5e-5)

    @pytest.mark.parametrize("r", [0.0, 0.5, 2.0])
    def test_monotone_in_efficiency(self, r):
        nf = [analytic.noise_figure(_scenario(r=r, q=q)).nf_db for q in (0.1, 0.25, 0.5, 0.75, 1.0)]
        assert all(a >= b for a, b in zip(nf, nf[1:]))

    @pytest.mark.parametrize("q", [0.25, 0.5, 0.9])
    def test_monotone_in_gain(self, q):
        nf = [analytic.noise_figure(_scenario(r=r, q=q)).nf_db for r in (0.0, 0.25, 0.5, 1.0, 2.0, 4.0)]
        assert all(a >= b for a, b in zip(nf, nf[1:]))

    def test_input_snr(self, default_scenario):
        s = default_scenario.with_overrides(alpha_s_mag=2.0)
        assert analytic.snr_in(s) == pytest.approx(2.0, rel=1e-9)
        assert analytic.snr_in(s.with_overrides(bandwidth_B=2.0)) == pytest.approx(1.0, rel=1e-9)

    def test_independent_of_signal_phase(self):
        a = analytic.noise_figure(_scenario(r=1.0, q=0.5, theta_s=0.0)).nf_db
        b = analytic.noise_figure(_scenario(r=1.0, q=0.5, theta_s=2.1)).nf_db
        assert a == pytest.approx(b, abs=1e-12)

    def test_zero_signal_has_no_noise_figure(self):
        with pytest.raises(DomainError):
            analytic.noise_figure(_scenario(alpha_s_mag=0.0))

    @pytest.mark.parametrize("xi", [0.0, -0.5, 1.5])
    def test_regular_detector_domain(self, xi):
        with pytest.raises(DomainError):
            analytic.noise_figure_regular(xi)


class TestNoiseFigureResult:
    def test_from_snr(self):
        result = analytic.NoiseFigureResult.from_snr(10.0, 5.0, method="oracle")
        assert result.nf_db == pytest.approx(10.0 * math.log10(2.0))

    def test_inconsistent_values_rejected(self):
        with pytest.raises(ValueError):
            analytic.NoiseFigureResult(snr_in=10.0, snr_out=5.0, nf_db=1.0, method="analytic")

    def test_non_positive_snr(self):
        with pytest.raises(DomainError):
            analytic.NoiseFigureResult.from_snr(0.0, 1.0, method="analytic")


class TestBeat:
    def test_coefficients(self):
        s = _scenario(r=0.5, theta_l=0.4, q=0.8, epsilon_l=2.0, alpha_s_mag=3.0)
        scale = derive(s).detector_scale * s.alpha_s_mag
        cos_amp, sin_amp = analytic.beat_coefficients(s)
        assert cos_amp == pytest.approx(math.sqrt(2.0) * scale * math.exp(0.5) * math.cos(0.4))
        assert sin_amp == pytest.approx(-math.sqrt(2.0) * scale * math.exp(-0.5) * math.sin(0.4))

    def test_signal_is_vectorised(self):
        s = _scenario(r=0.5, theta_l=0.4, theta_s=0.3)
        t = np.linspace(0.0, 3.0, 7)
        values = analytic.beat_signal(t, s)
        assert values.shape == t.shape
        assert values[2] == pytest.approx(analytic.beat_signal(float(t[2]), s))

    def test_signal_at_origin(self):
        s = _scenario(r=0.5)
        assert analytic.beat_signal(0.0, s) == pytest.approx(analytic.beat_coefficients(s)[0])

    def test_output_power_is_time_average(self):
        s = _scenario(r=0.7, theta_l=0.9, theta_s=0.2)
        period = 2.0 * math.pi / derive(s).Omega
        t = np.linspace(0.0, period, 4096, endpoint=False)
        mean_square = float(np.mean(analytic.beat_signal(t, s) ** 2))
        assert analytic.output_power(s) == pytest.approx(mean_square, rel=1e-12)

    def test_amplified_and_deamplified_quadratures(self, default_scenario):
        s = default_scenario.with_overrides(r=math.log(2.0))
        cos_amp, sin_amp = analytic.beat_coefficients(s)
        assert cos_amp == pytest.approx(2.0 * math.sqrt(2.0), rel=1e-9)
        assert sin_amp == pytest.approx(0.0, abs=1e-15)
        cos_amp, sin_amp = analytic.beat_coefficients(s.with_overrides(theta_l=math.pi / 2))
        assert abs(sin_amp) == pytest.approx(math.sqrt(2.0) / 2.0, rel=1e-9)
        assert cos_amp == pytest.approx(0.0, abs=1e-15)

    @pytest.mark.parametrize("theta_l", [0.0, 1.1, 2.5])
    def test_plain_heterodyne_amplitude(self, default_scenario, theta_l):
        cos_amp, sin_amp = analytic.beat_coefficients(default_scenario.with_overrides(theta_l=theta_l))
        assert math.hypot(cos_amp, sin_amp) == pytest.approx(math.sqrt(2.0), rel=1e-9)

    def test_output_power_values(self, default_scenario):
        s = default_scenario.with_overrides(r=math.log(2.0))
        assert analytic.output_power(s) == pytest.approx(4.0, rel=1e-9)
        assert analytic.output_power(s.with_overrides(theta_l=math.pi / 2)) == pytest.approx(0.25, rel=1e-9)
        for theta_s in (0.4, 1.9, 3.0):
            assert analytic.output_power(s.with_overrides(theta_s=theta_s)) == analytic.output_power(s)

    @pytest.mark.parametrize("r", [0.0, 0.5, 2.0])
    def test_quadrature_power_ratio(self, r):
        p_cos = analytic.output_power(_scenario(r=r, theta_l=0.0))
        p_sin = analytic.output_power(_scenario(r=r, theta_l=math.pi / 2))
        assert p_cos / p_sin == pytest.approx(math.exp(4.0 * r), rel=1e-12)


class TestSpectralFactor:
    def test_worked_point(self, f_example_scenario):
        expected = 200.0 + 2.0 * math.sqrt(2.0) * math.sqrt(9900.0)
        assert expected == pytest.approx(481.42494, abs=1e-5)
        assert analytic.spectral_factor_F(10.0, f_example_scenario) == pytest.approx(expected, abs=1e-9)

    def test_even_in_frequency(self, f_example_scenario):
        omega = np.linspace(0.0, 99.0, 50)
        np.testing.assert_allclose(
            analytic.spectral_factor_F(omega, f_example_scenario),
            analytic.spectral_factor_F(-omega, f_example_scenario),
            rtol=1e-14,
        )

    def test_outside_band_drops_root_term(self, f_example_scenario):
        assert analytic.spectral_factor_F(150.0, f_example_scenario) == pytest.approx(300.0)

    def test_strict_domain(self, f_example_scenario):
        with pytest.raises(DomainError):
            analytic.spectral_factor_F(150.0, f_example_scenario, strict=True)
        with pytest.raises(DomainError):
            analytic.noise_psd(np.array([1.0, -120.0]), f_example_scenario, strict=True)


class TestNoisePsd:
    def test_shot_noise_floor_without_squeezing(self):
        s = _scenario(q=0.5, epsilon_l=2.0)
        expected = 2.0 * derive(s).shot_level
        assert analytic.noise_psd(3.0, s) == pytest.approx(expected)
        assert analytic.PsdModel(scenario=s).shot_floor == pytest.approx(expected)

    def test_exact_form_reduces_to_baseband_at_dc(self):
        s = _scenario(r=1.3, theta_l=0.4, q=0.7)
        assert analytic.noise_psd(0.0, s) == pytest.approx(analytic.baseband_noise_psd(s), rel=1e-12)

    def test_baseband_at_zero_phase_uses_gain(self):
        s = _scenario(r=1.0, q=0.6)
        params = derive(s)
        expected = 2.0 * params.shot_level * (1.0 + params.xi_l * (params.gain_G - 1.0))
        assert analytic.baseband_noise_psd(s) == pytest.approx(expected, rel=1e-12)

    def test_high_gain_form(self):
        s = _scenario(r=3.0, theta_l=0.5)
        params = derive(s)
        expected = 2.0 * params.shot_level * (1.0 + params.xi_l * params.gain_G * math.cos(0.5) ** 2)
        assert analytic.noise_psd(1.0, s, form="high_gain") == pytest.approx(expected)

    def test_high_gain_values(self, default_scenario):
        s = default_scenario.with_overrides(r=math.log(2.0))
        assert analytic.noise_psd(1e-3, s, form="high_gain") == pytest.approx(10.0, rel=1e-9)
        s = s.with_overrides(theta_l=math.pi / 2)
        assert analytic.noise_psd(1e-3, s, form="high_gain") == pytest.approx(2.0, rel=1e-9)

    @pytest.mark.parametrize("r", [0.0, 0.4, 1.5, 4.0])
    def test_never_below_shot_floor_in_amplified_quadrature(self, f_example_scenario, r):
        s = f_example_scenario.with_overrides(r=r, q=0.6)
        omega = np.linspace(-99.0, 99.0, 41)
        floor = analytic.PsdModel(scenario=s).shot_floor
        assert np.all(analytic.noise_psd(omega, s) >= floor)

    @pytest.mark.parametrize("r", [6.0, 7.0, 8.0])
    @pytest.mark.parametrize("theta_l", [0.0, 0.3])
    def test_high_gain_consistency(self, default_scenario, r, theta_l):
        s = default_scenario.with_overrides(r=r, theta_l=theta_l)
        for omega in (0.0, 1e-3):
            exact = analytic.noise_psd(omega, s)
            approx = analytic.noise_psd(omega, s, form="high_gain")
            assert abs(exact - approx) / exact <= 10.0 * math.exp(-2.0 * r)

    def test_high_gain_form_tracks_exact_at_large_gain(self):
        s = _scenario(r=5.0, theta_l=0.3)
        exact = analytic.noise_psd(1.0, s)
        approx = analytic.noise_psd(1.0, s, form="high_gain")
        assert approx == pytest.approx(exact, rel=1e-3)

    def test_array_evaluation(self, f_example_scenario):
        omega = np.array([-50.0, 0.0, 50.0])
        values = analytic.noise_psd(omega, f_example_scenario)
        assert values.shape == (3,)
        assert values[0] == pytest.approx(values[2])

    def test_unknown_form(self, f_example_scenario):
        with pytest.raises(DomainError):
            analytic.noise_psd(1.0, f_example_scenario, form="lorentzian")

    def test_snr_out(self):
        s = _scenario(r=0.5, q=0.5, bandwidth_B=2.0)
        expected = analytic.output_power(s) / (analytic.baseband_noise_psd(s) * 2.0)
        assert analytic.snr_out(s) == pytest.approx(expected)

    def test_psd_model_frequency_grid(self, f_example_scenario):
        model = analytic.PsdModel(scenario=f_example_scenario)
        freqs = np.array([0.5, 1.0, 2.0])
        np.testing.assert_allclose(
            model.evaluate_frequency(freqs), analytic.noise_psd(2.0 * np.pi * freqs, f_example_scenario)
        )
        assert model(3.0) == pytest.approx(analytic.noise_psd(3.0, f_example_scenario))
