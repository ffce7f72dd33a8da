"""
スペクトル推定のテスト
"""

import math

import numpy as np
import pytest

from core import analytic
from core.errors import DomainError, LengthError
from core.noise_synth import SynthesisPlan, TimeSeries, synthesize_colored_noise, synthesize_from_plan
from core.spectral import (
    PsdEstimate,
    count_segments,
    ensemble_welch,
    measure_nf,
    psd_at_beat,
    relative_rms_error,
    tone_power,
    welch_psd,
)


def _white(level):
    return lambda w: np.full_like(w, level)


def _tone(amplitude, fs=16.0, n=1000, f0=1.0, phase=0.3):
    t = np.arange(n) / fs
    return TimeSeries(sample_rate=fs, samples=amplitude * np.cos(2.0 * math.pi * f0 * t - phase))


class TestWelch:
    def test_segment_count(self):
        assert count_segments(1024, 256, 0.5) == 7
        assert count_segments(1024, 256, 0.0) == 4

    @pytest.mark.parametrize("window", ["hann", "rectangular"])
    def test_white_noise_level(self, window):
        ts = synthesize_colored_noise(_white(2.0), 1.0, 2**17, seed=5)
        estimate = welch_psd(ts, 256, window=window)
        assert estimate.freqs[0] == 0.0
        assert estimate.freqs[-1] == pytest.approx(0.5)
        assert estimate.resolution == pytest.approx(1.0 / 256)
        assert float(np.mean(estimate.values[1:-1])) == pytest.approx(2.0, rel=0.02)
        assert estimate.seed == 5

    def test_parseval(self):
        ts = synthesize_colored_noise(_white(2.0), 1.0, 2**18, seed=0)
        estimate = welch_psd(ts, 256)
        assert estimate.integrated_power() == pytest.approx(float(np.var(ts.samples)), rel=0.02)

    @pytest.mark.parametrize("amplitude", [1.0, 2.5])
    def test_bin_centred_tone_rectangular(self, amplitude):
        ts = _tone(amplitude, fs=1.0, n=4096, f0=16.0 / 256.0, phase=0.0)
        estimate = welch_psd(ts, 256, overlap=0.0, window="rectangular")
        assert estimate.integrated_power() == pytest.approx(amplitude**2 / 2.0, rel=0.01)
        assert int(np.argmax(estimate.values)) == 16

    def test_silence(self):
        ts = TimeSeries(sample_rate=1.0, samples=np.zeros(1024))
        np.testing.assert_array_equal(welch_psd(ts, 256).values, 0.0)

    def test_arguments(self):
        ts = synthesize_colored_noise(_white(1.0), 1.0, 1024, seed=0)
        with pytest.raises(DomainError):
            welch_psd(ts, 256, window="blackman")
        with pytest.raises(DomainError):
            welch_psd(ts, 256, overlap=0.95)
        with pytest.raises(LengthError):
            welch_psd(ts, 2048)

    def test_estimate_rejects_negative_values(self):
        with pytest.raises(ValueError):
            PsdEstimate(
                freqs=[0.0, 1.0], values=[1.0, -1.0], n_segments=1, window="hann", segment_len=2, overlap=0.0,
                sample_rate=2.0,
            )


class TestTonePower:
    @pytest.mark.parametrize("amplitude", [0.5, 3.0])
    def test_pure_tone(self, amplitude):
        assert tone_power(_tone(amplitude), 2.0 * math.pi) == pytest.approx(amplitude**2 / 2.0, rel=1e-12)

    @pytest.mark.parametrize("f_other", [1.0 + math.sqrt(2.0) / 3.0, math.pi / 4.0, 2.0 * math.e])
    def test_other_frequency_does_not_leak(self, f_other):
        assert tone_power(_tone(1.0, n=16000, f0=f_other), 2.0 * math.pi) <= 0.01 * 0.5

    def test_nyquist_limit(self):
        with pytest.raises(DomainError):
            tone_power(_tone(1.0), 16.0 * math.pi)
        with pytest.raises(DomainError):
            tone_power(_tone(1.0), 0.0)

    def test_shorter_than_one_period(self):
        with pytest.raises(LengthError):
            tone_power(_tone(1.0, n=10), 2.0 * math.pi)


class TestPsdAtBeat:
    def _estimate(self, window):
        freqs = np.arange(129) / 256.0 * 16.0
        values = 3.0 + 0.5 * freqs
        values[16] += 1e6  # トーンのビン
        values[15] += 1e3 if window == "hann" else 0.0
        values[17] += 1e3 if window == "hann" else 0.0
        return PsdEstimate(
            freqs=freqs, values=values, n_segments=10, window=window, segment_len=256, overlap=0.5, sample_rate=16.0
        )

    @pytest.mark.parametrize("window", ["hann", "rectangular"])
    def test_interpolates_around_tone(self, window):
        assert psd_at_beat(self._estimate(window), 2.0 * math.pi) == pytest.approx(3.5, rel=1e-12)

    def test_needs_neighbouring_bins(self):
        with pytest.raises(LengthError):
            psd_at_beat(self._estimate("hann"), 2.0 * math.pi * 7.9)


class TestMeasureNf:
    def test_matches_analytic(self, amplified_scenario):
        s = amplified_scenario.with_overrides(theta_l=0.0)
        plan = SynthesisPlan.for_scenario(s, n_samples=2**18)
        result = measure_nf(synthesize_from_plan(plan, seed=21), s, segment_len=256)
        assert result.method == "monte-carlo"
        assert result.nf_error_db == pytest.approx(10.0 / math.log(10.0) / math.sqrt(4.0 * 2047))
        assert result.nf_db == pytest.approx(analytic.noise_figure(s).nf_db, abs=0.25)

    def test_zero_signal(self, default_scenario):
        s = default_scenario.with_overrides(alpha_s_mag=0.0)
        plan = SynthesisPlan.for_scenario(s, n_samples=2**14)
        with pytest.raises(DomainError):
            measure_nf(synthesize_from_plan(plan, seed=0), s, segment_len=256)

    def test_too_few_segments(self, default_scenario):
        plan = SynthesisPlan.for_scenario(default_scenario, n_samples=4096)
        with pytest.raises(LengthError):
            measure_nf(synthesize_from_plan(plan, seed=0), default_scenario, segment_len=256)


class TestEnsemble:
    def test_average_over_seeds(self):
        estimate = ensemble_welch(_white(2.0), 1.0, 2**12, range(20), segment_len=256, max_workers=2)
        assert estimate.n_segments == 20 * count_segments(2**12, 256, 0.5)
        assert relative_rms_error(estimate, _white(2.0)) < 0.1

    def test_needs_seeds(self):
        with pytest.raises(DomainError):
            ensemble_welch(_white(1.0), 1.0, 1024, [], segment_len=256)

    def test_relative_error_of_exact_estimate(self):
        freqs = np.linspace(0.0, 0.5, 65)
        estimate = PsdEstimate(
            freqs=freqs, values=np.full(65, 2.0), n_segments=1, window="hann", segment_len=128, overlap=0.5,
            sample_rate=1.0,
        )
        assert relative_rms_error(estimate, _white(2.0)) == pytest.approx(0.0, abs=1e-15)
