"""
QHetSim 時系列合成

差動光電流の記録を合成する。決定論的なビート信号に、目標スペクトル χ(ω) を
持つガウス雑音（白色ショット雑音＋有色の過剰雑音）を重ねる。

乱数は Philox（カウンタ型64ビット）を SeedSequence(entropy=seed, spawn_key=(stream,))
で初期化し、(seed, ストリーム番号) ごとに独立な系列とする。
"""

import logging
import math
from typing import Callable, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from scipy import signal

from .analytic import PsdModel, beat_coefficients, beat_signal
from .errors import DomainError, LengthError
from .scenario import Scenario, derive

logger = logging.getLogger(__name__)

PsdFunction = Callable[[np.ndarray], np.ndarray]

MIN_FFT_SIZE = 256
MAX_SEED = 2**64 - 1
NOISE_STREAM = 0

# 既定のサンプリング: fs = 16 × ビート周波数（Ω が 256 点セグメントの16番ビン中心に乗る）
DEFAULT_OVERSAMPLE = 16


class TimeSeries(BaseModel):
    """サンプリングされた差動光電流記録"""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    sample_rate: float = Field(..., gt=0)
    samples: np.ndarray
    seed: int = Field(default=0, ge=0, le=MAX_SEED)
    scenario_hash: str = ""
    beat_omega: Optional[float] = Field(default=None, gt=0, description="記録に含まれるビート角周波数 Ω")

    @field_validator("samples", mode="before")
    @classmethod
    def _to_array(cls, value):
        array = np.array(value, dtype=np.float64)
        array.setflags(write=False)
        return array

    @model_validator(mode="after")
    def _check_samples(self) -> "TimeSeries":
        if self.samples.ndim != 1 or self.samples.size < 2:
            raise LengthError(f"時系列は長さ2以上の1次元配列が必要です: shape={self.samples.shape}")
        if not np.all(np.isfinite(self.samples)):
            raise ValueError("時系列に有限でない値が含まれています")
        return self

    def __len__(self) -> int:
        return int(self.samples.size)

    @property
    def duration(self) -> float:
        return self.samples.size / self.sample_rate

    def times(self) -> np.ndarray:
        return np.arange(self.samples.size) / self.sample_rate

    def with_samples(self, samples: np.ndarray) -> "TimeSeries":
        """来歴を保ったままサンプルを差し替える"""
        return TimeSeries(
            sample_rate=self.sample_rate,
            samples=samples,
            seed=self.seed,
            scenario_hash=self.scenario_hash,
            beat_omega=self.beat_omega,
        )


def next_power_of_two(n: int) -> int:
    return 1 << max(int(n) - 1, 1).bit_length()


class SynthesisPlan(BaseModel):
    """合成計画（記録長・サンプリング周波数・FFTブロック長・目標PSD・ビート）"""

    model_config = ConfigDict(frozen=True)

    duration: float = Field(..., gt=0)
    fs: float = Field(..., gt=0)
    n_fft: int = Field(..., ge=MIN_FFT_SIZE)
    psd: PsdModel
    beat_omega: float = Field(..., gt=0)
    beat_cos: float = 0.0
    beat_sin: float = 0.0
    beat_phase: float = 0.0

    @model_validator(mode="after")
    def _check_plan(self) -> "SynthesisPlan":
        if self.n_fft & (self.n_fft - 1):
            raise ValueError(f"n_fft は2のべき乗が必要です: {self.n_fft}")
        if not self.fs > 4.0 * self.beat_omega / (2.0 * math.pi):
            raise ValueError(f"fs はビート周波数の4倍を超える必要があります: fs={self.fs}, Ω={self.beat_omega}")
        if self.n_fft < self.n_samples:
            raise ValueError(f"n_fft が記録長より短いです: n_fft={self.n_fft}, n={self.n_samples}")
        return self

    @property
    def n_samples(self) -> int:
        return int(round(self.duration * self.fs))

    @classmethod
    def for_scenario(
        cls,
        scenario: Scenario,
        duration: Optional[float] = None,
        n_samples: Optional[int] = None,
        fs: Optional[float] = None,
        oversample: int = DEFAULT_OVERSAMPLE,
    ) -> "SynthesisPlan":
        """シナリオから合成計画を作る

        fs 未指定なら oversample × ビート周波数。記録長は duration か n_samples で指定する。
        """
        omega = derive(scenario).Omega
        if fs is None:
            fs = oversample * omega / (2.0 * math.pi)
        if duration is None:
            if n_samples is None:
                raise DomainError("duration か n_samples のどちらかが必要です")
            duration = n_samples / fs
        n = int(round(duration * fs))
        if n < 2:
            raise LengthError(f"記録長が短すぎます: {n} サンプル")
        cos_amp, sin_amp = beat_coefficients(scenario)
        return cls(
            duration=duration,
            fs=fs,
            n_fft=max(MIN_FFT_SIZE, next_power_of_two(n)),
            psd=PsdModel(scenario=scenario, form="exact"),
            beat_omega=omega,
            beat_cos=cos_amp,
            beat_sin=sin_amp,
            beat_phase=scenario.phase,
        )


def rng_for(seed: int, stream: int = NOISE_STREAM) -> np.random.Generator:
    """(seed, ストリーム番号) に対応する Philox 乱数生成器"""
    if not 0 <= seed <= MAX_SEED:
        raise DomainError(f"seed は64ビット非負整数が必要です: {seed}")
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy=seed, spawn_key=(stream,))))


def psd_on_grid(psd: PsdFunction, freqs: np.ndarray) -> np.ndarray:
    if isinstance(psd, PsdModel):
        values = psd.evaluate_frequency(freqs)
    else:
        values = np.asarray(psd(2.0 * np.pi * freqs), dtype=float)
    values = np.broadcast_to(values, freqs.shape).astype(float)
    if not np.all(np.isfinite(values)):
        raise DomainError("PSD が有限でない値を含みます")
    if np.any(values < 0):
        raise DomainError(f"PSD が負の値を含みます: min={values.min():.3e}")
    return values


def synthesize_colored_noise(
    psd: PsdFunction, fs: float, n: int, seed: int, stream: int = NOISE_STREAM
) -> TimeSeries:
    """目標片側PSDを持つゼロ平均ガウス雑音を周波数領域で合成する

    rfft 格子の各ビンに独立な複素ガウス値 √(S·fs·N)/2·(g1 + i·g2) を置き、
    DC と Nyquist は実数 √(S·fs·N/2)·g とする（全ビンで E|X_k|² = S·fs·N/2）。
    N = 2のべき乗のブロック長で合成して先頭 n 点を返す。

    Args:
        psd: 角周波数 ω の片側PSD（PsdModel または ω 配列を受ける関数）
        fs: サンプリング周波数
        n: サンプル数
        seed: 乱数シード
        stream: 乱数ストリーム番号

    Returns:
        TimeSeries: 合成した雑音記録

    Raises:
        DomainError: 格子上で PSD が負または非有限
    """
    if fs <= 0:
        raise DomainError(f"fs は正が必要です: {fs}")
    if n < 2:
        raise LengthError(f"サンプル数は2以上が必要です: {n}")
    n_fft = max(MIN_FFT_SIZE, next_power_of_two(n))
    freqs = np.fft.rfftfreq(n_fft, d=1.0 / fs)
    target = psd_on_grid(psd, freqs)

    rng = rng_for(seed, stream)
    gauss = rng.standard_normal((2, freqs.size))
    amplitude = np.sqrt(target * fs * n_fft)
    spectrum = 0.5 * amplitude * (gauss[0] + 1j * gauss[1])
    # DC と Nyquist は実数ビン
    spectrum[0] = amplitude[0] * gauss[0, 0] / math.sqrt(2.0)
    spectrum[-1] = amplitude[-1] * gauss[0, -1] / math.sqrt(2.0)

    samples = np.fft.irfft(spectrum, n=n_fft)[:n]
    logger.debug(f"有色雑音合成: n={n}, n_fft={n_fft}, fs={fs}, seed={seed}")
    return TimeSeries(sample_rate=fs, samples=samples, seed=seed)


def synthesize_from_plan(plan: SynthesisPlan, seed: int) -> TimeSeries:
    """合成計画から光電流記録を合成する（ビート信号＋雑音）"""
    n = plan.n_samples
    noise = synthesize_colored_noise(plan.psd, plan.fs, n, seed)
    scenario = plan.psd.scenario
    t = np.arange(n) / plan.fs
    samples = np.asarray(beat_signal(t, scenario)) + noise.samples
    return TimeSeries(
        sample_rate=plan.fs,
        samples=samples,
        seed=seed,
        scenario_hash=scenario.digest(),
        beat_omega=plan.beat_omega,
    )


def synthesize_photocurrent(
    scenario: Scenario,
    fs: Optional[float],
    duration: float,
    seed: int,
) -> TimeSeries:
    """シナリオの差動光電流記録を合成する

    samples = beat_signal(t) + χ(ω)（厳密形）の有色雑音

    Args:
        scenario: シナリオ
        fs: サンプリング周波数（None なら 16 × ビート周波数）
        duration: 記録時間
        seed: 乱数シード
    """
    plan = SynthesisPlan.for_scenario(scenario, duration=duration, fs=fs)
    series = synthesize_from_plan(plan, seed)
    logger.debug(f"光電流合成: n={len(series)}, fs={plan.fs:.6g}, seed={seed}, scenario={series.scenario_hash}")
    return series


def _beat_design(n: int, fs: float, omega: float, phase: float = 0.0) -> np.ndarray:
    arg = omega * np.arange(n) / fs - phase
    return np.column_stack([np.cos(arg), np.sin(arg)])


def fit_quadratures(samples: np.ndarray, fs: float, omega: float, phase: float = 0.0) -> Tuple[float, float]:
    """cos(ωt−φ), sin(ωt−φ) への最小二乗射影の係数"""
    design = _beat_design(samples.size, fs, omega, phase)
    coef, *_ = np.linalg.lstsq(design, samples, rcond=None)
    return float(coef[0]), float(coef[1])


def regress_out_beat(ts: TimeSeries, omega: Optional[float] = None) -> TimeSeries:
    """既知のビート周波数の cos/sin 成分を最小二乗で除去した揺らぎ成分"""
    omega = omega if omega is not None else ts.beat_omega
    if omega is None:
        return ts
    design = _beat_design(len(ts), ts.sample_rate, omega)
    coef, *_ = np.linalg.lstsq(design, ts.samples, rcond=None)
    return ts.with_samples(ts.samples - design @ coef)


def autocorrelation_estimate(ts: TimeSeries, max_lag: int) -> np.ndarray:
    """揺らぎの自己相関 ⟨ΔJ(t)ΔJ(t+τ)⟩ の偏りあり推定（ラグ 0..max_lag）

    Raises:
        LengthError: max_lag ≥ 記録長/4
    """
    n = len(ts)
    if max_lag < 0 or max_lag >= n / 4:
        raise LengthError(f"max_lag は 0 以上かつ記録長/4 未満が必要です: max_lag={max_lag}, n={n}")
    fluctuation = regress_out_beat(ts).samples
    full = signal.correlate(fluctuation, fluctuation, mode="full", method="fft")
    return full[n - 1: n + max_lag] / n


def expected_autocorrelation(psd: PsdFunction, fs: float, n: int, max_lag: int) -> np.ndarray:
    """合成格子上の目標PSDから求めた自己相関の期待値（偏りあり推定の (n−k)/n 因子込み）"""
    n_fft = max(MIN_FFT_SIZE, next_power_of_two(n))
    freqs = np.fft.rfftfreq(n_fft, d=1.0 / fs)
    power = 0.5 * psd_on_grid(psd, freqs) * fs * n_fft
    acf = np.fft.irfft(power, n=n_fft)[: max_lag + 1] / n_fft
    lags = np.arange(max_lag + 1)
    return acf * (n - lags) / n
